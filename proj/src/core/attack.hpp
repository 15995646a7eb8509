// Copyright 2026 The Sturdy PANN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/dataset.hpp"
#include "core/network.hpp"

namespace pann {

struct AttackConfig {
  double alpha = 0.05;                // gradient ascent step
  double eps = 0.1;                   // infinity-norm clip bound
  double eps_atk = 1e-12;             // min |grad_pann - grad_backbone| per coordinate
  double eps_lim = std::numeric_limits<double>::infinity();  // max backbone gradient change
  double search_radius = 0.02;        // random-search ball radius
  std::size_t search_draws = 8;
  std::size_t max_iterations = 200;
  std::size_t backtrack_depth = 16;   // consecutive backtracks before giving up
  std::uint64_t seed = 1;

  void validate() const;
};

AttackConfig attack_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AttackConfig& c);

struct AttackStep {
  std::size_t iteration = 0;
  int backbone_pred = 0;
  int pann_pred = 0;
  bool backtracked = false;
  double alpha = 0.0;  // step length used in this iteration
};

struct AttackOutcome {
  bool success = false;
  Tensor delta;  // accepted perturbation, same shape as x
  std::string failure;
  std::size_t iterations = 0;
  std::vector<AttackStep> trace;
};

/// Searches delta with ||delta||_inf <= eps such that the backbone still
/// predicts y on x + delta while the PANN does not. x is one sample of shape
/// [1, input_shape...]. Each iteration: gradient ascent on the PANN loss,
/// clip, random search, clip, then the two coordinate masks; a step that flips
/// the backbone is reverted to the last accepted delta and alpha is halved for
/// the retry. Throws kPrecondition when the backbone misclassifies x.
AttackOutcome attack_pann(const Tensor& x, int y, const Network& backbone, const Network& pann,
                          const AttackConfig& cfg);

/// Recomputes both predictions from scratch: true iff ||delta||_inf <= eps,
/// backbone(x + delta) = y and pann(x + delta) != y.
bool verify_outcome(const Tensor& x, int y, const Tensor& delta, const Network& backbone,
                    const Network& pann, double eps);

/// Label predicted for a single sample [1, ...], evaluated alone so injected
/// errors do not depend on batch position.
int predict_one(const Network& net, const Tensor& x);

/// Number of points on the grid {-eps, ..., eps}^d (step eps / steps) where
/// the backbone predicts y and the PANN does not.
std::size_t grid_discrepancy_count(const Tensor& x, int y, const Network& backbone,
                                   const Network& pann, double eps, std::size_t steps = 50);

/// Toy 2-input, 4-hidden network trained on two-moons data, with its
/// injected-error PANN at precision beta.
struct ToyAttackInstance {
  Network backbone;
  Network pann;
  Dataset data;
};

ToyAttackInstance make_toy_attack_instance(int beta = 4, std::uint64_t seed = 1);

nlohmann::json to_json(const AttackOutcome& o);

}  // namespace pann
