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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "core/network.hpp"
#include "core/rng.hpp"

namespace pann::testing {

/// Signs of every activation-slot input; a change between the two
/// finite-difference evaluations means the step crossed a ReLU kink and the
/// central difference no longer approximates the derivative.
inline std::vector<bool> activation_pattern(const Network& net, const Tensor& x) {
  const auto fwd = forward(net, x);
  std::vector<bool> out;
  for (std::size_t k = 0; k < fwd.trace.activation_layers.size(); ++k)
    for (double z : fwd.trace.preactivation(k).values()) out.push_back(z > 0.0);
  return out;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

/// Compares backward() with central differences on every parameter. Relative
/// error is |a - f| / max(|a|, |f|, floor).
inline GradCheck check_gradients(Network net, const Tensor& x, const Tensor& target, LossKind kind,
                                 double step = 1e-5, double floor = 1e-6) {
  GradCheck out;
  const auto fwd = forward(net, x);
  const auto grads = backward(net, fwd, target, kind);
  auto params = net.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& w = *params[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + step;
      const double up = loss_value(predict(net, x), target, kind);
      const auto pattern_up = activation_pattern(net, x);
      w[i] = saved - step;
      const double down = loss_value(predict(net, x), target, kind);
      const auto pattern_down = activation_pattern(net, x);
      w[i] = saved;
      if (pattern_up != pattern_down) {
        ++out.skipped_kinks;
        continue;
      }
      const double fd = (up - down) / (2.0 * step);
      const double ad = grads.params[k][i];
      const double rel =
          std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), floor});
      out.max_rel_error = std::max(out.max_rel_error, rel);
      ++out.checked;
    }
  }
  return out;
}

/// Random MLP (1-3 Dense layers, widths <= 64) or a one-conv CNN, with a
/// random batch and one-hot targets.
struct RandomCase {
  Network net;
  Tensor x;
  Tensor target;
  LossKind kind;
};

inline RandomCase random_case(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "gradcheck"));
  const std::size_t classes = 2 + rng.index(3);
  const std::size_t batch = 2 + rng.index(3);
  nlohmann::json arch;
  Shape input;
  if (seed % 5 == 4) {
    arch = {{"type", "cnn"}, {"channels", {2}}, {"kernel", 3}, {"pool", 2}, {"padding", "same"}};
    input = {1, 6, 6};
  } else {
    const std::size_t depth = rng.index(3);  // hidden layers, so 1-3 Dense layers
    std::vector<std::size_t> hidden;
    for (std::size_t d = 0; d < depth; ++d) hidden.push_back(1 + rng.index(64));
    arch = {{"type", "mlp"}, {"hidden", hidden}};
    input = {1 + rng.index(8)};
  }
  RandomCase c{build_network(arch, input, classes, seed), {}, {}, LossKind::kCrossEntropy};
  Shape xs{batch};
  xs.insert(xs.end(), input.begin(), input.end());
  c.x = Tensor(xs);
  for (double& v : c.x.values()) v = rng.uniform(-1.0, 1.0);
  std::vector<int> labels(batch);
  for (int& l : labels) l = static_cast<int>(rng.index(classes));
  c.target = one_hot(labels, classes);
  c.kind = seed % 2 == 0 ? LossKind::kCrossEntropy : LossKind::kMse;
  return c;
}

}  // namespace pann::testing
