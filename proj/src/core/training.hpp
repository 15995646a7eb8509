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

#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "core/dataset.hpp"
#include "core/network.hpp"
#include "core/ngnv.hpp"

namespace pann {

struct MixupConfig {
  bool enabled = false;
  double alpha = 0.5;
  /// Fixed mixing weight instead of a Beta(alpha, alpha) draw.
  std::optional<double> force_lambda;

  void validate() const;
};

/// lr(epoch) = base * gamma^(number of milestones <= epoch).
struct LrSchedule {
  double base = 0.1;
  std::vector<std::size_t> milestones;
  double gamma = 0.1;

  double at(std::size_t epoch) const;
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  LrSchedule lr;
  double momentum = 0.9;
  double weight_decay = 0.0;
  MixupConfig mixup;
  NgnvConfig ngnv;
  LossKind loss = LossKind::kCrossEntropy;
  std::uint64_t seed = 1;
  /// Clean (no NGNV, no Mixup) pass over the training set after every epoch.
  bool eval_train = true;
  std::size_t eval_batch = 256;

  void validate() const;
};

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& cfg);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double objective = 0.0;  // mean minibatch loss as optimized
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
};

struct TrainResult {
  Network net;
  std::vector<EpochMetrics> history;
};

using EpochCallback = std::function<void(const EpochMetrics&, const Network&)>;

/// x~ = lam x + (1 - lam) x', y~ = lam y + (1 - lam) y'. lam = 1 returns the
/// first pair bit for bit.
std::pair<Tensor, Tensor> mixup_batch(const Tensor& x, const Tensor& x2, const Tensor& y,
                                      const Tensor& y2, double lambda);

/// Minibatch SGD. Shuffling, Mixup and NGNV each draw from their own stream
/// derived from cfg.seed, so disabling one leaves the others untouched.
/// NGNV acts only inside training forwards. Throws kDiverged naming the epoch
/// on a non-finite loss.
TrainResult train(Network net, const Dataset& train_set, const Dataset* test_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Epoch (1-based) at which the clean training loss first plateaus: relative
/// improvement below `rel_tol` across the next `window` epochs. Returns
/// std::nullopt when no plateau occurs.
std::optional<std::size_t> plateau_epoch(const std::vector<EpochMetrics>& history,
                                         double rel_tol = 1e-4, std::size_t window = 5);

}  // namespace pann
