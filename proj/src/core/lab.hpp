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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/appsgn.hpp"
#include "core/dataset.hpp"
#include "core/fixed_point.hpp"
#include "core/network.hpp"
#include "core/training.hpp"

namespace pann {

struct PannEval {
  int beta = 0;
  double bound = 0.0;  // B used for the approximant
  EvalResult result;
};

/// Composite-approximant PANN of `backbone` at precision beta, evaluated on
/// `eval`. B comes from `bound` or, when absent, from calibration on `calib`.
PannEval evaluate_pann(const Network& backbone, const Dataset& calib, const Dataset& eval, int beta,
                       std::optional<double> bound = {},
                       OverflowPolicy overflow = OverflowPolicy::kClampToB);

struct PerturbationSpec {
  std::vector<int> betas{10};
  std::vector<SignFilter> filters{SignFilter::kNegOnly, SignFilter::kPosOnly};
  InjectionKind kind = InjectionKind::kUniformRandom;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  /// Average each draw e with its negation -e so the first-order term of the
  /// injected noise cancels.
  bool antithetic = true;
  std::size_t batch_size = 256;

  void validate() const;
};

PerturbationSpec perturbation_spec_from_json(const nlohmann::json& j);

struct PerturbationRow {
  int beta = 0;
  SignFilter filter = SignFilter::kAll;
  /// Noise seed; empty marks the mean over seeds.
  std::optional<std::uint64_t> seed;
  double base_loss = 0.0;
  double loss = 0.0;
  double delta = 0.0;  // loss - base_loss
};

/// Test-loss increment of injected-error PANNs over the backbone for every
/// (beta, filter, seed), followed by one aggregate row per (beta, filter).
/// Filters share the seed, so neg/pos comparisons see the same draws.
std::vector<PerturbationRow> perturbation_loss_experiment(const Network& net, const Dataset& eval,
                                                          const PerturbationSpec& spec);

/// Mean delta of the aggregate row for (beta, filter); throws kInvalidArgument
/// when absent.
double aggregate_delta(const std::vector<PerturbationRow>& rows, int beta, SignFilter filter);

enum class SweepMetric { kPannAccuracy, kDeltaTestLoss };

const char* to_string(SweepMetric m);
SweepMetric parse_sweep_metric(const std::string& s);

/// Grid for the weight-decay sweep. `epochs` lists the training lengths at
/// which PANNs are evaluated; the epochs-past-plateau value t' of each point is
/// derived after training.
struct SweepSpec {
  std::vector<double> weight_decays{0.0, 1e-3, 5e-3};
  std::vector<std::size_t> epochs{10};
  std::vector<int> betas{6};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  SweepMetric metric = SweepMetric::kPannAccuracy;
  std::size_t workers = 1;
  /// Extra identity (dataset spec and similar) folded into every cell hash.
  nlohmann::json context = nlohmann::json::object();
  /// Cells whose config hash satisfies this predicate are not run.
  std::function<bool(const std::string&)> skip_cell;

  void validate() const;
};

SweepSpec sweep_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SweepSpec& s);

/// One metric value of the sweep table.
struct SweepRow {
  std::string config_hash;
  double wd = 0.0;
  std::size_t epochs = 0;
  std::optional<std::size_t> t_prime;  // empty when no plateau by `epochs`
  int beta = 0;                        // 0 for backbone rows
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
};

struct SweepCellStatus {
  std::string config_hash;
  double wd = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  bool skipped = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;           // spec.metric, one per (cell, epoch, beta)
  std::vector<SweepRow> backbone_rows;  // backbone accuracy and test loss per (cell, epoch)
  std::vector<SweepCellStatus> cells;   // ordered by config hash
  /// Mean of spec.metric over seeds for every (wd, epochs, beta).
  nlohmann::json trend;
};

/// Trains one network per (wd, seed) cell from `arch` on `data`, evaluating
/// backbone and PANN at every grid epoch. Cells run on a bounded worker pool
/// and are merged in config-hash order. A diverging cell is recorded as
/// failed and contributes no rows.
SweepResult weight_decay_sweep(const SweepSpec& spec, const nlohmann::json& arch,
                               const DatasetSplit& data, const TrainConfig& base);

/// Stable hash of a JSON config, 16 lowercase hex digits.
std::string config_hash(const nlohmann::json& config);

/// Method label from the training configuration: vanilla, mixup, ngnv or
/// mixup+ngnv.
std::string method_name(const TrainConfig& cfg);

/// Accuracy with every ReLU input quantized to `fmt` and gated by the
/// truncation sign protocol; the rest of the network stays in full precision.
EvalResult truncated_relu_network_eval(const Network& net, const Dataset& eval,
                                       const FixedPointFormat& fmt);

}  // namespace pann
