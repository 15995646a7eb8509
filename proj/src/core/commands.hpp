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

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/activation.hpp"
#include "core/appsgn.hpp"
#include "core/dataset.hpp"
#include "core/network.hpp"
#include "core/training.hpp"
#include "core/transform.hpp"

namespace pann {

struct RunOptions {
  std::string out_dir = "runs";
  /// Re-run configs whose hash is already committed.
  bool force = false;
  /// Progress lines; nullptr keeps the run silent.
  std::ostream* log = nullptr;
};

struct CommandResult {
  int exit_status = 0;
  nlohmann::json report = nlohmann::json::object();
  std::size_t new_rows = 0;
  bool skipped = false;
};

/// train, transform, eval-pann, sweep-wd, sweep-beta, trunc-sweep, perturb-exp,
/// validate-theorems, attack, approx.
const std::vector<std::string>& command_names();

/// Runs one subcommand. Metric rows go to <out_dir>/records.csv through the
/// record store, plot data to <out_dir>/<command>_plot.csv and the report to
/// <out_dir>/<command>_report.json. Configs are checked for unknown fields.
CommandResult run_command(const std::string& name, const nlohmann::json& config,
                          const RunOptions& options);

/// Parses config text; syntax errors name line and column.
nlohmann::json parse_config_text(const std::string& text, const std::string& what);

/// Reads a config file whose "command" field selects the subcommand.
CommandResult run_config_file(const std::string& path, const RunOptions& options);

/// Short architecture label, e.g. mlp-256x256 or cnn-8x16-k5-p2.
std::string arch_label(const nlohmann::json& arch);

/// Activation mode plus transform settings described by a "mode" section:
/// exact_relu, composite (beta, bound, overflow, max_stage_degree), injected
/// (beta, filter, kind, seed), partial_replace (poly, c) or truncated (lx,
/// frac_bits). A composite mode without a bound calibrates B on `calib`.
struct ModeSpec {
  ActivationMode mode;
  IntervalPolicy policy;
  TransformOptions options;
  std::optional<int> beta;  // beta, or l_x for truncated
};

ModeSpec mode_spec_from_json(const nlohmann::json& m, const Network& net, const Dataset* calib);

/// A backbone together with the provenance used for its record rows.
struct ModelEntry {
  std::uint64_t seed = 0;
  Network net;
  std::string arch;
  std::string method;
  double wd = 0.0;
  std::size_t epochs = 0;
};

/// Models named by a config: "model" (one checkpoint), "models" (several) or
/// "arch" + "train" + optional "seeds" (trained here, cached under
/// "model_cache" when given).
std::vector<ModelEntry> obtain_models(const nlohmann::json& config, const DatasetSplit& data,
                                      const RunOptions& options);

/// Trains `arch` with `cfg` or loads the cached checkpoint keyed by the full
/// configuration. An empty cache_dir disables caching.
Network train_or_load(const nlohmann::json& arch, const TrainConfig& cfg, const DatasetSpec& spec,
                      const DatasetSplit& data, const std::string& cache_dir);

}  // namespace pann
