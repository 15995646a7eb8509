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

#include "core/lab.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

#include "core/error.hpp"
#include "core/pool.hpp"
#include "core/rng.hpp"
#include "core/transform.hpp"

namespace pann {

PannEval evaluate_pann(const Network& backbone, const Dataset& calib, const Dataset& eval, int beta,
                       std::optional<double> bound, OverflowPolicy overflow) {
  PannEval out;
  out.beta = beta;
  TransformOptions opts;
  if (!bound || overflow == OverflowPolicy::kWidenAndRecertify)
    opts.calibration_max = calibrate_max_preactivation(backbone, calib.x);
  out.bound = bound ? *bound : std::max(1.2 * *opts.calibration_max, 1e-6);
  const Network pann = transform(backbone, make_composite_mode(beta, out.bound, overflow),
                                 IntervalPolicy{out.bound, overflow}, opts);
  out.result = evaluate(pann, eval.x, eval.labels);
  return out;
}

void PerturbationSpec::validate() const {
  require(!betas.empty() && !filters.empty() && !seeds.empty(), ErrorCode::kInvalidArgument,
          "perturbation experiment: beta, filter and seed grids must be non-empty");
  require(batch_size > 0, ErrorCode::kInvalidArgument,
          "perturbation experiment: batch size must be positive");
  for (int b : betas)
    require(b >= 1 && b <= 60, ErrorCode::kInvalidArgument,
            "perturbation experiment: beta must lie in [1, 60]");
}

PerturbationSpec perturbation_spec_from_json(const nlohmann::json& j) {
  PerturbationSpec s;
  try {
    s.betas = j.value("betas", s.betas);
    s.seeds = j.value("seeds", s.seeds);
    s.antithetic = j.value("antithetic", s.antithetic);
    s.batch_size = j.value("batch_size", s.batch_size);
    if (j.contains("filters")) {
      s.filters.clear();
      for (const auto& f : j.at("filters")) s.filters.push_back(parse_sign_filter(f.get<std::string>()));
    }
    if (j.contains("kind")) s.kind = parse_injection_kind(j.at("kind").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("perturbation spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::vector<PerturbationRow> perturbation_loss_experiment(const Network& net, const Dataset& eval,
                                                          const PerturbationSpec& spec) {
  spec.validate();
  require(eval.size() > 0, ErrorCode::kInvalidArgument, "perturbation experiment: empty eval set");
  const double base = evaluate(net, eval.x, eval.labels, spec.batch_size).loss;
  auto loss_of = [&](const InjectedMode& m) {
    return evaluate(transform(net, m, IntervalPolicy{}), eval.x, eval.labels, spec.batch_size).loss;
  };

  std::vector<PerturbationRow> rows;
  for (int beta : spec.betas) {
    for (SignFilter filter : spec.filters) {
      double sum = 0.0;
      for (std::uint64_t seed : spec.seeds) {
        InjectedMode mode{beta, filter, spec.kind, seed, false};
        double loss = loss_of(mode);
        if (spec.antithetic) {
          mode.negate = true;
          loss = 0.5 * (loss + loss_of(mode));
        }
        rows.push_back({beta, filter, seed, base, loss, loss - base});
        sum += loss;
      }
      const double mean = sum / static_cast<double>(spec.seeds.size());
      rows.push_back({beta, filter, std::nullopt, base, mean, mean - base});
    }
  }
  return rows;
}

double aggregate_delta(const std::vector<PerturbationRow>& rows, int beta, SignFilter filter) {
  for (const auto& r : rows)
    if (!r.seed && r.beta == beta && r.filter == filter) return r.delta;
  fail(ErrorCode::kInvalidArgument, "no aggregate row for beta=" + std::to_string(beta) +
                                        " filter=" + to_string(filter));
}

const char* to_string(SweepMetric m) {
  return m == SweepMetric::kPannAccuracy ? "pann_accuracy" : "delta_test_loss";
}

SweepMetric parse_sweep_metric(const std::string& s) {
  if (s == "pann_accuracy") return SweepMetric::kPannAccuracy;
  if (s == "delta_test_loss") return SweepMetric::kDeltaTestLoss;
  fail(ErrorCode::kParse, "unknown sweep metric '" + s + "'");
}

void SweepSpec::validate() const {
  require(!weight_decays.empty() && !epochs.empty() && !betas.empty() && !seeds.empty(),
          ErrorCode::kInvalidArgument, "sweep: every grid must be non-empty");
  for (double wd : weight_decays)
    require(wd >= 0.0, ErrorCode::kInvalidArgument, "sweep: weight decay must be >= 0");
  for (std::size_t e : epochs) require(e > 0, ErrorCode::kInvalidArgument, "sweep: epochs must be > 0");
  for (int b : betas) require(b >= 1, ErrorCode::kInvalidArgument, "sweep: beta must be >= 1");
}

SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
  SweepSpec s;
  try {
    s.weight_decays = j.value("weight_decays", s.weight_decays);
    s.epochs = j.value("epochs", s.epochs);
    s.betas = j.value("betas", s.betas);
    s.seeds = j.value("seeds", s.seeds);
    s.workers = j.value("workers", s.workers);
    if (j.contains("metric")) s.metric = parse_sweep_metric(j.at("metric").get<std::string>());
    if (j.contains("context")) s.context = j.at("context");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("sweep spec: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const SweepSpec& s) {
  return {{"weight_decays", s.weight_decays}, {"epochs", s.epochs},   {"betas", s.betas},
          {"seeds", s.seeds},                 {"metric", to_string(s.metric)},
          {"context", s.context}};
}

std::string config_hash(const nlohmann::json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

std::string method_name(const TrainConfig& cfg) {
  const bool mix = cfg.mixup.enabled;
  const bool noise = cfg.ngnv.active();
  if (mix && noise) return "mixup+ngnv";
  if (mix) return "mixup";
  if (noise) return "ngnv";
  return "vanilla";
}

namespace {

struct CellOutput {
  std::vector<SweepRow> rows;
  std::vector<SweepRow> backbone_rows;
  SweepCellStatus status;
};

CellOutput run_cell(const SweepSpec& spec, const nlohmann::json& arch, const DatasetSplit& data,
                    TrainConfig cfg, const std::string& hash) {
  CellOutput out;
  out.status = {hash, cfg.weight_decay, cfg.seed, false, false, {}};
  const std::size_t last = *std::max_element(spec.epochs.begin(), spec.epochs.end());
  cfg.epochs = last;
  cfg.eval_train = true;
  Network net = build_network(arch, data.train.sample_shape(), data.train.classes, cfg.seed);

  auto record = [&](std::vector<SweepRow>& dst, std::size_t epoch, int beta, const char* metric,
                    double value) {
    dst.push_back({hash, cfg.weight_decay, epoch, std::nullopt, beta, cfg.seed, metric, value});
  };
  auto on_epoch = [&](const EpochMetrics& m, const Network& current) {
    if (std::find(spec.epochs.begin(), spec.epochs.end(), m.epoch) == spec.epochs.end()) return;
    const EvalResult bb = evaluate(current, data.test.x, data.test.labels);
    record(out.backbone_rows, m.epoch, 0, "backbone_accuracy", bb.accuracy);
    record(out.backbone_rows, m.epoch, 0, "backbone_test_loss", bb.loss);
    for (int beta : spec.betas) {
      const PannEval p = evaluate_pann(current, data.train, data.test, beta);
      const double v = spec.metric == SweepMetric::kPannAccuracy ? p.result.accuracy
                                                                 : p.result.loss - bb.loss;
      record(out.rows, m.epoch, beta, to_string(spec.metric), v);
    }
  };

  try {
    const TrainResult r = train(std::move(net), data.train, nullptr, cfg, on_epoch);
    const auto plateau = plateau_epoch(r.history);
    for (auto* rows : {&out.rows, &out.backbone_rows}) {
      for (auto& row : *rows)
        if (plateau && *plateau <= row.epochs) row.t_prime = row.epochs - *plateau;
    }
    out.status.ok = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDiverged) throw;
    out.rows.clear();
    out.backbone_rows.clear();
    out.status.error = e.what();
  }
  return out;
}

}  // namespace

SweepResult weight_decay_sweep(const SweepSpec& spec, const nlohmann::json& arch,
                               const DatasetSplit& data, const TrainConfig& base) {
  spec.validate();
  base.validate();
  require(data.train.size() > 0 && data.test.size() > 0, ErrorCode::kInvalidArgument,
          "sweep: train and test splits must be non-empty");

  struct Cell {
    TrainConfig cfg;
    std::string hash;
  };
  std::vector<Cell> cells;
  for (double wd : spec.weight_decays) {
    for (std::uint64_t seed : spec.seeds) {
      Cell c{base, {}};
      c.cfg.weight_decay = wd;
      c.cfg.seed = seed;
      nlohmann::json id{{"arch", arch},
                        {"train", to_json(c.cfg)},
                        {"grid", {{"epochs", spec.epochs}, {"betas", spec.betas}}},
                        {"metric", to_string(spec.metric)},
                        {"context", spec.context}};
      c.hash = config_hash(id);
      cells.push_back(std::move(c));
    }
  }
  std::stable_sort(cells.begin(), cells.end(),
                   [](const Cell& a, const Cell& b) { return a.hash < b.hash; });

  std::vector<CellOutput> outputs(cells.size());
  parallel_for(cells.size(), spec.workers, [&](std::size_t i) {
    if (spec.skip_cell && spec.skip_cell(cells[i].hash)) {
      outputs[i].status = {cells[i].hash, cells[i].cfg.weight_decay, cells[i].cfg.seed, false, true, {}};
      return;
    }
    outputs[i] = run_cell(spec, arch, data, cells[i].cfg, cells[i].hash);
  });

  SweepResult result;
  for (auto& o : outputs) {
    result.rows.insert(result.rows.end(), o.rows.begin(), o.rows.end());
    result.backbone_rows.insert(result.backbone_rows.end(), o.backbone_rows.begin(),
                                o.backbone_rows.end());
    result.cells.push_back(o.status);
  }

  std::map<std::tuple<double, std::size_t, int>, std::pair<double, std::size_t>> acc;
  for (const auto& r : result.rows) {
    auto& slot = acc[{r.wd, r.epochs, r.beta}];
    slot.first += r.value;
    slot.second += 1;
  }
  result.trend = nlohmann::json::array();
  for (const auto& [key, v] : acc) {
    const auto& [wd, epochs, beta] = key;
    result.trend.push_back({{"wd", wd},
                            {"epochs", epochs},
                            {"beta", beta},
                            {"metric", to_string(spec.metric)},
                            {"mean", v.first / static_cast<double>(v.second)},
                            {"seeds", v.second}});
  }
  return result;
}

EvalResult truncated_relu_network_eval(const Network& net, const Dataset& eval,
                                       const FixedPointFormat& fmt) {
  fmt.validate();
  return evaluate(transform(net, TruncatedMode{fmt}, IntervalPolicy{}), eval.x, eval.labels);
}

}  // namespace pann
