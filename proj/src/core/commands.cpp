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

#include "core/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "core/appsgn.hpp"
#include "core/attack.hpp"
#include "core/error.hpp"
#include "core/lab.hpp"
#include "core/pool.hpp"
#include "core/probes.hpp"
#include "core/records.hpp"
#include "core/rng.hpp"
#include "core/transform.hpp"

namespace pann {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void log_line(const RunOptions& o, const std::string& cmd, const std::string& msg) {
  if (o.log) *o.log << '[' << cmd << "] " << msg << std::endl;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), ErrorCode::kParse, where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(ErrorCode::kParse,
           "config field '" + (where.empty() ? key : where + "." + key) +
               "' is not recognized (allowed: " + list + ")");
    }
  }
}

template <class T>
T field(const json& j, const std::string& key, const T& fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, "config field '" + where + key + "': " + e.what());
  }
}

template <class T>
T required_field(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorCode::kParse, "config field '" + where + key + "' is required");
  return field<T>(j, key, T{}, where);
}

/// Wraps a sub-parser so its errors carry the field path.
template <class F>
auto parse_section(const json& j, const std::string& key, F parse) {
  try {
    return parse(j.at(key));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse || e.code() == ErrorCode::kInvalidArgument)
      fail(ErrorCode::kParse, "config field '" + key + "': " + e.what());
    throw;
  }
}

std::string out_path(const RunOptions& o, const std::string& name) {
  return (fs::path(o.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path);
  out << text;
}

std::string plot_name(const std::string& command) { return command + "_plot.csv"; }

DatasetSpec dataset_of(const json& c) {
  if (!c.contains("dataset")) fail(ErrorCode::kParse, "config field 'dataset' is required");
  return parse_section(c, "dataset", dataset_spec_from_json);
}

std::string dataset_label(const DatasetSpec& s) { return to_string(s.source); }

TrainConfig train_of(const json& c) {
  if (!c.contains("train")) return TrainConfig{};
  return parse_section(c, "train", train_config_from_json);
}

std::string joined(const json& arr, const char* sep) {
  std::string s;
  for (const auto& v : arr) s += (s.empty() ? "" : sep) + v.dump();
  return s;
}

ExperimentRecord base_record(const std::string& hash, const ModelEntry& m, const DatasetSpec& ds) {
  ExperimentRecord r;
  r.config_hash = hash;
  r.arch = m.arch;
  r.dataset = dataset_label(ds);
  r.method = m.method;
  r.wd = m.wd;
  r.epochs = m.epochs;
  r.seed = m.seed;
  return r;
}

ExperimentRecord metric_row(ExperimentRecord r, std::optional<int> beta, const std::string& metric,
                            double value) {
  r.beta = beta;
  r.metric = metric;
  r.value = value;
  return r;
}

json model_keys_schema() {
  return json::array({"model", "models", "arch", "train", "seeds", "model_cache"});
}

std::set<std::string> with_model_keys(std::set<std::string> keys) {
  for (const auto& k : model_keys_schema()) keys.insert(k.get<std::string>());
  return keys;
}

// ---------------------------------------------------------------------------

using Handler = std::function<CommandResult(const json&, const RunOptions&, RecordStore&,
                                            const std::string& hash)>;

CommandResult cmd_train(const json& c, const RunOptions& o, RecordStore& store,
                        const std::string& hash) {
  check_keys(c, {"command", "dataset", "arch", "train", "out"}, "");
  const DatasetSpec ds = dataset_of(c);
  const json arch = required_field<json>(c, "arch", "");
  const TrainConfig cfg = train_of(c);
  const std::string out = field<std::string>(c, "out", out_path(o, "model.ckpt"), "");
  const DatasetSplit data = load_dataset(ds);

  Network net = build_network(arch, data.train.sample_shape(), data.train.classes, cfg.seed);
  std::string history = "epoch,lr,objective,train_loss,train_accuracy,test_loss,test_accuracy\n";
  auto on_epoch = [&](const EpochMetrics& m, const Network&) {
    history += std::to_string(m.epoch) + ',' + format_double(m.lr) + ',' +
               format_double(m.objective) + ',' + format_double(m.train_loss) + ',' +
               format_double(m.train_accuracy) + ',' + format_double(m.test_loss) + ',' +
               format_double(m.test_accuracy) + '\n';
    log_line(o, "train", "epoch " + std::to_string(m.epoch) + " loss " +
                             format_double(m.train_loss) + " test acc " +
                             format_double(m.test_accuracy));
  };
  TrainResult r = train(std::move(net), data.train, &data.test, cfg, on_epoch);
  r.net.metadata["arch"] = arch;
  r.net.metadata["train"] = to_json(cfg);
  r.net.metadata["dataset"] = to_json(ds);
  save_checkpoint(r.net, out);
  write_text(out_path(o, plot_name("train")), history);

  const EvalResult ev = evaluate(r.net, data.test.x, data.test.labels);
  ModelEntry me{cfg.seed, {}, arch_label(arch), method_name(cfg), cfg.weight_decay, cfg.epochs};
  const ExperimentRecord b = base_record(hash, me, ds);
  std::vector<ExperimentRecord> rows{metric_row(b, std::nullopt, "backbone_accuracy", ev.accuracy),
                                     metric_row(b, std::nullopt, "backbone_test_loss", ev.loss)};
  if (const auto p = plateau_epoch(r.history)) {
    for (auto& row : rows) row.t_prime = cfg.epochs >= *p ? cfg.epochs - *p : 0;
  }
  store.commit(hash, rows, c);
  CommandResult res;
  res.new_rows = rows.size();
  res.report = {{"checkpoint", out}, {"test_accuracy", ev.accuracy}, {"test_loss", ev.loss}};
  return res;
}

CommandResult cmd_transform(const json& c, const RunOptions& o, RecordStore& store,
                            const std::string& hash) {
  check_keys(c, {"command", "model", "mode", "dataset", "out"}, "");
  const Network net = load_checkpoint(required_field<std::string>(c, "model", ""));
  std::optional<DatasetSplit> data;
  if (c.contains("dataset")) data = load_dataset(dataset_of(c));
  const ModeSpec ms =
      mode_spec_from_json(required_field<json>(c, "mode", ""), net, data ? &data->train : nullptr);
  const Network pann = transform(net, ms.mode, ms.policy, ms.options);
  const std::string out = field<std::string>(c, "out", out_path(o, "pann.ckpt"), "");
  save_checkpoint(pann, out);
  store.commit(hash, {}, c);
  CommandResult res;
  res.report = {{"checkpoint", out}, {"pann", pann.metadata.value("pann", json::object())}};
  return res;
}

CommandResult cmd_eval_pann(const json& c, const RunOptions& o, RecordStore& store,
                            const std::string& hash) {
  check_keys(c, with_model_keys({"command", "dataset", "mode"}), "");
  const DatasetSpec ds = dataset_of(c);
  const DatasetSplit data = load_dataset(ds);
  const auto models = obtain_models(c, data, o);
  std::vector<ExperimentRecord> rows;
  json per_model = json::array();
  for (const auto& m : models) {
    const ModeSpec ms = mode_spec_from_json(required_field<json>(c, "mode", ""), m.net, &data.train);
    const Network pann = transform(m.net, ms.mode, ms.policy, ms.options);
    const EvalResult bb = evaluate(m.net, data.test.x, data.test.labels);
    const EvalResult pv = evaluate(pann, data.test.x, data.test.labels);
    const ExperimentRecord b = base_record(hash, m, ds);
    const double overflow =
        pv.stats.total ? static_cast<double>(pv.stats.overflow) / static_cast<double>(pv.stats.total)
                       : 0.0;
    rows.push_back(metric_row(b, std::nullopt, "backbone_accuracy", bb.accuracy));
    rows.push_back(metric_row(b, ms.beta, "pann_accuracy", pv.accuracy));
    rows.push_back(metric_row(b, ms.beta, "pann_test_loss", pv.loss));
    rows.push_back(metric_row(b, ms.beta, "overflow_fraction", overflow));
    per_model.push_back({{"seed", m.seed},
                         {"backbone_accuracy", bb.accuracy},
                         {"pann_accuracy", pv.accuracy},
                         {"pann_test_loss", pv.loss},
                         {"overflow_fraction", overflow},
                         {"bound", ms.policy.bound}});
    log_line(o, "eval-pann", "seed " + std::to_string(m.seed) + " backbone " +
                                 format_double(bb.accuracy) + " pann " + format_double(pv.accuracy));
  }
  store.commit(hash, rows, c);
  CommandResult res;
  res.new_rows = rows.size();
  res.report = {{"mode", c.at("mode")}, {"models", per_model}};
  return res;
}

CommandResult cmd_sweep_wd(const json& c, const RunOptions& o, RecordStore& store,
                           const std::string&) {
  check_keys(c, {"command", "dataset", "arch", "train", "sweep"}, "");
  const DatasetSpec ds = dataset_of(c);
  const json arch = required_field<json>(c, "arch", "");
  const TrainConfig base = train_of(c);
  SweepSpec spec = c.contains("sweep") ? parse_section(c, "sweep", sweep_spec_from_json) : SweepSpec{};
  spec.context = {{"command", "sweep-wd"}, {"dataset", to_json(ds)}};
  if (!o.force) spec.skip_cell = [&](const std::string& h) { return store.completed(h); };
  const DatasetSplit data = load_dataset(ds);
  const SweepResult r = weight_decay_sweep(spec, arch, data, base);

  std::map<std::string, std::vector<ExperimentRecord>> by_cell;
  const std::string method = method_name(base);
  for (const auto* list : {&r.backbone_rows, &r.rows}) {
    for (const auto& row : *list) {
      ExperimentRecord e;
      e.config_hash = row.config_hash;
      e.arch = arch_label(arch);
      e.dataset = dataset_label(ds);
      e.method = method;
      e.wd = row.wd;
      e.epochs = row.epochs;
      e.t_prime = row.t_prime;
      if (row.beta > 0) e.beta = row.beta;
      e.seed = row.seed;
      e.metric = row.metric;
      e.value = row.value;
      by_cell[row.config_hash].push_back(std::move(e));
    }
  }
  CommandResult res;
  json cells = json::array();
  bool any_failed = false;
  for (const auto& cell : r.cells) {
    const std::string status = cell.skipped ? "skipped" : cell.ok ? "ok" : "failed";
    any_failed = any_failed || (!cell.ok && !cell.skipped);
    cells.push_back({{"config_hash", cell.config_hash},
                     {"wd", cell.wd},
                     {"seed", cell.seed},
                     {"status", status},
                     {"error", cell.error}});
    log_line(o, "sweep-wd", "cell " + cell.config_hash + " wd " + format_double(cell.wd) +
                                " seed " + std::to_string(cell.seed) + " " + status);
    if (cell.skipped) continue;
    const auto& rows = by_cell[cell.config_hash];
    store.commit(cell.config_hash, rows, {{"sweep-wd", c}, {"wd", cell.wd}, {"seed", cell.seed}},
                 cell.ok ? "ok" : "failed");
    res.new_rows += rows.size();
  }
  if (res.new_rows > 0) {
    std::string plot = "wd,epochs,beta,metric,mean,seeds\n";
    for (const auto& t : r.trend) {
      plot += format_double(t.at("wd").get<double>()) + ',' + t.at("epochs").dump() + ',' +
              t.at("beta").dump() + ',' + t.at("metric").get<std::string>() + ',' +
              format_double(t.at("mean").get<double>()) + ',' + t.at("seeds").dump() + '\n';
    }
    write_text(out_path(o, plot_name("sweep-wd")), plot);
  }
  res.exit_status = any_failed ? 1 : 0;
  res.report = {{"cells", cells}, {"trend", r.trend}};
  return res;
}

CommandResult cmd_sweep_beta(const json& c, const RunOptions& o, RecordStore& store,
                             const std::string& hash) {
  check_keys(c, with_model_keys({"command", "dataset", "betas", "overflow"}), "");
  const DatasetSpec ds = dataset_of(c);
  const DatasetSplit data = load_dataset(ds);
  const auto betas = field<std::vector<int>>(c, "betas", {6, 7, 8, 9, 10, 11, 12}, "");
  require(!betas.empty(), ErrorCode::kParse, "config field 'betas' must be non-empty");
  const OverflowPolicy overflow =
      parse_overflow_policy(field<std::string>(c, "overflow", "clamp_to_B", ""));
  const auto models = obtain_models(c, data, o);

  std::vector<ExperimentRecord> rows;
  std::map<int, double> mean;
  for (const auto& m : models) {
    const ExperimentRecord b = base_record(hash, m, ds);
    rows.push_back(metric_row(
        b, std::nullopt, "backbone_accuracy", evaluate(m.net, data.test.x, data.test.labels).accuracy));
    for (int beta : betas) {
      const PannEval p = evaluate_pann(m.net, data.train, data.test, beta, std::nullopt, overflow);
      rows.push_back(metric_row(b, beta, "pann_accuracy", p.result.accuracy));
      mean[beta] += p.result.accuracy / static_cast<double>(models.size());
      log_line(o, "sweep-beta", "seed " + std::to_string(m.seed) + " beta " +
                                    std::to_string(beta) + " acc " +
                                    format_double(p.result.accuracy));
    }
  }
  std::string plot = "beta,mean_accuracy,seeds\n";
  std::size_t violations = 0;
  double prev = -1.0;
  for (int beta : betas) {
    plot += std::to_string(beta) + ',' + format_double(mean[beta]) + ',' +
            std::to_string(models.size()) + '\n';
    if (prev >= 0.0 && mean[beta] < prev - 0.005) ++violations;
    prev = mean[beta];
  }
  write_text(out_path(o, plot_name("sweep-beta")), plot);
  store.commit(hash, rows, c);
  CommandResult res;
  res.new_rows = rows.size();
  json m = json::object();
  for (const auto& [beta, v] : mean) m[std::to_string(beta)] = v;
  res.report = {{"mean_accuracy", m}, {"monotonicity_violations", violations}};
  return res;
}

CommandResult cmd_trunc_sweep(const json& c, const RunOptions& o, RecordStore& store,
                              const std::string& hash) {
  check_keys(c, with_model_keys({"command", "dataset", "lx"}), "");
  const DatasetSpec ds = dataset_of(c);
  const DatasetSplit data = load_dataset(ds);
  const auto lxs = field<std::vector<int>>(c, "lx", {6, 8, 10, 12, 14, 16}, "");
  require(!lxs.empty(), ErrorCode::kParse, "config field 'lx' must be non-empty");
  const auto models = obtain_models(c, data, o);
  std::vector<ExperimentRecord> rows;
  std::string plot = "lx,seed,accuracy\n";
  json report = json::array();
  for (const auto& m : models) {
    const ExperimentRecord b = base_record(hash, m, ds);
    rows.push_back(metric_row(
        b, std::nullopt, "backbone_accuracy", evaluate(m.net, data.test.x, data.test.labels).accuracy));
    for (int lx : lxs) {
      const EvalResult r =
          truncated_relu_network_eval(m.net, data.test, FixedPointFormat::half_split(lx));
      rows.push_back(metric_row(b, lx, "truncated_accuracy", r.accuracy));
      plot += std::to_string(lx) + ',' + std::to_string(m.seed) + ',' + format_double(r.accuracy) + '\n';
      report.push_back({{"lx", lx}, {"seed", m.seed}, {"accuracy", r.accuracy},
                        {"saturated", r.stats.saturated}});
      log_line(o, "trunc-sweep", "seed " + std::to_string(m.seed) + " lx " + std::to_string(lx) +
                                     " acc " + format_double(r.accuracy));
    }
  }
  write_text(out_path(o, plot_name("trunc-sweep")), plot);
  store.commit(hash, rows, c);
  CommandResult res;
  res.new_rows = rows.size();
  res.report = {{"rows", report}};
  return res;
}

CommandResult cmd_perturb_exp(const json& c, const RunOptions& o, RecordStore& store,
                              const std::string& hash) {
  check_keys(c, with_model_keys({"command", "dataset", "perturb"}), "");
  const DatasetSpec ds = dataset_of(c);
  const DatasetSplit data = load_dataset(ds);
  const PerturbationSpec spec = c.contains("perturb")
                                    ? parse_section(c, "perturb", perturbation_spec_from_json)
                                    : PerturbationSpec{};
  const auto models = obtain_models(c, data, o);
  std::vector<ExperimentRecord> rows;
  std::string plot = "model_seed,beta,filter,noise_seed,base_loss,loss,delta\n";
  json report = json::array();
  for (const auto& m : models) {
    const ExperimentRecord b = base_record(hash, m, ds);
    for (const auto& r : perturbation_loss_experiment(m.net, data.test, spec)) {
      plot += std::to_string(m.seed) + ',' + std::to_string(r.beta) + ',' + to_string(r.filter) +
              ',' + (r.seed ? std::to_string(*r.seed) : std::string("mean")) + ',' +
              format_double(r.base_loss) + ',' + format_double(r.loss) + ',' +
              format_double(r.delta) + '\n';
      if (r.seed) continue;
      rows.push_back(metric_row(b, r.beta, std::string("delta_test_loss_") + to_string(r.filter),
                                r.delta));
      report.push_back({{"model_seed", m.seed},
                        {"beta", r.beta},
                        {"filter", to_string(r.filter)},
                        {"delta", r.delta}});
      log_line(o, "perturb-exp", "seed " + std::to_string(m.seed) + " beta " +
                                     std::to_string(r.beta) + " " + to_string(r.filter) +
                                     " delta " + format_double(r.delta));
    }
  }
  write_text(out_path(o, plot_name("perturb-exp")), plot);
  store.commit(hash, rows, c);
  CommandResult res;
  res.new_rows = rows.size();
  res.report = {{"aggregates", report}};
  return res;
}

CommandResult cmd_validate_theorems(const json& c, const RunOptions& o, RecordStore& store,
                                    const std::string& hash) {
  check_keys(c, {"command"}, "");
  CommandResult res;
  res.report = run_theorem_suite();
  std::string plot = "probe_pair,eps,ratio,error\n";
  for (const auto& t : res.report.at("theorem1")) {
    const std::string pair = t.at("neg_probe").get<std::string>() + " vs " +
                             t.at("pos_probe").get<std::string>();
    for (const auto& row : t.at("rows")) {
      plot += csv_field(pair) + ',' + format_double(row.at("eps").get<double>()) + ',' +
              format_double(row.at("ratio").get<double>()) + ',' +
              format_double(row.at("error").get<double>()) + '\n';
    }
  }
  write_text(out_path(o, plot_name("validate-theorems")), plot);
  const bool pass = res.report.at("pass").get<bool>();
  store.commit(hash, {}, c, pass ? "ok" : "failed");
  log_line(o, "validate-theorems", pass ? "all checks pass" : "checks FAILED");
  res.exit_status = pass ? 0 : 1;
  return res;
}

CommandResult cmd_attack(const json& c, const RunOptions& o, RecordStore& store,
                         const std::string& hash) {
  check_keys(c, {"command", "model", "pann", "dataset", "toy", "attack", "seeds", "workers",
                 "dump_perturbations"},
             "");
  const AttackConfig base =
      c.contains("attack") ? parse_section(c, "attack", attack_config_from_json) : AttackConfig{};
  const std::size_t attempts = field<std::size_t>(c, "seeds", 100, "");
  const std::size_t workers = field<std::size_t>(c, "workers", 1, "");
  const bool dump = field<bool>(c, "dump_perturbations", false, "");

  Network backbone, pann;
  Dataset pool_set;
  std::string arch = "toy-2x4", ds_label = "synthetic_moons";
  if (c.contains("toy")) {
    const json& t = c.at("toy");
    check_keys(t, {"beta", "seed"}, "toy");
    auto inst = make_toy_attack_instance(field<int>(t, "beta", 4, "toy."),
                                         field<std::uint64_t>(t, "seed", 1, "toy."));
    backbone = std::move(inst.backbone);
    pann = std::move(inst.pann);
    pool_set = std::move(inst.data);
  } else {
    backbone = load_checkpoint(required_field<std::string>(c, "model", ""));
    pann = load_checkpoint(required_field<std::string>(c, "pann", ""));
    const DatasetSpec ds = dataset_of(c);
    pool_set = load_dataset(ds).test;
    ds_label = dataset_label(ds);
    arch = arch_label(backbone.metadata.value("arch", json::object()));
  }

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < pool_set.size(); ++i) {
    const Tensor x = pool_set.x.slice_rows(i, i + 1);
    const int y = pool_set.labels[i];
    if (predict_one(backbone, x) == y && predict_one(pann, x) == y) candidates.push_back(i);
  }
  require(!candidates.empty(), ErrorCode::kPrecondition,
          "attack: no sample is classified correctly by both networks");

  struct Attempt {
    std::size_t index = 0;
    AttackOutcome outcome;
    bool verified = false;
  };
  std::vector<Attempt> results(attempts);
  parallel_for(attempts, workers, [&](std::size_t k) {
    const std::uint64_t seed = k + 1;
    const std::size_t pick = std::min(
        candidates.size() - 1,
        static_cast<std::size_t>(hash_uniform(seed, 0) * static_cast<double>(candidates.size())));
    Attempt& a = results[k];
    a.index = candidates[pick];
    AttackConfig cfg = base;
    cfg.seed = seed;
    const Tensor x = pool_set.x.slice_rows(a.index, a.index + 1);
    const int y = pool_set.labels[a.index];
    a.outcome = attack_pann(x, y, backbone, pann, cfg);
    a.verified = a.outcome.success && verify_outcome(x, y, a.outcome.delta, backbone, pann, cfg.eps);
  });

  json per = json::array();
  std::size_t successes = 0, verified = 0;
  std::string deltas = "seed,sample,coordinate,delta\n";
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& a = results[k];
    json j = to_json(a.outcome);
    j["seed"] = k + 1;
    j["sample"] = a.index;
    j["verified"] = a.verified;
    per.push_back(std::move(j));
    successes += a.outcome.success ? 1 : 0;
    verified += a.verified ? 1 : 0;
    if (dump && a.outcome.success) {
      for (std::size_t i = 0; i < a.outcome.delta.size(); ++i) {
        deltas += std::to_string(k + 1) + ',' + std::to_string(a.index) + ',' + std::to_string(i) +
                  ',' + format_double(a.outcome.delta[i]) + '\n';
      }
    }
  }
  if (dump) write_text(out_path(o, "attack_perturbations.csv"), deltas);
  ExperimentRecord b;
  b.config_hash = hash;
  b.arch = arch;
  b.dataset = ds_label;
  b.method = "attack";
  const std::vector<ExperimentRecord> rows{
      metric_row(b, std::nullopt, "attack_success_rate",
                 static_cast<double>(successes) / static_cast<double>(attempts)),
      metric_row(b, std::nullopt, "attack_verified_successes", static_cast<double>(verified))};
  store.commit(hash, rows, c);
  log_line(o, "attack", std::to_string(successes) + "/" + std::to_string(attempts) +
                            " successes, " + std::to_string(verified) + " verified");
  CommandResult res;
  res.new_rows = rows.size();
  res.report = {{"attempts", attempts},
                {"successes", successes},
                {"verified", verified},
                {"config", to_json(base)},
                {"samples", per}};
  res.exit_status = verified == successes ? 0 : 1;
  return res;
}

CommandResult cmd_approx(const json& c, const RunOptions& o, RecordStore& store,
                         const std::string& hash) {
  check_keys(c, {"command", "beta", "bound", "eps0", "max_stage_degree", "out"}, "");
  const int beta = required_field<int>(c, "beta", "");
  const double bound = field<double>(c, "bound", 1.0, "");
  const double eps0 = field<double>(c, "eps0", std::ldexp(bound, -beta), "");
  const int deg = field<int>(c, "max_stage_degree", 15, "");
  const auto approx = CompositeSgnApprox::build(beta, eps0, bound, deg);
  const std::string out = field<std::string>(c, "out", out_path(o, "approx.json"), "");
  write_text(out, to_json(approx).dump(2) + "\n");
  std::vector<int> degrees;
  for (const auto& p : approx.chain()) degrees.push_back(p.degree());
  const auto& cert = approx.certificate();
  store.commit(hash, {}, c);
  log_line(o, "approx", "beta " + std::to_string(beta) + " max error " +
                            format_double(cert.max_error) + " depth " +
                            std::to_string(approx.depth()));
  CommandResult res;
  res.report = {{"file", out},
                {"beta", beta},
                {"bound", bound},
                {"eps0", eps0},
                {"stage_degrees", degrees},
                {"depth", approx.depth()},
                {"max_error", cert.max_error},
                {"argmax", cert.argmax},
                {"certified", cert.pass}};
  return res;
}

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h{
      {"train", cmd_train},
      {"transform", cmd_transform},
      {"eval-pann", cmd_eval_pann},
      {"sweep-wd", cmd_sweep_wd},
      {"sweep-beta", cmd_sweep_beta},
      {"trunc-sweep", cmd_trunc_sweep},
      {"perturb-exp", cmd_perturb_exp},
      {"validate-theorems", cmd_validate_theorems},
      {"attack", cmd_attack},
      {"approx", cmd_approx},
  };
  return h;
}

}  // namespace

ModeSpec mode_spec_from_json(const json& m, const Network& net, const Dataset* calib) {
  ModeSpec s;
  const std::string name = required_field<std::string>(m, "mode", "mode.");
  if (name == "exact_relu") {
    check_keys(m, {"mode"}, "mode");
    s.mode = ExactRelu{};
  } else if (name == "composite") {
    check_keys(m, {"mode", "beta", "bound", "overflow", "max_stage_degree"}, "mode");
    const int beta = required_field<int>(m, "beta", "mode.");
    s.policy.overflow =
        parse_overflow_policy(field<std::string>(m, "overflow", "clamp_to_B", "mode."));
    std::optional<double> bound;
    if (m.contains("bound") && !m.at("bound").is_null()) bound = field<double>(m, "bound", 1.0, "mode.");
    if (!bound || s.policy.overflow == OverflowPolicy::kWidenAndRecertify) {
      require(calib != nullptr, ErrorCode::kParse,
              "config field 'mode.bound' is required when no dataset is given for calibration");
      s.options.calibration_max = calibrate_max_preactivation(net, calib->x);
    }
    s.policy.bound = bound ? *bound : std::max(1.2 * *s.options.calibration_max, 1e-6);
    s.mode = make_composite_mode(beta, s.policy.bound, s.policy.overflow,
                                 field<int>(m, "max_stage_degree", 15, "mode."));
    s.beta = beta;
  } else if (name == "injected") {
    check_keys(m, {"mode", "beta", "filter", "kind", "seed"}, "mode");
    InjectedMode im;
    im.beta = required_field<int>(m, "beta", "mode.");
    im.filter = parse_sign_filter(field<std::string>(m, "filter", "all", "mode."));
    im.kind = parse_injection_kind(field<std::string>(m, "kind", "uniform_random", "mode."));
    im.seed = field<std::uint64_t>(m, "seed", 1, "mode.");
    s.mode = im;
    s.beta = im.beta;
  } else if (name == "partial_replace") {
    check_keys(m, {"mode", "poly", "c"}, "mode");
    PartialReplaceMode pm{default_quadratic_replacement(), field<double>(m, "c", 0.0, "mode."), false};
    if (m.contains("poly")) pm.poly = Polynomial(field<std::vector<double>>(m, "poly", {}, "mode."));
    require(pm.c >= 0.0 && pm.c <= 1.0, ErrorCode::kParse, "config field 'mode.c' outside [0, 1]");
    s.mode = pm;
  } else if (name == "truncated") {
    check_keys(m, {"mode", "lx", "frac_bits"}, "mode");
    const int lx = required_field<int>(m, "lx", "mode.");
    FixedPointFormat f{lx, field<int>(m, "frac_bits", lx / 2, "mode.")};
    f.validate();
    s.mode = TruncatedMode{f};
    s.beta = lx;
  } else {
    fail(ErrorCode::kParse, "config field 'mode.mode': unknown mode '" + name + "'");
  }
  return s;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"train",       "transform",   "eval-pann",
                                              "sweep-wd",    "sweep-beta",  "trunc-sweep",
                                              "perturb-exp", "validate-theorems", "attack",
                                              "approx"};
  return names;
}

std::string arch_label(const json& arch) {
  if (!arch.is_object() || !arch.contains("type")) return "custom";
  const std::string type = arch.value("type", std::string("custom"));
  if (type == "mlp") return "mlp-" + joined(arch.value("hidden", json::array()), "x");
  if (type == "cnn") {
    return "cnn-" + joined(arch.value("channels", json::array()), "x") + "-k" +
           std::to_string(arch.value("kernel", 3)) + "-p" + std::to_string(arch.value("pool", 1));
  }
  return type;
}

Network train_or_load(const json& arch, const TrainConfig& cfg, const DatasetSpec& spec,
                      const DatasetSplit& data, const std::string& cache_dir) {
  std::string path;
  if (!cache_dir.empty()) {
    const std::string key =
        config_hash({{"arch", arch}, {"train", to_json(cfg)}, {"dataset", to_json(spec)}});
    path = (fs::path(cache_dir) / (key + ".ckpt")).string();
    if (fs::exists(path)) return load_checkpoint(path);
  }
  Network net = build_network(arch, data.train.sample_shape(), data.train.classes, cfg.seed);
  TrainResult r = train(std::move(net), data.train, nullptr, cfg);
  r.net.metadata["arch"] = arch;
  r.net.metadata["train"] = to_json(cfg);
  r.net.metadata["dataset"] = to_json(spec);
  if (!path.empty()) {
    fs::create_directories(cache_dir);
    // Write then rename so a concurrent reader never sees a partial file.
    const std::string tmp = path + ".tmp";
    save_checkpoint(r.net, tmp);
    fs::rename(tmp, path);
  }
  return std::move(r.net);
}

std::vector<ModelEntry> obtain_models(const json& c, const DatasetSplit& data,
                                      const RunOptions& o) {
  std::vector<ModelEntry> out;
  auto from_checkpoint = [&](const std::string& path, std::uint64_t fallback_seed) {
    ModelEntry m;
    m.net = load_checkpoint(path);
    const json& meta = m.net.metadata;
    m.arch = arch_label(meta.value("arch", json::object()));
    TrainConfig cfg;
    if (meta.contains("train")) cfg = train_config_from_json(meta.at("train"));
    m.seed = meta.contains("train") ? cfg.seed : fallback_seed;
    m.method = method_name(cfg);
    m.wd = cfg.weight_decay;
    m.epochs = meta.contains("train") ? cfg.epochs : 0;
    return m;
  };
  if (c.contains("model")) {
    out.push_back(from_checkpoint(required_field<std::string>(c, "model", ""), 0));
  } else if (c.contains("models")) {
    const auto paths = required_field<std::vector<std::string>>(c, "models", "");
    for (std::size_t i = 0; i < paths.size(); ++i) out.push_back(from_checkpoint(paths[i], i + 1));
  } else {
    const json arch = required_field<json>(c, "arch", "");
    const TrainConfig base = train_of(c);
    const DatasetSpec ds = dataset_of(c);
    const auto seeds = field<std::vector<std::uint64_t>>(c, "seeds", {base.seed}, "");
    const std::string cache = field<std::string>(c, "model_cache", "", "");
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.seed = seed;
      log_line(o, "models", "preparing " + arch_label(arch) + " seed " + std::to_string(seed));
      out.push_back({seed, train_or_load(arch, cfg, ds, data, cache), arch_label(arch),
                     method_name(cfg), cfg.weight_decay, cfg.epochs});
    }
  }
  require(!out.empty(), ErrorCode::kParse, "config names no model");
  return out;
}

CommandResult run_command(const std::string& name, const json& config, const RunOptions& options) {
  const auto& h = handlers();
  const auto it = h.find(name);
  if (it == h.end()) fail(ErrorCode::kInvalidArgument, "unknown command '" + name + "'");
  json c = config.is_null() ? json::object() : config;
  require(c.is_object(), ErrorCode::kParse, "config must be a JSON object");
  if (c.contains("command")) {
    require(c.at("command") == name, ErrorCode::kParse,
            "config field 'command' names " + c.at("command").dump() + ", not '" + name + "'");
  }
  c["command"] = name;
  RecordStore store(options.out_dir);
  // Where models are cached and how many workers run do not change results,
  // so they stay out of the experiment's identity.
  json identity = c;
  identity.erase("model_cache");
  identity.erase("workers");
  const std::string hash = config_hash(identity);
  // Sweeps track completion per cell.
  if (name != "sweep-wd" && !options.force && store.completed(hash)) {
    log_line(options, name, "config " + hash + " already completed; skipping");
    CommandResult r;
    r.skipped = true;
    r.report = {{"skipped", true}, {"config_hash", hash}};
    return r;
  }
  CommandResult r = it->second(c, options, store, hash);
  r.report["config_hash"] = hash;
  r.report["new_rows"] = r.new_rows;
  write_text(out_path(options, name + "_report.json"), r.report.dump(2) + "\n");
  return r;
}

json parse_config_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorCode::kParse, what + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                ": " + e.what());
  }
}

CommandResult run_config_file(const std::string& path, const RunOptions& options) {
  const json c = parse_config_text(read_file(path), path);
  require(c.is_object() && c.contains("command") && c.at("command").is_string(),
          ErrorCode::kParse, path + ": config field 'command' is required");
  return run_command(c.at("command").get<std::string>(), c, options);
}

}  // namespace pann
