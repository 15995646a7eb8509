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

// Command-line front end over the C API. Every subcommand builds a JSON
// config (from --config plus flag overrides) and hands it to pann_run.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pann/pann.h"

namespace {

using nlohmann::json;

struct Common {
  std::string out_dir = "runs";
  bool force = false;
  bool quiet = false;
  std::string config_file;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c, bool with_config = true) {
  app->add_option("--out", c.out_dir, "Output directory for records, reports and plot data");
  app->add_flag("--force", c.force, "Re-run configs that already completed");
  app->add_flag("--quiet", c.quiet, "Suppress progress output");
  if (with_config) {
    app->add_option("--config", c.config_file, "Base JSON config for this subcommand")
        ->check(CLI::ExistingFile);
    app->add_option("--set", c.sets, "Override a field: path.to.key=JSON (repeatable)");
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return json::parse(ss.str());
}

/// key=value with a dotted key path; value parsed as JSON, else kept as a
/// string.
void apply_set(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw std::runtime_error("--set expects key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

int invoke(const std::string& command, const json& cfg, const Common& c) {
  int exit_status = 0;
  char* report = nullptr;
  const std::string text = cfg.dump();
  const int rc = pann_run(command.c_str(), text.c_str(), c.out_dir.c_str(), c.force ? 1 : 0,
                          c.quiet ? 0 : 1, &exit_status, &report);
  if (rc != PANN_OK) {
    std::fprintf(stderr, "error: %s: %s\n", pann_status_string(rc), pann_last_error());
    return rc;
  }
  std::printf("%s\n", report);
  pann_string_free(report);
  return exit_status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sturdiness experiments for polynomial-approximated networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pann_version());

  // run <config file>
  Common run_opts;
  std::string run_file;
  auto* run = app.add_subcommand("run", "Run the subcommand named by a config file's \"command\"");
  run->add_option("config", run_file, "Config file")->required()->check(CLI::ExistingFile);
  add_common(run, run_opts, false);

  struct Sub {
    std::string name;
    CLI::App* app;
    Common common;
    json flags = json::object();
  };
  std::vector<Sub> subs;
  subs.reserve(10);
  const std::pair<const char*, const char*> descriptions[] = {
      {"train", "Train a backbone network"},
      {"transform", "Rewrite a checkpoint's ReLUs into a PANN"},
      {"eval-pann", "Evaluate backbone and PANN accuracy"},
      {"sweep-wd", "Weight-decay x epochs sweep of PANN accuracy"},
      {"sweep-beta", "PANN accuracy across approximation precisions"},
      {"trunc-sweep", "Truncation-based ReLU accuracy across bit widths"},
      {"perturb-exp", "Test-loss increase from sign-filtered injected errors"},
      {"validate-theorems", "Closed-form checks of the sturdiness results"},
      {"attack", "Search perturbations that fool only the PANN"},
      {"approx", "Build and certify a composite sign approximant"},
  };
  for (const auto& [name, desc] : descriptions) {
    Sub s{name, app.add_subcommand(name, desc), {}, json::object()};
    subs.push_back(std::move(s));
  }
  for (auto& s : subs) add_common(s.app, s.common);

  // Flags named after the experiment parameters.
  auto sub = [&](const std::string& n) -> Sub& {
    for (auto& s : subs)
      if (s.name == n) return s;
    throw std::logic_error(n);
  };
  std::string model, pann_path, lx_list, beta_list, out_file;
  double alpha = 0, eps = 0, eps_atk = 0, eps_lim = 0, bound = 0;
  int beta = 0;
  std::size_t seeds = 0;
  bool toy = false;

  auto& atk = sub("attack");
  atk.app->add_option("--model", model, "Backbone checkpoint");
  atk.app->add_option("--pann", pann_path, "PANN checkpoint");
  atk.app->add_option("--alpha", alpha, "Gradient ascent step");
  atk.app->add_option("--eps", eps, "Infinity-norm clip bound");
  atk.app->add_option("--eps-atk", eps_atk, "Gradient-difference threshold");
  atk.app->add_option("--eps-lim", eps_lim, "Backbone gradient-change limit");
  atk.app->add_option("--seeds", seeds, "Number of seeded attempts");
  atk.app->add_flag("--toy", toy, "Attack the built-in 2-4 toy network");

  auto& trunc = sub("trunc-sweep");
  trunc.app->add_option("--lx", lx_list, "Comma-separated bit widths, e.g. 6,8,10");
  trunc.app->add_option("--model", model, "Backbone checkpoint");

  auto& sb = sub("sweep-beta");
  sb.app->add_option("--betas", beta_list, "Comma-separated precisions, e.g. 6,7,8");
  sb.app->add_option("--model", model, "Backbone checkpoint");

  auto& ev = sub("eval-pann");
  ev.app->add_option("--model", model, "Backbone checkpoint");
  ev.app->add_option("--beta", beta, "Composite approximant precision");

  auto& tf = sub("transform");
  tf.app->add_option("--model", model, "Backbone checkpoint");
  tf.app->add_option("--beta", beta, "Composite approximant precision");
  tf.app->add_option("--bound", bound, "Approximation interval bound B");
  tf.app->add_option("--output", out_file, "Output checkpoint");

  auto& ap = sub("approx");
  ap.app->add_option("--beta", beta, "Target precision");
  ap.app->add_option("--bound", bound, "Interval bound B");
  ap.app->add_option("--output", out_file, "Output approximant JSON");

  auto& tr = sub("train");
  tr.app->add_option("--output", out_file, "Output checkpoint");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      int exit_status = 0;
      char* report = nullptr;
      const int rc = pann_run_file(run_file.c_str(), run_opts.out_dir.c_str(),
                                   run_opts.force ? 1 : 0, run_opts.quiet ? 0 : 1, &exit_status,
                                   &report);
      if (rc != PANN_OK) {
        std::fprintf(stderr, "error: %s: %s\n", pann_status_string(rc), pann_last_error());
        return rc;
      }
      std::printf("%s\n", report);
      pann_string_free(report);
      return exit_status;
    }
    for (auto& s : subs) {
      if (!s.app->parsed()) continue;
      json cfg = s.common.config_file.empty() ? json::object() : read_json_file(s.common.config_file);
      cfg.erase("command");
      auto set_if = [&](CLI::App* a, const char* flag, const char* key, const json& v) {
        if (a->count(flag) > 0) cfg[key] = v;
      };
      if (s.name == "attack") {
        set_if(s.app, "--model", "model", model);
        set_if(s.app, "--pann", "pann", pann_path);
        set_if(s.app, "--seeds", "seeds", seeds);
        if (toy) cfg["toy"] = cfg.value("toy", json::object());
        auto& a = cfg["attack"];
        if (a.is_null()) a = json::object();
        if (s.app->count("--alpha")) a["alpha"] = alpha;
        if (s.app->count("--eps")) a["eps"] = eps;
        if (s.app->count("--eps-atk")) a["eps_atk"] = eps_atk;
        if (s.app->count("--eps-lim")) a["eps_lim"] = eps_lim;
      } else if (s.name == "trunc-sweep") {
        set_if(s.app, "--model", "model", model);
        if (s.app->count("--lx")) cfg["lx"] = parse_int_list(lx_list);
      } else if (s.name == "sweep-beta") {
        set_if(s.app, "--model", "model", model);
        if (s.app->count("--betas")) cfg["betas"] = parse_int_list(beta_list);
      } else if (s.name == "eval-pann") {
        set_if(s.app, "--model", "model", model);
        if (s.app->count("--beta")) cfg["mode"] = {{"mode", "composite"}, {"beta", beta}};
      } else if (s.name == "transform") {
        set_if(s.app, "--model", "model", model);
        set_if(s.app, "--output", "out", out_file);
        if (s.app->count("--beta")) {
          cfg["mode"] = {{"mode", "composite"}, {"beta", beta}};
          if (s.app->count("--bound")) cfg["mode"]["bound"] = bound;
        }
      } else if (s.name == "approx") {
        set_if(s.app, "--beta", "beta", beta);
        set_if(s.app, "--bound", "bound", bound);
        set_if(s.app, "--output", "out", out_file);
      } else if (s.name == "train") {
        set_if(s.app, "--output", "out", out_file);
      }
      for (const auto& a : s.common.sets) apply_set(cfg, a);
      return invoke(s.name, cfg, s.common);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
