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

#include "pann/pann.h"

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <memory>
#include <string>

#include "core/commands.hpp"
#include "core/error.hpp"
#include "core/network.hpp"
#include "core/training.hpp"

struct pann_model {
  pann::Network net;
};

struct pann_dataset {
  pann::Dataset data;
};

namespace {

thread_local std::string g_last_error;

template <class F>
int guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return PANN_OK;
  } catch (const pann::Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return PANN_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PANN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PANN_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return PANN_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  pann::require(p != nullptr, pann::ErrorCode::kInvalidArgument,
                std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse_json(const char* text, const char* what) {
  need(text, what);
  return pann::parse_config_text(text, what);
}

}  // namespace

extern "C" {

const char* pann_version(void) { return "1.0.0"; }

const char* pann_status_string(int status) {
  switch (status) {
    case PANN_OK: return "ok";
    case PANN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PANN_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case PANN_ERR_IO: return "i/o error";
    case PANN_ERR_PARSE: return "parse error";
    case PANN_ERR_INFEASIBLE: return "infeasible";
    case PANN_ERR_NOT_CERTIFIED: return "not certified";
    case PANN_ERR_DIVERGED: return "diverged";
    case PANN_ERR_PRECONDITION: return "precondition violated";
    case PANN_ERR_OVERFLOW: return "overflow";
    case PANN_ERR_NON_CONVERGENCE: return "no convergence";
    case PANN_ERR_INTERNAL: return "internal error";
    default: return "unknown status";
  }
}

const char* pann_last_error(void) { return g_last_error.c_str(); }

void pann_string_free(char* s) { std::free(s); }

int pann_model_load(const char* path, pann_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new pann_model{pann::load_checkpoint(path)};
  });
}

int pann_model_save(const pann_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    pann::save_checkpoint(model->net, path);
  });
}

int pann_model_create(const char* arch_json, const size_t* input_shape, size_t rank,
                      size_t classes, uint64_t seed, pann_model** out) {
  return guarded([&] {
    need(out, "out");
    need(input_shape, "input_shape");
    *out = nullptr;
    const auto arch = parse_json(arch_json, "arch_json");
    pann::Shape shape(input_shape, input_shape + rank);
    *out = new pann_model{pann::build_network(arch, shape, classes, seed)};
    (*out)->net.metadata["arch"] = arch;
  });
}

void pann_model_free(pann_model* model) { delete model; }

int pann_model_info(const pann_model* model, char** json_out) {
  return guarded([&] {
    need(model, "model");
    need(json_out, "json_out");
    const auto& net = model->net;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : net.layers()) layers.push_back(pann::layer_name(l));
    const nlohmann::json j{{"input_shape", net.input_shape()},
                           {"classes", net.classes()},
                           {"layers", layers},
                           {"parameter_count", net.parameter_count()},
                           {"metadata", net.metadata}};
    *json_out = dup_string(j.dump());
  });
}

int pann_model_predict(const pann_model* model, const double* x, size_t n, int32_t* labels_out) {
  return guarded([&] {
    need(model, "model");
    need(x, "x");
    need(labels_out, "labels_out");
    pann::Shape shape{n};
    for (std::size_t d : model->net.input_shape()) shape.push_back(d);
    const std::size_t count = pann::shape_numel(shape);
    const pann::Tensor t(shape, std::vector<double>(x, x + count));
    const auto labels = pann::predict_labels(model->net, t);
    for (std::size_t i = 0; i < n; ++i) labels_out[i] = labels[i];
  });
}

int pann_model_transform(const pann_model* model, const char* mode_json,
                         const pann_dataset* calib, pann_model** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = nullptr;
    const auto spec = pann::mode_spec_from_json(parse_json(mode_json, "mode_json"), model->net,
                                                calib ? &calib->data : nullptr);
    *out = new pann_model{pann::transform(model->net, spec.mode, spec.policy, spec.options)};
  });
}

int pann_model_train(pann_model* model, const pann_dataset* train_set, const char* train_json) {
  return guarded([&] {
    need(model, "model");
    need(train_set, "train_set");
    const auto cfg = pann::train_config_from_json(parse_json(train_json, "train_json"));
    auto r = pann::train(std::move(model->net), train_set->data, nullptr, cfg);
    model->net = std::move(r.net);
    model->net.metadata["train"] = pann::to_json(cfg);
  });
}

int pann_dataset_load(const char* spec_json, pann_dataset** train_out, pann_dataset** test_out) {
  return guarded([&] {
    need(train_out, "train_out");
    need(test_out, "test_out");
    *train_out = nullptr;
    *test_out = nullptr;
    auto split = pann::load_dataset(pann::dataset_spec_from_json(parse_json(spec_json, "spec_json")));
    auto tr = std::make_unique<pann_dataset>(pann_dataset{std::move(split.train)});
    auto te = std::make_unique<pann_dataset>(pann_dataset{std::move(split.test)});
    *train_out = tr.release();
    *test_out = te.release();
  });
}

void pann_dataset_free(pann_dataset* data) { delete data; }

int pann_dataset_size(const pann_dataset* data, size_t* n_out) {
  return guarded([&] {
    need(data, "data");
    need(n_out, "n_out");
    *n_out = data->data.size();
  });
}

int pann_evaluate(const pann_model* model, const pann_dataset* data, double* accuracy_out,
                  double* loss_out) {
  return guarded([&] {
    need(model, "model");
    need(data, "data");
    const auto r = pann::evaluate(model->net, data->data.x, data->data.labels);
    if (accuracy_out) *accuracy_out = r.accuracy;
    if (loss_out) *loss_out = r.loss;
  });
}

int pann_run(const char* command, const char* config_json, const char* out_dir, int force,
             int log_progress, int* exit_status_out, char** report_out) {
  return guarded([&] {
    need(command, "command");
    pann::RunOptions opts;
    if (out_dir) opts.out_dir = out_dir;
    opts.force = force != 0;
    opts.log = log_progress ? &std::cerr : nullptr;
    const nlohmann::json cfg =
        config_json ? pann::parse_config_text(config_json, "config") : nlohmann::json::object();
    const auto r = pann::run_command(command, cfg, opts);
    if (exit_status_out) *exit_status_out = r.exit_status;
    if (report_out) *report_out = dup_string(r.report.dump(2));
  });
}

int pann_run_file(const char* config_path, const char* out_dir, int force, int log_progress,
                  int* exit_status_out, char** report_out) {
  return guarded([&] {
    need(config_path, "config_path");
    pann::RunOptions opts;
    if (out_dir) opts.out_dir = out_dir;
    opts.force = force != 0;
    opts.log = log_progress ? &std::cerr : nullptr;
    const auto r = pann::run_config_file(config_path, opts);
    if (exit_status_out) *exit_status_out = r.exit_status;
    if (report_out) *report_out = dup_string(r.report.dump(2));
  });
}

}  // extern "C"
