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

#ifndef PANN_PANN_H
#define PANN_PANN_H

#include <stddef.h>
#include <stdint.h>

#if defined(PANN_BUILDING_LIBRARY)
#define PANN_API __attribute__((visibility("default")))
#else
#define PANN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every function returning int returns one of these; on a
   nonzero status pann_last_error() describes the failure. */
enum {
  PANN_OK = 0,
  PANN_ERR_INVALID_ARGUMENT = 1,
  PANN_ERR_SHAPE_MISMATCH = 2,
  PANN_ERR_IO = 3,
  PANN_ERR_PARSE = 4,
  PANN_ERR_INFEASIBLE = 5,
  PANN_ERR_NOT_CERTIFIED = 6,
  PANN_ERR_DIVERGED = 7,
  PANN_ERR_PRECONDITION = 8,
  PANN_ERR_OVERFLOW = 9,
  PANN_ERR_NON_CONVERGENCE = 10,
  PANN_ERR_INTERNAL = 99
};

typedef struct pann_model pann_model;
typedef struct pann_dataset pann_dataset;

PANN_API const char* pann_version(void);
PANN_API const char* pann_status_string(int status);
/* Message of the last failure on the calling thread; empty after success. */
PANN_API const char* pann_last_error(void);

/* Strings returned through char** out-parameters are owned by the caller and
   released with pann_string_free. */
PANN_API void pann_string_free(char* s);

/* ---- models ---- */
PANN_API int pann_model_load(const char* path, pann_model** out);
PANN_API int pann_model_save(const pann_model* model, const char* path);
/* arch_json: {"type":"mlp","hidden":[...]} or {"type":"cnn",...};
   input_shape: per-sample shape of length rank. */
PANN_API int pann_model_create(const char* arch_json, const size_t* input_shape, size_t rank,
                               size_t classes, uint64_t seed, pann_model** out);
PANN_API void pann_model_free(pann_model* model);
/* JSON description: input shape, classes, layers, parameter count, metadata. */
PANN_API int pann_model_info(const pann_model* model, char** json_out);
/* x holds n samples laid out row-major in the model's input shape;
   labels_out receives n predicted labels. */
PANN_API int pann_model_predict(const pann_model* model, const double* x, size_t n,
                                int32_t* labels_out);
/* Copy of the model with its ReLU slots rewritten by mode_json (same schema
   as the "mode" section of eval-pann). calib may be NULL when the mode
   needs no calibration. */
PANN_API int pann_model_transform(const pann_model* model, const char* mode_json,
                                  const pann_dataset* calib, pann_model** out);
/* Trains in place with a "train" section config. */
PANN_API int pann_model_train(pann_model* model, const pann_dataset* train_set,
                              const char* train_json);

/* ---- datasets ---- */
/* spec_json follows the "dataset" section schema; both splits are returned. */
PANN_API int pann_dataset_load(const char* spec_json, pann_dataset** train_out,
                               pann_dataset** test_out);
PANN_API void pann_dataset_free(pann_dataset* data);
PANN_API int pann_dataset_size(const pann_dataset* data, size_t* n_out);

/* Accuracy and mean cross entropy over the set. */
PANN_API int pann_evaluate(const pann_model* model, const pann_dataset* data,
                           double* accuracy_out, double* loss_out);

/* ---- experiments ---- */
/* Runs one subcommand (train, transform, eval-pann, sweep-wd, sweep-beta,
   trunc-sweep, perturb-exp, validate-theorems, attack, approx) with a JSON
   config. exit_status_out receives the command's exit status; report_out
   (optional) its JSON report. log_progress != 0 prints progress to stderr. */
PANN_API int pann_run(const char* command, const char* config_json, const char* out_dir,
                      int force, int log_progress, int* exit_status_out, char** report_out);
/* As pann_run with the command taken from the config file's "command". */
PANN_API int pann_run_file(const char* config_path, const char* out_dir, int force,
                           int log_progress, int* exit_status_out, char** report_out);

#ifdef __cplusplus
}
#endif

#endif /* PANN_PANN_H */
