// Copyright 2026 The robust-loss-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the robust-loss-lab core.
 *
 * Objects are opaque handles released with their *_free function. Every
 * fallible call returns an rll_status; on failure rll_last_error() holds a
 * message for the calling thread. Matrices are dense, row-major doubles.
 * Strings returned through char** are owned by the caller and released with
 * rll_string_free. */

#ifndef ROBUSTLOSS_ROBUSTLOSS_H
#define ROBUSTLOSS_ROBUSTLOSS_H

#include <stddef.h>
#include <stdint.h>

#if defined(RLL_BUILDING_LIBRARY)
#define RLL_API __attribute__((visibility("default")))
#else
#define RLL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rll_status {
  RLL_OK = 0,
  RLL_ERR_INDEX = 1,
  RLL_ERR_DOMAIN = 2,
  RLL_ERR_INVALID_NOISE = 3,
  RLL_ERR_PARSE = 4,
  RLL_ERR_CONFIG = 5,
  RLL_ERR_SHAPE = 6,
  RLL_ERR_RANK = 7,
  RLL_ERR_DEGENERACY = 8,
  RLL_ERR_DIVERGENCE = 9,
  RLL_ERR_DEGENERATE_OUTPUT = 10,
  RLL_ERR_DEGENERATE_LOSS = 11,
  RLL_ERR_IO = 12,
  RLL_ERR_NULL_ARGUMENT = 13,
  RLL_ERR_INTERNAL = 14
} rll_status;

typedef struct rll_dataset rll_dataset;
typedef struct rll_loss rll_loss;
typedef struct rll_regularizer rll_regularizer;
typedef struct rll_model rll_model;
typedef struct rll_report rll_report;

RLL_API const char* rll_version(void);
RLL_API const char* rll_status_name(rll_status status);
/* Message of the last failed call on this thread, "" if none. */
RLL_API const char* rll_last_error(void);
RLL_API void rll_string_free(char* s);

/* ---- noise ---- */

/* a = 1 - rho C/(C-1), lambda = 1/a. Fails with RLL_ERR_INVALID_NOISE when rho >= (C-1)/C. */
RLL_API rll_status rll_noise_constants(double rho, int num_classes, double* a, double* lambda);
/* out[j] = P(noisy label j | clean label y); out has num_classes entries. */
RLL_API rll_status rll_flip_distribution(double rho, int num_classes, int y, double* out);

/* ---- datasets ---- */

RLL_API rll_status rll_dataset_create(const double* features, const int* labels, size_t n, size_t dim, int num_classes,
                                      rll_dataset** out);
/* Gaussian blobs around center_scale * e_k (dim >= num_classes). */
RLL_API rll_status rll_dataset_make_blobs(int num_classes, int dim, int n_per_class, double sigma, double center_scale,
                                          uint64_t seed, rll_dataset** out);
/* num_classes <= 0 infers C from the largest label. */
RLL_API rll_status rll_dataset_load_csv(const char* path, int num_classes, rll_dataset** out);
RLL_API rll_status rll_dataset_save_csv(const rll_dataset* data, const char* path);
RLL_API rll_status rll_dataset_info(const rll_dataset* data, size_t* n, size_t* dim, int* num_classes);
RLL_API rll_status rll_dataset_features(const rll_dataset* data, double* out);
RLL_API rll_status rll_dataset_labels(const rll_dataset* data, int* out);
/* Returns a copy whose labels are resampled under uniform noise rho. */
RLL_API rll_status rll_dataset_inject_noise(const rll_dataset* data, double rho, uint64_t seed, rll_dataset** out);
RLL_API void rll_dataset_free(rll_dataset* data);

/* ---- losses ---- */

/* muh, mae, gce:q=<q>, sce:lambda=<l>, softmax_ce, square_star, lin:<loss>. */
RLL_API rll_status rll_loss_parse(const char* text, int num_classes, rll_loss** out);
RLL_API rll_status rll_loss_name(const rll_loss* loss, char** out);
/* grad may be NULL; otherwise it receives num_classes entries. */
RLL_API rll_status rll_loss_eval(const rll_loss* loss, const double* z, int y, double* value, double* grad);
RLL_API rll_status rll_loss_symmetry_sum(const rll_loss* loss, const double* z, double* out);
RLL_API rll_status rll_loss_is_symmetric(const rll_loss* loss, int trials, double tol, uint64_t seed, int* symmetric,
                                         double* max_deviation);
RLL_API rll_status rll_loss_linearize(const rll_loss* loss, rll_loss** out);
RLL_API void rll_loss_free(rll_loss* loss);

/* ---- regularizers ---- */

/* quad:identity, quad:scale=<s>, quad:file=<path>, entropy, label_smoothing. */
RLL_API rll_status rll_regularizer_parse(const char* text, int num_classes, rll_regularizer** out);
/* Quadratic z^T A z from a dim x dim matrix; reduced selects dim = C-1. */
RLL_API rll_status rll_regularizer_quadratic(const double* a, int num_classes, int reduced, rll_regularizer** out);
RLL_API rll_status rll_regularizer_dim(const rll_regularizer* reg, int* dim);
RLL_API rll_status rll_regularizer_eval(const rll_regularizer* reg, const double* z, double* value, double* grad);
/* Hessian at 0, dim x dim. */
RLL_API rll_status rll_regularizer_hessian_at_min(const rll_regularizer* reg, double* out);
RLL_API rll_status rll_regularizer_quadratize(const rll_regularizer* reg, rll_regularizer** out);
RLL_API void rll_regularizer_free(rll_regularizer* reg);

/* ---- models ---- */

/* feature_map: identity, append_constant or random_fourier (rff_dim, bandwidth, seed). */
RLL_API rll_status rll_model_linear(int input_dim, const char* feature_map, int rff_dim, double bandwidth, uint64_t seed,
                                    int num_classes, int reduced, rll_model** out);
RLL_API rll_status rll_model_mlp2(int input_dim, int hidden, int num_classes, int reduced, rll_model** out);
RLL_API rll_status rll_model_shape(const rll_model* model, size_t* num_params, int* output_dim);
RLL_API rll_status rll_model_get_theta(const rll_model* model, double* out);
RLL_API rll_status rll_model_set_theta(rll_model* model, const double* theta, size_t len);
/* out receives n x output_dim entries. */
RLL_API rll_status rll_model_forward(const rll_model* model, const double* x, size_t n, size_t dim, double* out);
/* Minimises loss_weight * risk + reg_weight * mean g(z) from the current theta
 * and stores the result. rho < 0 trains on the labels as given, rho >= 0 on
 * the exact noisy risk. */
RLL_API rll_status rll_model_train(rll_model* model, const rll_dataset* data, const rll_loss* loss,
                                   const rll_regularizer* reg, double loss_weight, double reg_weight, double rho,
                                   int max_iters, double grad_tol, int* iterations, int* converged);
RLL_API rll_status rll_model_to_json(const rll_model* model, char** out);
RLL_API rll_status rll_model_from_json(const char* text, rll_model** out);
RLL_API void rll_model_free(rll_model* model);

/* ---- experiments ---- */

/* command: check-symmetry, verify-risk-identity, robustness-muh, sweep-alpha,
 * demo-mitigation. config_json may be NULL or "" for the defaults. */
RLL_API rll_status rll_experiment_run(const char* command, const char* config_json, rll_report** out);
RLL_API rll_status rll_report_passed(const rll_report* report, int* passed);
RLL_API rll_status rll_report_json(const rll_report* report, char** out);
RLL_API rll_status rll_report_text(const rll_report* report, char** out);
RLL_API rll_status rll_report_table_count(const rll_report* report, size_t* count);
/* The returned name lives as long as the report. */
RLL_API rll_status rll_report_table_name(const rll_report* report, size_t index, const char** name);
RLL_API rll_status rll_report_table_csv(const rll_report* report, size_t index, char** out);
/* Writes report.json, one CSV per table and any model or trace files. */
RLL_API rll_status rll_report_write(const rll_report* report, const char* dir);
RLL_API void rll_report_free(rll_report* report);

#ifdef __cplusplus
}
#endif

#endif
