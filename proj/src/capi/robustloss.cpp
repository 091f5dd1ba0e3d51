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

#include "robustloss/robustloss.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "harness.hpp"

struct rll_dataset {
  rll::Dataset value;
};
struct rll_loss {
  rll::LossSpec value;
};
struct rll_regularizer {
  rll::RegularizerSpec value;
};
struct rll_model {
  rll::Model value;
};
struct rll_report {
  rll::Report value;
};

namespace {

thread_local std::string g_last_error;

rll_status set_error(rll_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
rll_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return RLL_OK;
  } catch (const rll::Error& e) {
    return set_error(static_cast<rll_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(RLL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(RLL_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(RLL_ERR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void copy_out(const rll::Matrix& m, double* out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) *out++ = m(i, j);
  }
}

rll::Matrix copy_in(const double* data, size_t rows, size_t cols) {
  rll::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = *data++;
  }
  return m;
}

rll::Vector vector_in(const double* data, size_t len) {
  return Eigen::Map<const rll::Vector>(data, static_cast<Eigen::Index>(len));
}

template <typename... Ptrs>
bool all_set(const Ptrs*... ptrs) {
  return ((ptrs != nullptr) && ...);
}

}  // namespace

#define RLL_REQUIRE(...) \
  if (!all_set(__VA_ARGS__)) return set_error(RLL_ERR_NULL_ARGUMENT, "null argument")

extern "C" {

const char* rll_version(void) { return "0.1.0"; }

const char* rll_status_name(rll_status status) {
  switch (status) {
    case RLL_OK: return "ok";
    case RLL_ERR_NULL_ARGUMENT: return "null-argument";
    case RLL_ERR_INTERNAL: return "internal";
    default: break;
  }
  if (status >= RLL_ERR_INDEX && status <= RLL_ERR_IO) {
    return rll::error_code_name(static_cast<rll::ErrorCode>(static_cast<int>(status)));
  }
  return "unknown";
}

const char* rll_last_error(void) { return g_last_error.c_str(); }

void rll_string_free(char* s) { std::free(s); }

rll_status rll_noise_constants(double rho, int num_classes, double* a, double* lambda) {
  RLL_REQUIRE(a, lambda);
  return guard([&] {
    const rll::NoiseSpec n = rll::noise_constants(rho, num_classes);
    *a = n.a;
    *lambda = n.lambda_equiv;
  });
}

rll_status rll_flip_distribution(double rho, int num_classes, int y, double* out) {
  RLL_REQUIRE(out);
  return guard([&] {
    const rll::Vector p = rll::flip_distribution(y, rll::noise_constants(rho, num_classes));
    std::copy(p.data(), p.data() + p.size(), out);
  });
}

rll_status rll_dataset_create(const double* features, const int* labels, size_t n, size_t dim, int num_classes,
                              rll_dataset** out) {
  RLL_REQUIRE(features, labels, out);
  return guard([&] {
    rll::Dataset d;
    d.features = copy_in(features, n, dim);
    d.labels.assign(labels, labels + n);
    d.num_classes = num_classes;
    d.validate();
    *out = new rll_dataset{std::move(d)};
  });
}

rll_status rll_dataset_make_blobs(int num_classes, int dim, int n_per_class, double sigma, double center_scale,
                                  uint64_t seed, rll_dataset** out) {
  RLL_REQUIRE(out);
  return guard([&] {
    rll::SyntheticSpec s;
    s.num_classes = num_classes;
    s.dim = dim;
    s.n_per_class = n_per_class;
    s.sigma = sigma;
    s.centers = rll::default_centers(num_classes, dim, center_scale);
    s.seed = seed;
    *out = new rll_dataset{rll::make_blobs(s)};
  });
}

rll_status rll_dataset_load_csv(const char* path, int num_classes, rll_dataset** out) {
  RLL_REQUIRE(path, out);
  return guard([&] {
    std::optional<int> c;
    if (num_classes > 0) c = num_classes;
    *out = new rll_dataset{rll::load_csv(path, c)};
  });
}

rll_status rll_dataset_save_csv(const rll_dataset* data, const char* path) {
  RLL_REQUIRE(data, path);
  return guard([&] { rll::save_csv(data->value, path); });
}

rll_status rll_dataset_info(const rll_dataset* data, size_t* n, size_t* dim, int* num_classes) {
  RLL_REQUIRE(data, n, dim, num_classes);
  return guard([&] {
    *n = static_cast<size_t>(data->value.size());
    *dim = static_cast<size_t>(data->value.dim());
    *num_classes = data->value.num_classes;
  });
}

rll_status rll_dataset_features(const rll_dataset* data, double* out) {
  RLL_REQUIRE(data, out);
  return guard([&] { copy_out(data->value.features, out); });
}

rll_status rll_dataset_labels(const rll_dataset* data, int* out) {
  RLL_REQUIRE(data, out);
  return guard([&] { std::copy(data->value.labels.begin(), data->value.labels.end(), out); });
}

rll_status rll_dataset_inject_noise(const rll_dataset* data, double rho, uint64_t seed, rll_dataset** out) {
  RLL_REQUIRE(data, out);
  return guard([&] {
    rll::Dataset d = data->value;
    d.labels = rll::inject_noise(d.labels, rll::noise_constants(rho, d.num_classes), seed);
    *out = new rll_dataset{std::move(d)};
  });
}

void rll_dataset_free(rll_dataset* data) { delete data; }

rll_status rll_loss_parse(const char* text, int num_classes, rll_loss** out) {
  RLL_REQUIRE(text, out);
  return guard([&] { *out = new rll_loss{rll::parse_loss(text, num_classes)}; });
}

rll_status rll_loss_name(const rll_loss* loss, char** out) {
  RLL_REQUIRE(loss, out);
  return guard([&] { *out = dup_string(rll::to_string(loss->value)); });
}

rll_status rll_loss_eval(const rll_loss* loss, const double* z, int y, double* value, double* grad) {
  RLL_REQUIRE(loss, z, value);
  return guard([&] {
    const rll::LossEval e = rll::loss_eval(loss->value, vector_in(z, static_cast<size_t>(loss->value.num_classes)), y);
    *value = e.value;
    if (grad != nullptr) std::copy(e.grad.data(), e.grad.data() + e.grad.size(), grad);
  });
}

rll_status rll_loss_symmetry_sum(const rll_loss* loss, const double* z, double* out) {
  RLL_REQUIRE(loss, z, out);
  return guard([&] { *out = rll::symmetry_sum(loss->value, vector_in(z, static_cast<size_t>(loss->value.num_classes))); });
}

rll_status rll_loss_is_symmetric(const rll_loss* loss, int trials, double tol, uint64_t seed, int* symmetric,
                                 double* max_deviation) {
  RLL_REQUIRE(loss, symmetric, max_deviation);
  return guard([&] {
    const rll::SymmetryCheck c = rll::is_symmetric(loss->value, trials, tol, seed);
    *symmetric = c.symmetric ? 1 : 0;
    *max_deviation = c.max_deviation;
  });
}

rll_status rll_loss_linearize(const rll_loss* loss, rll_loss** out) {
  RLL_REQUIRE(loss, out);
  return guard([&] { *out = new rll_loss{rll::linearize(loss->value)}; });
}

void rll_loss_free(rll_loss* loss) { delete loss; }

rll_status rll_regularizer_parse(const char* text, int num_classes, rll_regularizer** out) {
  RLL_REQUIRE(text, out);
  return guard([&] { *out = new rll_regularizer{rll::parse_regularizer(text, num_classes)}; });
}

rll_status rll_regularizer_quadratic(const double* a, int num_classes, int reduced, rll_regularizer** out) {
  RLL_REQUIRE(a, out);
  return guard([&] {
    if (num_classes < 2) rll::fail(rll::ErrorCode::Config, "quadratic regularizer needs C >= 2");
    const auto dim = static_cast<size_t>(reduced ? num_classes - 1 : num_classes);
    *out = new rll_regularizer{rll::RegularizerSpec::quadratic(copy_in(a, dim, dim), num_classes, reduced != 0)};
  });
}

rll_status rll_regularizer_dim(const rll_regularizer* reg, int* dim) {
  RLL_REQUIRE(reg, dim);
  return guard([&] { *dim = reg->value.dim(); });
}

rll_status rll_regularizer_eval(const rll_regularizer* reg, const double* z, double* value, double* grad) {
  RLL_REQUIRE(reg, z, value);
  return guard([&] {
    const rll::RegEval e = rll::reg_eval(reg->value, vector_in(z, static_cast<size_t>(reg->value.dim())));
    *value = e.value;
    if (grad != nullptr) std::copy(e.grad.data(), e.grad.data() + e.grad.size(), grad);
  });
}

rll_status rll_regularizer_hessian_at_min(const rll_regularizer* reg, double* out) {
  RLL_REQUIRE(reg, out);
  return guard([&] { copy_out(rll::reg_hessian_at_min(reg->value), out); });
}

rll_status rll_regularizer_quadratize(const rll_regularizer* reg, rll_regularizer** out) {
  RLL_REQUIRE(reg, out);
  return guard([&] { *out = new rll_regularizer{rll::quadratize(reg->value)}; });
}

void rll_regularizer_free(rll_regularizer* reg) { delete reg; }

rll_status rll_model_linear(int input_dim, const char* feature_map, int rff_dim, double bandwidth, uint64_t seed,
                            int num_classes, int reduced, rll_model** out) {
  RLL_REQUIRE(feature_map, out);
  return guard([&] {
    const std::string fm = feature_map;
    rll::FeatureMap phi;
    if (fm == "identity") {
      phi = rll::FeatureMap::identity(input_dim);
    } else if (fm == "append_constant") {
      phi = rll::FeatureMap::append_constant(input_dim);
    } else if (fm == "random_fourier") {
      phi = rll::FeatureMap::random_fourier(input_dim, rff_dim, bandwidth, seed);
    } else {
      rll::fail(rll::ErrorCode::Config, "unknown feature map '" + fm + "'");
    }
    *out = new rll_model{rll::Model::linear(std::move(phi), num_classes, reduced != 0)};
  });
}

rll_status rll_model_mlp2(int input_dim, int hidden, int num_classes, int reduced, rll_model** out) {
  RLL_REQUIRE(out);
  return guard([&] { *out = new rll_model{rll::Model::mlp2(input_dim, hidden, num_classes, reduced != 0)}; });
}

rll_status rll_model_shape(const rll_model* model, size_t* num_params, int* output_dim) {
  RLL_REQUIRE(model, num_params, output_dim);
  return guard([&] {
    *num_params = static_cast<size_t>(model->value.num_params());
    *output_dim = model->value.output_dim();
  });
}

rll_status rll_model_get_theta(const rll_model* model, double* out) {
  RLL_REQUIRE(model, out);
  return guard([&] {
    const rll::Vector& t = model->value.theta();
    std::copy(t.data(), t.data() + t.size(), out);
  });
}

rll_status rll_model_set_theta(rll_model* model, const double* theta, size_t len) {
  RLL_REQUIRE(model, theta);
  return guard([&] { model->value.set_theta(vector_in(theta, len)); });
}

rll_status rll_model_forward(const rll_model* model, const double* x, size_t n, size_t dim, double* out) {
  RLL_REQUIRE(model, x, out);
  return guard([&] { copy_out(model->value.forward(copy_in(x, n, dim)), out); });
}

rll_status rll_model_train(rll_model* model, const rll_dataset* data, const rll_loss* loss, const rll_regularizer* reg,
                           double loss_weight, double reg_weight, double rho, int max_iters, double grad_tol,
                           int* iterations, int* converged) {
  RLL_REQUIRE(model, data, loss, reg);
  return guard([&] {
    rll::ObjectiveTerms terms{loss->value, reg->value, loss_weight, reg_weight, std::nullopt};
    if (rho >= 0.0) terms.noise = rll::noise_constants(rho, data->value.num_classes);
    rll::TrainConfig cfg;
    cfg.max_iters = max_iters;
    cfg.grad_tol = grad_tol;
    const rll::MinimizeResult res = rll::train(model->value, data->value, terms, cfg, model->value.theta());
    model->value.set_theta(res.theta);
    if (iterations != nullptr) *iterations = res.iterations;
    if (converged != nullptr) *converged = res.reason == rll::StopReason::Converged ? 1 : 0;
  });
}

rll_status rll_model_to_json(const rll_model* model, char** out) {
  RLL_REQUIRE(model, out);
  return guard([&] { *out = dup_string(model->value.to_json()); });
}

rll_status rll_model_from_json(const char* text, rll_model** out) {
  RLL_REQUIRE(text, out);
  return guard([&] { *out = new rll_model{rll::Model::from_json(text)}; });
}

void rll_model_free(rll_model* model) { delete model; }

rll_status rll_experiment_run(const char* command, const char* config_json, rll_report** out) {
  RLL_REQUIRE(command, out);
  return guard([&] { *out = new rll_report{rll::run_command(command, config_json ? config_json : "")}; });
}

rll_status rll_report_passed(const rll_report* report, int* passed) {
  RLL_REQUIRE(report, passed);
  return guard([&] { *passed = report->value.passed ? 1 : 0; });
}

rll_status rll_report_json(const rll_report* report, char** out) {
  RLL_REQUIRE(report, out);
  return guard([&] { *out = dup_string(report->value.json()); });
}

rll_status rll_report_text(const rll_report* report, char** out) {
  RLL_REQUIRE(report, out);
  return guard([&] { *out = dup_string(report->value.text()); });
}

rll_status rll_report_table_count(const rll_report* report, size_t* count) {
  RLL_REQUIRE(report, count);
  return guard([&] { *count = report->value.tables.size(); });
}

rll_status rll_report_table_name(const rll_report* report, size_t index, const char** name) {
  RLL_REQUIRE(report, name);
  return guard([&] {
    if (index >= report->value.tables.size()) rll::fail(rll::ErrorCode::Index, "table index out of range");
    *name = report->value.tables[index].name().c_str();
  });
}

rll_status rll_report_table_csv(const rll_report* report, size_t index, char** out) {
  RLL_REQUIRE(report, out);
  return guard([&] {
    if (index >= report->value.tables.size()) rll::fail(rll::ErrorCode::Index, "table index out of range");
    *out = dup_string(report->value.tables[index].csv());
  });
}

rll_status rll_report_write(const rll_report* report, const char* dir) {
  RLL_REQUIRE(report, dir);
  return guard([&] { report->value.write(dir); });
}

void rll_report_free(rll_report* report) { delete report; }

}  // extern "C"
