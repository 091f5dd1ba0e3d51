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

#include "optimize.hpp"

#include <cmath>
#include <limits>

#include "rng.hpp"

namespace rll {

void TrainConfig::validate() const {
  if (max_iters < 1) fail(ErrorCode::Config, "max_iters must be >= 1");
  if (!(grad_tol > 0.0)) fail(ErrorCode::Config, "grad_tol must be positive");
  if (!(initial_step > 0.0) || !(shrink > 0.0 && shrink < 1.0) || !(sufficient_decrease > 0.0 && sufficient_decrease < 1.0)) {
    fail(ErrorCode::Config, "line search parameters out of range");
  }
  if (init == InitKind::Gaussian && !(init_scale > 0.0)) fail(ErrorCode::Config, "init_scale must be positive");
}

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::MaxIters: return "max_iters";
    case StopReason::Stalled: return "stalled";
  }
  return "unknown";
}

MinimizeResult minimize(const ObjectiveFn& objective, Vector theta0, const TrainConfig& config) {
  config.validate();
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  constexpr double kFlatUlps = 8.0;
  MinimizeResult res;
  res.theta = std::move(theta0);
  ValueGrad cur = objective(res.theta);
  auto diverged = [&](const char* where) {
    throw DivergenceError(std::string("minimize: non-finite ") + where + " at iteration " + std::to_string(res.iterations),
                          res.trace);
  };
  if (!std::isfinite(cur.value) || !cur.grad.allFinite()) diverged("objective");

  double gnorm = cur.grad.norm();
  if (config.record_trace) res.trace.push_back({0, cur.value, gnorm, 0.0});
  res.reason = StopReason::MaxIters;
  while (true) {
    if (gnorm <= config.grad_tol * std::max(1.0, res.theta.norm())) {
      res.reason = StopReason::Converged;
      break;
    }
    if (res.iterations >= config.max_iters) break;

    const double slope = gnorm * gnorm;
    double step = config.initial_step;
    bool accepted = false;
    Vector trial;
    ValueGrad next;
    for (int k = 0; k < 200 && step > 0.0; ++k, step *= config.shrink) {
      trial = res.theta - step * cur.grad;
      next = objective(trial);
      if (!std::isfinite(next.value)) continue;
      if (!next.grad.allFinite()) diverged("gradient");
      // Predicted decrease below rounding: Armijo cannot tell, use |grad| instead.
      const bool flat = step * slope <= kFlatUlps * kEps * std::max(1.0, std::abs(cur.value));
      if (flat ? next.grad.norm() < gnorm
               : next.value <= cur.value - config.sufficient_decrease * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.reason = StopReason::Stalled;
      break;
    }
    res.theta = std::move(trial);
    cur = std::move(next);
    gnorm = cur.grad.norm();
    ++res.iterations;
    if (config.record_trace) res.trace.push_back({res.iterations, cur.value, gnorm, step});
  }
  res.final_value = cur.value;
  res.final_grad_norm = gnorm;
  return res;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::string out = "iter,objective,grad_norm,step\n";
  for (const auto& r : trace) {
    out += std::to_string(r.iter) + "," + format_double(r.objective) + "," + format_double(r.grad_norm) + "," +
           format_double(r.step) + "\n";
  }
  return out;
}

Vector initial_theta(const Model& model, const TrainConfig& config) {
  Vector theta = Vector::Zero(model.num_params());
  if (config.init == InitKind::Gaussian) {
    Rng rng(config.init_seed);
    for (auto& v : theta) v = config.init_scale * rng.normal();
  }
  return theta;
}

MinimizeResult train(const Model& model, const Dataset& data, const ObjectiveTerms& terms, const TrainConfig& config,
                     Vector theta0) {
  data.validate();
  return minimize([&](const Vector& t) { return objective_grad(model, t, data, terms); }, std::move(theta0), config);
}

double clean_risk(const ModelOutput& z, const Dataset& data, const LossSpec& loss, bool reduced) {
  if (z.rows() != data.size()) fail(ErrorCode::Shape, "outputs and dataset differ in length");
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    s += row_loss(loss, z.row(i).transpose(), data.labels[static_cast<std::size_t>(i)], reduced).value;
  }
  return s / static_cast<double>(z.rows());
}

double exact_noisy_risk(const ModelOutput& z, const Dataset& data, const LossSpec& loss, const NoiseSpec& noise, bool reduced) {
  if (z.rows() != data.size()) fail(ErrorCode::Shape, "outputs and dataset differ in length");
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Vector p = flip_distribution(data.labels[static_cast<std::size_t>(i)], noise);
    const Vector zi = z.row(i).transpose();
    for (int j = 0; j < noise.num_classes; ++j) s += p[j] * row_loss(loss, zi, j, reduced).value;
  }
  return s / static_cast<double>(z.rows());
}

double exact_noisy_risk(const Model& model, const Dataset& data, const LossSpec& loss, const NoiseSpec& noise) {
  return exact_noisy_risk(model.forward(data.features), data, loss, noise, model.reduced());
}

RiskReport risk_identity_report(const ModelOutput& z, const Dataset& data, const LossSpec& loss, const NoiseSpec& noise,
                                bool reduced) {
  RiskReport r;
  r.clean_risk = clean_risk(z, data, loss, reduced);
  r.exact_noisy_risk = exact_noisy_risk(z, data, loss, noise, reduced);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Vector zi = z.row(i).transpose();
    const double t = symmetry_sum(loss, reduced ? embed(zi) : zi);
    total += t;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  r.total_label_risk = total / static_cast<double>(z.rows());
  r.total_label_spread = hi - lo;
  const int c = noise.num_classes;
  r.identity_residual = std::abs(r.exact_noisy_risk - (noise.rho / (c - 1) * r.total_label_risk + noise.a * r.clean_risk));
  return r;
}

RiskReport risk_identity_report(const Model& model, const Dataset& data, const LossSpec& loss, const NoiseSpec& noise) {
  return risk_identity_report(model.forward(data.features), data, loss, noise, model.reduced());
}

Matrix closed_form_muh_quadratic(const Dataset& data, const FeatureMap& phi, const Matrix& a, const std::optional<NoiseSpec>& noise) {
  data.validate();
  const int c = data.num_classes;
  if (a.rows() != c || a.cols() != c) fail(ErrorCode::Shape, "closed form needs a C x C matrix A");
  const Matrix features = phi.apply(data.features);
  const double inv_n = 1.0 / static_cast<double>(data.size());
  const Matrix s = inv_n * features.transpose() * features;
  Matrix targets(data.size(), c);
  for (Eigen::Index i = 0; i < data.size(); ++i) targets.row(i) = onehot_star(data.labels[static_cast<std::size_t>(i)], c).transpose();
  Matrix b = inv_n * targets.transpose() * features;
  if (noise) b *= noise->a;
  // Theta S = 1/2 A^{-1} B  =>  S Theta^T = 1/2 (A^{-1} B)^T
  const Matrix ainv_b = solve_dense(a, b, "regularizer matrix A");
  return solve_dense(s, 0.5 * ainv_b.transpose(), "feature second-moment matrix S").transpose();
}

namespace {

/// Per-parameter output directions: result[j] = grad Z(theta) e_j.
std::vector<ModelOutput> output_jacobian(const Model& model, const Vector& theta, const Matrix& x) {
  std::vector<ModelOutput> cols;
  cols.reserve(static_cast<std::size_t>(model.num_params()));
  Vector e = Vector::Zero(model.num_params());
  for (Eigen::Index j = 0; j < model.num_params(); ++j) {
    e[j] = 1.0;
    cols.push_back(model.jvp(x, theta, e));
    e[j] = 0.0;
  }
  return cols;
}

}  // namespace

Matrix regularizer_hessian_at_origin(const Model& model, const Vector& theta0, const Dataset& data, const RegularizerSpec& reg) {
  if (reg.dim() != model.output_dim()) fail(ErrorCode::Config, "regularizer and model output dims differ");
  const auto cols = output_jacobian(model, theta0, data.features);
  const Matrix hg = reg_hessian_at_min(reg);
  const Eigen::Index m = model.num_params();
  const Eigen::Index k = model.output_dim();
  Matrix h = Matrix::Zero(m, m);
  Matrix ji(k, m);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < m; ++j) ji.col(j) = cols[static_cast<std::size_t>(j)].row(i).transpose();
    h.noalias() += ji.transpose() * hg * ji;
  }
  h /= static_cast<double>(data.size());
  return 0.5 * (h + h.transpose());
}

ReferenceDirection reference_direction(const Model& model, const Vector& theta0, const Dataset& data, const LossSpec& loss,
                                       const RegularizerSpec& reg, const std::optional<NoiseSpec>& noise,
                                       bool allow_pseudo_inverse) {
  data.validate();
  const ModelOutput z0 = model.forward(data.features, theta0);
  if (z0.cwiseAbs().maxCoeff() > 1e-12) fail(ErrorCode::Config, "reference direction requires Z(theta0) = 0");

  ReferenceDirection out;
  ObjectiveTerms loss_only{loss, reg, 1.0, 0.0, noise};
  out.loss_grad = objective_grad(model, theta0, data, loss_only).grad;
  if (out.loss_grad.norm() == 0.0) fail(ErrorCode::DegenerateLoss, "loss gradient vanishes at theta0");

  out.reg_hessian = regularizer_hessian_at_origin(model, theta0, data, reg);
  Eigen::SelfAdjointEigenSolver<Matrix> es(out.reg_hessian);
  const Vector ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  const double cutoff = 1e-10 * top;
  if (!(ev.minCoeff() > cutoff)) {
    if (!allow_pseudo_inverse || !(top > 0.0)) {
      fail(ErrorCode::Degeneracy, "regularizer Hessian at theta0 is singular (min eigenvalue " + format_double(ev.minCoeff()) + ")");
    }
    out.degenerate_hessian = true;
    Vector inv = Vector::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev[i] > cutoff) inv[i] = 1.0 / ev[i];
    out.v = -(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose()) * out.loss_grad;
  } else {
    out.v = -solve_dense(out.reg_hessian, out.loss_grad, "regularizer Hessian");
  }

  ModelOutput field = model.jvp(data.features, theta0, out.v);
  const double norm = norm_l2(field);
  if (!(norm > 0.0)) fail(ErrorCode::DegenerateOutput, "reference output field vanishes");
  out.field = field / norm;
  out.min_row_norm = out.field.rowwise().norm().minCoeff();
  return out;
}

ProbeResult hessian_pd_probe(const std::function<double(const Vector&)>& objective, const Vector& theta, int n_dirs,
                             std::uint64_t seed) {
  if (n_dirs < 1) fail(ErrorCode::Config, "probe needs at least one direction");
  Rng rng(seed);
  const double h = 1e-3 * std::max(1.0, theta.norm());
  const double f0 = objective(theta);
  ProbeResult out;
  out.min_rayleigh = std::numeric_limits<double>::infinity();
  Vector u(theta.size());
  for (int d = 0; d < n_dirs; ++d) {
    for (auto& v : u) v = rng.normal();
    u.normalize();
    const double q = (objective(theta + h * u) - 2.0 * f0 + objective(theta - h * u)) / (h * h);
    out.min_rayleigh = std::min(out.min_rayleigh, q);
  }
  return out;
}

double empirical_alpha0(const Model& model, const Vector& theta0, const Dataset& data, const ObjectiveTerms& terms, int n_dirs,
                        std::uint64_t seed, double alpha_start, double min_alpha) {
  auto probe = [&](double alpha) {
    ObjectiveTerms t = terms;
    t.loss_weight = alpha;
    return hessian_pd_probe([&](const Vector& th) { return objective_grad(model, th, data, t).value; }, theta0, n_dirs, seed)
        .min_rayleigh;
  };
  for (double alpha = alpha_start; alpha >= min_alpha; alpha *= 0.5) {
    if (probe(alpha) > 0.0 && probe(-alpha) > 0.0) return alpha;
  }
  return 0.0;
}

double normalized_output_distance(const ModelOutput& z1, const ModelOutput& z2) {
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols()) fail(ErrorCode::Shape, "output fields differ in shape");
  const double n1 = norm_l2(z1);
  const double n2 = norm_l2(z2);
  if (!(n1 > 0.0) || !(n2 > 0.0)) fail(ErrorCode::DegenerateOutput, "normalized distance needs non-zero outputs");
  return norm_l2(z1 / n1 - z2 / n2);
}

}  // namespace rll
