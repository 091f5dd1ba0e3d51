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

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "domain.hpp"
#include "errors.hpp"
#include "models.hpp"

namespace rll {

enum class InitKind { Zeros, Gaussian };

struct TrainConfig {
  int max_iters = 20000;
  /// Stop when |grad| <= grad_tol * max(1, |theta|).
  double grad_tol = 1e-10;
  InitKind init = InitKind::Zeros;
  double init_scale = 0.1;
  std::uint64_t init_seed = 0;
  double initial_step = 1.0;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  bool record_trace = false;

  void validate() const;
};

struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

enum class StopReason { Converged, MaxIters, Stalled };
const char* stop_reason_name(StopReason r);

struct MinimizeResult {
  Vector theta;
  int iterations = 0;
  double final_value = 0.0;
  double final_grad_norm = 0.0;
  StopReason reason = StopReason::MaxIters;
  std::vector<TraceRow> trace;
};

/// Raised when the objective or its gradient becomes non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<TraceRow> trace)
      : Error(ErrorCode::Divergence, what), trace_(std::move(trace)) {}
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  std::vector<TraceRow> trace_;
};

using ObjectiveFn = std::function<ValueGrad(const Vector&)>;

/// Gradient descent with Armijo backtracking. When the predicted decrease is
/// under 8 ulps of the objective a step is accepted if it lowers |grad|, so
/// the trace is non-increasing up to that rounding band.
MinimizeResult minimize(const ObjectiveFn& objective, Vector theta0, const TrainConfig& config);

std::string trace_csv(const std::vector<TraceRow>& trace);

/// Starting parameters per config.init (zeros or seeded Gaussian).
Vector initial_theta(const Model& model, const TrainConfig& config);

/// Minimises the objective over the model's parameters from theta0.
MinimizeResult train(const Model& model, const Dataset& data, const ObjectiveTerms& terms, const TrainConfig& config,
                     Vector theta0);

struct RiskReport {
  double clean_risk = 0.0;
  double exact_noisy_risk = 0.0;
  /// Mean over samples of sum_y l(z_i, y).
  double total_label_risk = 0.0;
  /// max - min over samples of sum_y l(z_i, y); 0 for symmetric losses.
  double total_label_spread = 0.0;
  /// |noisy - (rho/(C-1) T + a L)|
  double identity_residual = 0.0;
};

double clean_risk(const ModelOutput& z, const Dataset& data, const LossSpec& loss, bool reduced = false);
/// Mean over samples of the expectation over label flips, by enumeration.
double exact_noisy_risk(const ModelOutput& z, const Dataset& data, const LossSpec& loss, const NoiseSpec& noise,
                        bool reduced = false);
double exact_noisy_risk(const Model& model, const Dataset& data, const LossSpec& loss, const NoiseSpec& noise);

RiskReport risk_identity_report(const ModelOutput& z, const Dataset& data, const LossSpec& loss, const NoiseSpec& noise,
                                bool reduced = false);
RiskReport risk_identity_report(const Model& model, const Dataset& data, const LossSpec& loss, const NoiseSpec& noise);

/// Minimiser of E[MUH(Theta phi, Y)] + E[(Theta phi)^T A (Theta phi)] over
/// linear heads: Theta = 1/2 A^{-1} B S^{-1}, S = E[phi phi^T],
/// B = E[onehot*(Y) phi^T] (times a under exact noise). Returns C x p.
Matrix closed_form_muh_quadratic(const Dataset& data, const FeatureMap& phi, const Matrix& a,
                                 const std::optional<NoiseSpec>& noise = std::nullopt);

/// Exact Hessian of theta -> E[g(Z(theta))] at a point where Z = 0:
/// E[J_i^T Hess g(0) J_i] with J_i the per-sample output Jacobian.
Matrix regularizer_hessian_at_origin(const Model& model, const Vector& theta0, const Dataset& data,
                                     const RegularizerSpec& reg);

struct ReferenceDirection {
  /// v = -[Hess G(theta0)]^{-1} grad L(theta0)
  Vector v;
  Vector loss_grad;
  Matrix reg_hessian;
  /// grad Z(theta0) v, normalised to unit L2 norm.
  ModelOutput field;
  /// Smallest row norm of `field`.
  double min_row_norm = 0.0;
  /// Set when the Hessian was singular and a pseudo-inverse was used.
  bool degenerate_hessian = false;
};

/// Limiting direction of the minimisers of alpha L + G as alpha -> 0.
/// Requires Z(theta0) = 0. Throws Degeneracy for a singular Hessian unless
/// allow_pseudo_inverse is set, and DegenerateLoss when grad L(theta0) = 0.
ReferenceDirection reference_direction(const Model& model, const Vector& theta0, const Dataset& data, const LossSpec& loss,
                                       const RegularizerSpec& reg, const std::optional<NoiseSpec>& noise = std::nullopt,
                                       bool allow_pseudo_inverse = false);

struct ProbeResult {
  double min_rayleigh = 0.0;
};

/// Minimum over n_dirs random unit directions u of the second difference
/// (f(t + h u) - 2 f(t) + f(t - h u)) / h^2, h = 1e-3 max(1, |t|).
ProbeResult hessian_pd_probe(const std::function<double(const Vector&)>& objective, const Vector& theta, int n_dirs,
                             std::uint64_t seed);

/// Largest alpha in {alpha_start / 2^k} at which both alpha L + G and
/// -alpha L + G probe positive definite at theta0; 0 if none above min_alpha.
double empirical_alpha0(const Model& model, const Vector& theta0, const Dataset& data, const ObjectiveTerms& terms,
                        int n_dirs, std::uint64_t seed, double alpha_start = 1024.0, double min_alpha = 1e-8);

/// | Z1 / |Z1|_L2 - Z2 / |Z2|_L2 |_L2, in [0, 2].
double normalized_output_distance(const ModelOutput& z1, const ModelOutput& z2);

}  // namespace rll
