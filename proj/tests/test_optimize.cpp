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

#include <doctest.h>

#include <cmath>
#include <limits>

#include "domain.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "optimize.hpp"
#include "oracles.hpp"
#include "rng.hpp"

using namespace rll;

namespace {

Dataset blobs(int c, int n_per_class, std::uint64_t seed) {
  SyntheticSpec s;
  s.num_classes = c;
  s.dim = c;
  s.n_per_class = n_per_class;
  s.centers = default_centers(c, c, 3.0);
  s.sigma = 1.0;
  s.seed = seed;
  return make_blobs(s);
}

Dataset sample_data(Rng& rng, int n, int d, int c) {
  Dataset data;
  data.num_classes = c;
  data.features.resize(n, d);
  for (Eigen::Index i = 0; i < data.features.size(); ++i) data.features.data()[i] = rng.normal();
  for (int i = 0; i < n; ++i) data.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(c))));
  return data;
}

Matrix random_outputs(Rng& rng, Eigen::Index n, int c) {
  Matrix z(n, c);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = 2.0 * rng.normal();
  return z;
}

Vector flatten(const Matrix& m) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r = m;
  return Eigen::Map<const Vector>(r.data(), r.size());
}

// Flip enumeration written out independently of the library.
double enumerated_noisy_risk(const Matrix& z, const Dataset& d, const LossSpec& l, double rho) {
  const int c = d.num_classes;
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (int j = 0; j < c; ++j) {
      const double p = j == d.labels[static_cast<std::size_t>(i)] ? 1.0 - rho : rho / (c - 1);
      s += p * loss_value(l, z.row(i).transpose(), j);
    }
  }
  return s / static_cast<double>(z.rows());
}

}  // namespace

TEST_SUITE("optimize") {

TEST_CASE("exact noisy risk") {
  Rng rng(1);
  const Dataset d = sample_data(rng, 20, 4, 3);
  const Matrix z = random_outputs(rng, 20, 3);
  for (const LossSpec& l : {LossSpec::softmax_ce(3), LossSpec::mae(3), LossSpec::gce(3, 0.7), LossSpec::muh(3)}) {
    CHECK(exact_noisy_risk(z, d, l, noise_constants(0.0, 3)) == clean_risk(z, d, l));
    CHECK(std::abs(exact_noisy_risk(z, d, l, noise_constants(0.3, 3)) - enumerated_noisy_risk(z, d, l, 0.3)) <= 1e-13);
  }
  const NoiseSpec n = noise_constants(0.3, 3);
  const double clean = clean_risk(z, d, LossSpec::muh(3));
  CHECK(std::abs(exact_noisy_risk(z, d, LossSpec::muh(3), n) - n.a * clean) <= 1e-14);
}

TEST_CASE("risk identity") {
  Rng rng(2);
  for (int c : {2, 3, 5}) {
    const Dataset d = sample_data(rng, 20, 4, c);
    const Matrix z = random_outputs(rng, 20, c);
    for (double rho : {0.1, 0.3}) {
      const NoiseSpec n = noise_constants(rho, c);
      for (const LossSpec& l : {LossSpec::muh(c), LossSpec::mae(c), LossSpec::gce(c, 0.7), LossSpec::sce(c, 1.0),
                                LossSpec::softmax_ce(c), LossSpec::square_star(c), linearize(LossSpec::softmax_ce(c))}) {
        const RiskReport r = risk_identity_report(z, d, l, n);
        CHECK(r.identity_residual <= 1e-12);
        // Right-hand side from separate passes over the data.
        double clean = 0.0;
        double total = 0.0;
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
          clean += loss_value(l, z.row(i).transpose(), d.labels[static_cast<std::size_t>(i)]);
          for (int y = 0; y < c; ++y) total += loss_value(l, z.row(i).transpose(), y);
        }
        clean /= 20.0;
        total /= 20.0;
        CHECK(std::abs(enumerated_noisy_risk(z, d, l, rho) - (rho / (c - 1) * total + n.a * clean)) <= 1e-12);
      }
    }
  }
  const Dataset d = sample_data(rng, 20, 4, 3);
  const Matrix z = random_outputs(rng, 20, 3);
  const RiskReport mae = risk_identity_report(z, d, LossSpec::mae(3), noise_constants(0.2, 3));
  CHECK(std::abs(mae.total_label_risk - 4.0) <= 1e-12);
  CHECK(mae.total_label_spread <= 1e-12);
  const RiskReport muh = risk_identity_report(z, d, LossSpec::muh(3), noise_constants(0.2, 3));
  CHECK(std::abs(muh.total_label_risk) <= 1e-12);
  CHECK(muh.total_label_spread <= 1e-12);
}

TEST_CASE("minimize a convex quadratic") {
  Vector c(3);
  c << 1.0, -2.0, 0.5;
  TrainConfig cfg;
  cfg.record_trace = true;
  const auto f = [&](const Vector& t) { return ValueGrad{0.5 * (t - c).squaredNorm(), t - c}; };
  const MinimizeResult r = minimize(f, Vector::Zero(3), cfg);
  CHECK(r.reason == StopReason::Converged);
  CHECK((r.theta - c).norm() <= 1e-8);
  CHECK(r.trace.front().iter == 0);
  CHECK(r.trace.size() == static_cast<std::size_t>(r.iterations) + 1);

  const MinimizeResult at = minimize(f, c, cfg);
  CHECK(at.iterations == 0);
  CHECK(at.reason == StopReason::Converged);

  TrainConfig few = cfg;
  few.max_iters = 1;
  Matrix a(2, 2);
  a << 100, 0, 0, 1;
  const auto ill = [&](const Vector& t) { return ValueGrad{0.5 * t.dot(a * t), a * t}; };
  const MinimizeResult capped = minimize(ill, Vector::Ones(2), few);
  CHECK(capped.reason == StopReason::MaxIters);
  CHECK(capped.iterations == 1);
}

TEST_CASE("objective trace never rises beyond rounding") {
  const Dataset d = blobs(3, 30, 3);
  const Model m = Model::linear(FeatureMap::append_constant(3), 3);
  TrainConfig cfg;
  cfg.record_trace = true;
  cfg.grad_tol = 1e-13;
  cfg.max_iters = 3000;
  const ObjectiveTerms terms{LossSpec::softmax_ce(3), parse_regularizer("quad:scale=0.5", 3), 1.0, 1.0, noise_constants(0.3, 3)};
  const MinimizeResult r = train(m, d, terms, cfg, Vector::Zero(m.num_params()));
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    const double band = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(r.trace[i - 1].objective));
    CHECK(r.trace[i].objective <= r.trace[i - 1].objective + band);
  }
  CHECK(r.final_grad_norm < 1e-9);
  const std::string csv = trace_csv(r.trace);
  CHECK(csv.rfind("iter,objective,grad_norm,step\n0,", 0) == 0);
}

TEST_CASE("divergence is reported with the trace") {
  TrainConfig cfg;
  cfg.record_trace = true;
  const auto nan_start = [](const Vector&) { return ValueGrad{std::nan(""), Vector::Zero(1)}; };
  CHECK_THROWS_AS(minimize(nan_start, Vector::Zero(1), cfg), DivergenceError);

  // Finite value, gradient blows up once theta < -3.
  const auto blowup = [](const Vector& t) {
    Vector g(1);
    g[0] = t[0] < -3.0 ? std::numeric_limits<double>::infinity() : 1.0;
    return ValueGrad{t[0], g};
  };
  try {
    minimize(blowup, Vector::Zero(1), cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.code() == ErrorCode::Divergence);
    CHECK(!e.trace().empty());
  }
}

TEST_CASE("closed form for MUH with a quadratic penalty") {
  Dataset one;
  one.num_classes = 2;
  one.features = Matrix::Ones(4, 1);
  one.labels = {0, 0, 0, 0};
  const Matrix th = closed_form_muh_quadratic(one, FeatureMap::identity(1), 0.5 * Matrix::Identity(2, 2));
  CHECK(std::abs(th(0, 0) - 0.5) <= 1e-15);
  CHECK(std::abs(th(1, 0) + 0.5) <= 1e-15);

  for (std::uint64_t seed : {1, 2, 3}) {
    const Dataset d = blobs(3, 40, seed);
    const FeatureMap phi = FeatureMap::append_constant(3);
    Matrix a(3, 3);
    a << 1.0, 0.2, 0.0, 0.2, 0.7, 0.1, 0.0, 0.1, 0.5;
    const NoiseSpec n = noise_constants(0.4, 3);
    const Matrix clean = closed_form_muh_quadratic(d, phi, a);
    const Matrix noisy = closed_form_muh_quadratic(d, phi, a, n);
    CHECK((n.lambda_equiv * noisy - clean).norm() <= 1e-12);
    const Matrix f = phi.apply(d.features);
    CHECK(predict(f * noisy.transpose()) == predict(f * clean.transpose()));

    const Model m = Model::linear(phi, 3);
    TrainConfig cfg;
    cfg.grad_tol = 1e-12;
    cfg.max_iters = 100000;
    const MinimizeResult gd =
        train(m, d, {LossSpec::muh(3), RegularizerSpec::quadratic(a, 3), 1.0, 1.0, n}, cfg, Vector::Zero(m.num_params()));
    CHECK((gd.theta - flatten(noisy)).norm() <= 1e-6);
  }

  Dataset flat;
  flat.num_classes = 2;
  flat.features = Matrix::Zero(5, 2);
  flat.features.col(0).setOnes();
  flat.labels = {0, 1, 0, 1, 1};
  try {
    closed_form_muh_quadratic(flat, FeatureMap::identity(2), Matrix::Identity(2, 2));
    FAIL("expected rank error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Rank);
  }
}

TEST_CASE("symmetric loss: noisy minimiser is a clean stationary point with weight lambda") {
  const Dataset d = blobs(3, 40, 4);
  const Model m = Model::linear(FeatureMap::append_constant(3), 3);
  const NoiseSpec n = noise_constants(0.3, 3);
  const RegularizerSpec g = parse_regularizer("quad:scale=0.5", 3);
  TrainConfig cfg;
  cfg.grad_tol = 1e-12;
  cfg.max_iters = 100000;
  for (const LossSpec& l : {LossSpec::muh(3), LossSpec::mae(3)}) {
    const MinimizeResult noisy = train(m, d, {l, g, 1.0, 1.0, n}, cfg, Vector::Zero(m.num_params()));
    CHECK(noisy.reason == StopReason::Converged);
    const ValueGrad clean = objective_grad(m, noisy.theta, d, {l, g, 1.0, n.lambda_equiv, std::nullopt});
    CHECK(clean.grad.norm() <= 1e-6);
  }
}

TEST_CASE("reference direction") {
  Dataset one;
  one.num_classes = 2;
  one.features = Matrix::Ones(3, 1);
  one.labels = {0, 0, 0};
  const Model m1 = Model::linear(FeatureMap::identity(1), 2);
  const ReferenceDirection r1 = reference_direction(m1, Vector::Zero(2), one, LossSpec::muh(2),
                                                    RegularizerSpec::quadratic(0.5 * Matrix::Identity(2, 2), 2));
  CHECK(std::abs(r1.v[0] - 0.5) <= 1e-15);
  CHECK(std::abs(r1.v[1] + 0.5) <= 1e-15);
  CHECK(!r1.degenerate_hessian);

  const Dataset d = blobs(3, 20, 5);
  const Model m = Model::linear(FeatureMap::append_constant(3), 3);
  const RegularizerSpec g = parse_regularizer("quad:scale=0.5", 3);
  const ReferenceDirection clean = reference_direction(m, Vector::Zero(12), d, LossSpec::muh(3), g);
  const ReferenceDirection noisy = reference_direction(m, Vector::Zero(12), d, LossSpec::muh(3), g, noise_constants(0.4, 3));
  CHECK((noisy.v - noise_constants(0.4, 3).a * clean.v).norm() <= 1e-14);
  CHECK((noisy.field - clean.field).cwiseAbs().maxCoeff() <= 1e-14);

  CHECK_THROWS_AS(reference_direction(m, Vector::Ones(12), d, LossSpec::muh(3), g), Error);
}

TEST_CASE("regularizer Hessian at the origin matches finite differences") {
  const Dataset d = blobs(3, 6, 6);
  struct Case {
    Model model;
    RegularizerSpec reg;
  };
  const std::vector<Case> cases = {
      {Model::linear(FeatureMap::append_constant(3), 3), parse_regularizer("quad:scale=0.5", 3)},
      {Model::linear(FeatureMap::append_constant(3), 3, true), RegularizerSpec::entropy(3)},
      {Model::mlp2(3, 3, 3, true), RegularizerSpec::label_smoothing(3)},
  };
  for (const Case& c : cases) {
    const Vector t0 = c.model.origin_theta(7);
    const ObjectiveTerms g_only{LossSpec::softmax_ce(3), c.reg, 0.0, 1.0, std::nullopt};
    const Matrix h = regularizer_hessian_at_origin(c.model, t0, d, c.reg);
    const Matrix fd = oracle::fd_hessian([&](const Vector& t) { return objective_grad(c.model, t, d, g_only).value; }, t0, 1e-4);
    CHECK((h - fd).norm() <= 1e-5 * h.norm());
  }
}

TEST_CASE("hessian probe") {
  Matrix a(3, 3);
  a << 2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 0.4;
  const auto quad = [&](const Vector& t) { return t.dot(a * t); };
  const double lmin = min_eigenvalue(a);
  const ProbeResult p = hessian_pd_probe(quad, Vector::Zero(3), 200, 1);
  CHECK(p.min_rayleigh >= 2.0 * lmin - 1e-6);

  const Dataset d = blobs(3, 30, 8);
  const Model m = Model::linear(FeatureMap::append_constant(3), 3);
  const ObjectiveTerms terms{LossSpec::softmax_ce(3), parse_regularizer("quad:scale=0.5", 3), 0.0, 1.0, noise_constants(0.3, 3)};
  const ProbeResult at0 =
      hessian_pd_probe([&](const Vector& t) { return objective_grad(m, t, d, terms).value; }, Vector::Zero(12), 50, 2);
  CHECK(at0.min_rayleigh > 0.0);
  const double alpha0 = empirical_alpha0(m, Vector::Zero(12), d, terms, 50, 2);
  CHECK(alpha0 > 0.0);
  ObjectiveTerms big = terms;
  big.loss_weight = -4.0 * alpha0;
  CHECK(hessian_pd_probe([&](const Vector& t) { return objective_grad(m, t, d, big).value; }, Vector::Zero(12), 50, 2).min_rayleigh <
        at0.min_rayleigh);
}

TEST_CASE("normalized output distance") {
  Rng rng(9);
  const Matrix z = random_outputs(rng, 10, 3);
  CHECK(normalized_output_distance(z, 3.0 * z) <= 1e-15);
  CHECK(std::abs(normalized_output_distance(z, -z) - 2.0) <= 1e-15);
  Matrix e1 = Matrix::Zero(2, 2);
  Matrix e2 = Matrix::Zero(2, 2);
  e1(0, 0) = 1.0;
  e2(1, 1) = 1.0;
  CHECK(std::abs(normalized_output_distance(e1, e2) - std::sqrt(2.0)) <= 1e-15);
  try {
    normalized_output_distance(z, Matrix::Zero(10, 3));
    FAIL("expected degenerate output");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateOutput);
  }
}

TEST_CASE("convex minimisers do not depend on the initialisation") {
  const Dataset d = blobs(3, 30, 10);
  const Model m = Model::linear(FeatureMap::append_constant(3), 3);
  const ObjectiveTerms terms{LossSpec::softmax_ce(3), parse_regularizer("quad:scale=0.5", 3), 0.01, 1.0, noise_constants(0.3, 3)};
  TrainConfig zeros;
  zeros.grad_tol = 1e-12;
  TrainConfig gauss = zeros;
  gauss.init = InitKind::Gaussian;
  gauss.init_scale = 1.0;
  gauss.init_seed = 3;
  const MinimizeResult a = train(m, d, terms, zeros, initial_theta(m, zeros));
  const MinimizeResult b = train(m, d, terms, gauss, initial_theta(m, gauss));
  CHECK(initial_theta(m, gauss).norm() > 0.1);
  CHECK(norm_l2(m.forward(d.features, a.theta) - m.forward(d.features, b.theta)) <= 1e-6);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.grad_tol = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.shrink = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

}
