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
#include <filesystem>
#include <fstream>

#include "domain.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "oracles.hpp"
#include "regularizers.hpp"
#include "rng.hpp"

using namespace rll;

namespace {

Vector random_vec(Rng& rng, int n, double scale) {
  Vector z(n);
  for (auto& v : z) v = scale * rng.normal();
  return z;
}

Matrix random_spd(Rng& rng, int n) {
  Matrix b(n, n);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
  Matrix a = b * b.transpose() + 0.5 * Matrix::Identity(n, n);
  return 0.5 * (a + a.transpose());
}

std::vector<RegularizerSpec> specs(Rng& rng, int c) {
  return {RegularizerSpec::quadratic(0.5 * Matrix::Identity(c, c), c), RegularizerSpec::quadratic(random_spd(rng, c), c),
          RegularizerSpec::quadratic(random_spd(rng, c - 1), c, true), RegularizerSpec::entropy(c),
          RegularizerSpec::label_smoothing(c)};
}

}  // namespace

TEST_SUITE("regularizers") {

TEST_CASE("worked values") {
  Vector z(2);
  z << 1, 2;
  const RegEval q = reg_eval(RegularizerSpec::quadratic(0.5 * Matrix::Identity(2, 2), 2), z);
  CHECK(q.value == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(q.grad[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(q.grad[1] == doctest::Approx(2.0).epsilon(1e-15));

  for (int c : {2, 3, 5, 10}) {
    const RegEval e = reg_eval(RegularizerSpec::entropy(c), Vector::Zero(c - 1));
    CHECK(std::abs(e.value + std::log(c)) <= 1e-15);
    CHECK(e.grad.cwiseAbs().maxCoeff() <= 1e-16);
    const RegEval l = reg_eval(RegularizerSpec::label_smoothing(c), Vector::Zero(c - 1));
    CHECK(std::abs(l.value - std::log(c)) <= 1e-15);
    CHECK(l.grad.cwiseAbs().maxCoeff() <= 1e-16);
  }
}

TEST_CASE("penalty values agree with textbook formulas") {
  Rng rng(1);
  for (int c : {2, 3, 5}) {
    for (int t = 0; t < 50; ++t) {
      const Vector z = random_vec(rng, c - 1, 2.0);
      CHECK(std::abs(reg_eval(RegularizerSpec::entropy(c), z).value - oracle::entropy_reduced(z)) <= 1e-12);
      CHECK(std::abs(reg_eval(RegularizerSpec::label_smoothing(c), z).value - oracle::label_smoothing_reduced(z)) <= 1e-12);
    }
  }
}

TEST_CASE("gradients match central differences") {
  Rng rng(2);
  for (int c : {2, 3, 5}) {
    for (const RegularizerSpec& g : specs(rng, c)) {
      for (int t = 0; t < 100; ++t) {
        const Vector z = random_vec(rng, g.dim(), 2.0);
        const Vector fd = oracle::fd_gradient([&](const Vector& x) { return reg_eval(g, x).value; }, z);
        CHECK_MESSAGE(oracle::rel_err(reg_eval(g, z).grad, fd) <= 1e-6, to_string(g), " C=", c);
      }
    }
  }
}

TEST_CASE("hessian at the minimum") {
  Rng rng(3);
  const Matrix a = random_spd(rng, 4);
  CHECK(reg_hessian_at_min(RegularizerSpec::quadratic(a, 4)) == 2.0 * a);

  // Second central differences at 0 with step 1e-4 give 0.25 for both penalties at C = 2.
  constexpr double kTwoClassCurvature = 0.25;
  for (const RegularizerSpec& g : {RegularizerSpec::entropy(2), RegularizerSpec::label_smoothing(2)}) {
    const Matrix fd = oracle::fd_hessian([&](const Vector& x) { return reg_eval(g, x).value; }, Vector::Zero(1), 1e-4);
    CHECK(std::abs(fd(0, 0) - kTwoClassCurvature) <= 1e-6);
    CHECK(std::abs(reg_hessian_at_min(g)(0, 0) - kTwoClassCurvature) <= 1e-15);
  }

  for (int c : {3, 5, 10}) {
    for (const RegularizerSpec& g : {RegularizerSpec::entropy(c), RegularizerSpec::label_smoothing(c)}) {
      const Matrix h = reg_hessian_at_min(g);
      const Matrix fd = oracle::fd_hessian([&](const Vector& x) { return reg_eval(g, x).value; }, Vector::Zero(c - 1), 1e-4);
      CHECK((h - fd).norm() <= 1e-5 * h.norm());
      CHECK(is_symmetric(h, 1e-15));
      CHECK(min_eigenvalue(h) > 0.0);
    }
  }
}

TEST_CASE("quadratize") {
  Rng rng(4);
  const Matrix a = random_spd(rng, 3);
  const RegularizerSpec q = quadratize(RegularizerSpec::quadratic(a, 3));
  CHECK(q.kind == RegKind::Quadratic);
  CHECK((q.a - 2.0 * a).cwiseAbs().maxCoeff() <= 1e-15);

  for (const RegularizerSpec& g : {RegularizerSpec::entropy(4), RegularizerSpec::label_smoothing(4)}) {
    const RegularizerSpec gsq = quadratize(g);
    CHECK(gsq.reduced);
    CHECK((quadratize(gsq).a - 2.0 * reg_hessian_at_min(g)).cwiseAbs().maxCoeff() <= 1e-15);
    // 2 (g(z) - g(0)) - g_sq(z) is third order.
    Vector dir(3);
    dir << 0.3, -0.9, 0.5;
    const double g0 = reg_eval(g, Vector::Zero(3)).value;
    double prev = 0.0;
    for (double r : {1e-1, 1e-2, 1e-3}) {
      const Vector z = r * dir;
      const double rem = std::abs(2.0 * (reg_eval(g, z).value - g0) - reg_eval(gsq, z).value);
      CHECK(rem <= 10.0 * r * r * r);
      if (prev > 0.0) CHECK(rem < prev / 200.0);
      prev = rem;
    }
  }
}

TEST_CASE("penalties are strictly convex near 0 in reduced space") {
  Rng rng(5);
  for (int c : {2, 3, 5}) {
    for (const RegularizerSpec& g : {RegularizerSpec::entropy(c), RegularizerSpec::label_smoothing(c)}) {
      for (int t = 0; t < 50; ++t) {
        Vector x = random_vec(rng, c - 1, 1.0);
        x *= 0.1 * rng.uniform() / std::max(1e-12, x.norm());
        Vector u = random_vec(rng, c - 1, 1.0);
        u.normalize();
        const double h = 1e-4;
        const double d2 = (reg_eval(g, x + h * u).value - 2.0 * reg_eval(g, x).value + reg_eval(g, x - h * u).value) / (h * h);
        CHECK(d2 > 0.0);
        CHECK(reg_eval(g, x).value >= reg_eval(g, Vector::Zero(c - 1)).value);
      }
    }
  }
}

TEST_CASE("reduce and embed") {
  Vector z(3);
  z << 3, 1, 2;
  const Vector r = reduce_outputs(z);
  CHECK(r.size() == 2);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == -1.0);

  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    const Vector x = random_vec(rng, 4, 3.0);
    CHECK((softmax(embed(reduce_outputs(x))) - softmax(x)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((reduce_outputs(x.array() + 2.5) - reduce_outputs(x)).cwiseAbs().maxCoeff() <= 1e-12);
    const Vector y = random_vec(rng, 3, 3.0);
    CHECK(reduce_outputs(embed(y)) == y);
    Eigen::Index a = 0;
    Eigen::Index b = 0;
    x.maxCoeff(&a);
    embed(reduce_outputs(x)).maxCoeff(&b);
    CHECK(a == b);
  }
}

TEST_CASE("construction and parsing") {
  auto code = [](auto f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  Matrix ns(2, 2);
  ns << 1, 0.5, 0, 1;
  CHECK(code([&] { RegularizerSpec::quadratic(ns, 2); }) == ErrorCode::Config);
  Matrix indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  CHECK(code([&] { RegularizerSpec::quadratic(indefinite, 2); }) == ErrorCode::Degeneracy);
  CHECK(code([&] { RegularizerSpec::quadratic(Matrix::Identity(3, 3), 2); }) == ErrorCode::Shape);

  CHECK(parse_regularizer("quad:identity", 3).a == Matrix::Identity(3, 3));
  CHECK(parse_regularizer("QUAD:scale=0.5", 3).a == 0.5 * Matrix::Identity(3, 3));
  CHECK(parse_regularizer("entropy", 4).dim() == 3);
  CHECK(parse_regularizer("label_smoothing", 4).kind == RegKind::LabelSmoothing);

  const auto path = std::filesystem::temp_directory_path() / "rll_matrix.csv";
  {
    std::ofstream out(path);
    out << "2,0.5\n0.5,1\n";
  }
  const RegularizerSpec f = parse_regularizer("quad:file=" + path.string(), 2);
  CHECK(f.a(0, 1) == 0.5);
  std::filesystem::remove(path);

  CHECK(code([] { parse_regularizer("l2", 3); }) == ErrorCode::Parse);
  CHECK(code([] { parse_regularizer("quad:bogus", 3); }) == ErrorCode::Parse);
  CHECK(code([] { parse_regularizer("entropy:1", 3); }) == ErrorCode::Parse);
  CHECK(code([] { parse_regularizer("quad:file=/nonexistent.csv", 3); }) == ErrorCode::Io);

  Vector bad(2);
  bad << std::nan(""), 0;
  CHECK(code([&] { reg_eval(RegularizerSpec::entropy(3), bad); }) == ErrorCode::Domain);
}

}
