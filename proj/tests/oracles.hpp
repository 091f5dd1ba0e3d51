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

// Independent reference computations used by the tests.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double fd_step(const Vec& x) { return 1e-5 * std::max(1.0, x.norm()); }

/// Central differences with h = 1e-5 max(1, |x|).
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
  const double h = fd_step(x);
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x;
    Vec xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Second central differences of a scalar function.
inline Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  const Eigen::Index n = x.size();
  Mat hess(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      auto at = [&](double si, double sj) {
        Vec y = x;
        y[i] += si * h;
        y[j] += sj * h;
        return f(y);
      };
      hess(i, j) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
    }
  }
  return hess;
}

inline double rel_err(const Vec& analytic, const Vec& numeric) {
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-8});
  return (analytic - numeric).norm() / scale;
}

// Plain textbook formulas without max-shifting; callers keep |z| moderate.
inline Vec softmax(const Vec& z) {
  Vec e = z.array().exp();
  return e / e.sum();
}

inline double cross_entropy(const Vec& z, int y) { return -std::log(softmax(z)[y]); }

inline double mae(const Vec& z, int y) {
  const Vec p = softmax(z);
  double s = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) s += std::abs(p[k] - (k == y ? 1.0 : 0.0));
  return s;
}

inline double gce(const Vec& z, int y, double q) { return (1.0 - std::pow(softmax(z)[y], q)) / q; }

/// CE plus lambda (1 - p_y).
inline double sce(const Vec& z, int y, double lambda) {
  return cross_entropy(z, y) + lambda * (1.0 - softmax(z)[y]);
}

inline double muh(const Vec& z, int y) {
  const double c = static_cast<double>(z.size());
  double s = 0.0;
  for (Eigen::Index k = 0; k < z.size(); ++k) s += z[k] * ((k == y ? 1.0 : 0.0) - 1.0 / c);
  return -s;
}

inline double square_star(const Vec& z, int y) {
  const double c = static_cast<double>(z.size());
  double s = 0.0;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const double t = (k == y ? 1.0 : 0.0) - 1.0 / c;
    s += (z[k] - t) * (z[k] - t);
  }
  return s;
}

/// Entropy sum p log p of softmax((z', 0)).
inline double entropy_reduced(const Vec& zr) {
  Vec z(zr.size() + 1);
  z << zr, 0.0;
  const Vec p = softmax(z);
  return (p.array() * p.array().log()).sum();
}

inline double label_smoothing_reduced(const Vec& zr) {
  Vec z(zr.size() + 1);
  z << zr, 0.0;
  const Vec p = softmax(z);
  return -p.array().log().sum() / static_cast<double>(z.size());
}

}  // namespace oracle
