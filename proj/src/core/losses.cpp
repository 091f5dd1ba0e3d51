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

#include "losses.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "domain.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace rll {

LossSpec LossSpec::muh(int c) { return LossSpec{LossKind::Muh, c}; }
LossSpec LossSpec::mae(int c) { return LossSpec{LossKind::Mae, c}; }
LossSpec LossSpec::softmax_ce(int c) { return LossSpec{LossKind::SoftmaxCe, c}; }
LossSpec LossSpec::square_star(int c) { return LossSpec{LossKind::SquareStar, c}; }

LossSpec LossSpec::gce(int c, double q) {
  LossSpec s{LossKind::Gce, c};
  s.q = q;
  s.validate();
  return s;
}

LossSpec LossSpec::sce(int c, double lambda_sce) {
  LossSpec s{LossKind::Sce, c};
  s.lambda_sce = lambda_sce;
  s.validate();
  return s;
}

LossSpec LossSpec::linearized(Matrix rows) {
  LossSpec s{LossKind::Linearized, static_cast<int>(rows.rows())};
  s.linear_rows = std::move(rows);
  s.validate();
  return s;
}

void LossSpec::validate() const {
  if (num_classes < 2) fail(ErrorCode::Config, "loss needs C >= 2");
  if (kind == LossKind::Gce && !(q > 0.0 && q <= 1.0)) {
    fail(ErrorCode::Config, "GCE requires q in (0, 1], got " + format_double(q));
  }
  if (kind == LossKind::Sce && !(lambda_sce >= 0.0 && std::isfinite(lambda_sce))) {
    fail(ErrorCode::Config, "SCE requires lambda >= 0, got " + format_double(lambda_sce));
  }
  if (kind == LossKind::Linearized &&
      (linear_rows.rows() != num_classes || linear_rows.cols() != num_classes || !linear_rows.allFinite())) {
    fail(ErrorCode::Config, "linearized loss needs a finite C x C gradient matrix");
  }
}

LossEval loss_eval(const LossSpec& spec, const Eigen::Ref<const Vector>& z, int y) {
  spec.validate();
  const int c = spec.num_classes;
  if (z.size() != c) fail(ErrorCode::Shape, "loss input has wrong length");
  if (!z.allFinite()) fail(ErrorCode::Domain, "loss input is not finite");
  if (y < 0 || y >= c) fail(ErrorCode::Index, "label out of range");

  LossEval out;
  switch (spec.kind) {
    case LossKind::Muh: {
      out.grad = -onehot_star(y, c);
      out.value = z.mean() - z[y];
      break;
    }
    case LossKind::SoftmaxCe: {
      out.value = log_sum_exp(z) - z[y];
      out.grad = softmax(z);
      out.grad[y] -= 1.0;
      break;
    }
    case LossKind::Mae: {
      // 2 (1 - p_y); d/dz = -2 p_y (e_y - p)
      const Vector p = softmax(z);
      out.value = 2.0 * (1.0 - p[y]);
      out.grad = 2.0 * p[y] * p;
      out.grad[y] -= 2.0 * p[y];
      break;
    }
    case LossKind::Gce: {
      // (1 - p_y^q) / q; d/dz = -p_y^q (e_y - p)
      const Vector p = softmax(z);
      const double pq = std::pow(p[y], spec.q);
      out.value = (1.0 - pq) / spec.q;
      out.grad = pq * p;
      out.grad[y] -= pq;
      break;
    }
    case LossKind::Sce: {
      // -log p_y + lambda (1 - p_y); d/dz = (1 + lambda p_y)(p - e_y)
      const Vector p = softmax(z);
      out.value = log_sum_exp(z) - z[y] + spec.lambda_sce * (1.0 - p[y]);
      out.grad = p;
      out.grad[y] -= 1.0;
      out.grad *= 1.0 + spec.lambda_sce * p[y];
      break;
    }
    case LossKind::SquareStar: {
      const Vector r = z - onehot_star(y, c);
      out.value = r.squaredNorm();
      out.grad = 2.0 * r;
      break;
    }
    case LossKind::Linearized: {
      out.grad = spec.linear_rows.row(y).transpose();
      out.value = out.grad.dot(z);
      break;
    }
  }
  return out;
}

double loss_value(const LossSpec& spec, const Eigen::Ref<const Vector>& z, int y) { return loss_eval(spec, z, y).value; }

double symmetry_sum(const LossSpec& spec, const Eigen::Ref<const Vector>& z) {
  double s = 0.0;
  for (int y = 0; y < spec.num_classes; ++y) s += loss_value(spec, z, y);
  return s;
}

SymmetryCheck is_symmetric(const LossSpec& spec, int trials, double tol, std::uint64_t seed) {
  if (trials < 2) fail(ErrorCode::Config, "symmetry check needs at least 2 trials");
  Rng rng(seed);
  auto draw = [&] {
    Vector z(spec.num_classes);
    for (auto& v : z) v = 3.0 * rng.normal();
    return z;
  };
  const double ref = symmetry_sum(spec, draw());
  SymmetryCheck out;
  for (int t = 1; t < trials; ++t) out.max_deviation = std::max(out.max_deviation, std::abs(symmetry_sum(spec, draw()) - ref));
  out.symmetric = out.max_deviation <= tol;
  return out;
}

LossSpec linearize(const LossSpec& spec) {
  spec.validate();
  if (spec.kind == LossKind::Linearized) return spec;
  const int c = spec.num_classes;
  Matrix rows(c, c);
  const Vector zero = Vector::Zero(c);
  for (int y = 0; y < c; ++y) rows.row(y) = loss_eval(spec, zero, y).grad.transpose();
  return LossSpec::linearized(std::move(rows));
}

double muh_square_decomposition_residual(const Eigen::Ref<const Vector>& z, int y, int num_classes) {
  return loss_value(LossSpec::square_star(num_classes), z, y) - 2.0 * loss_value(LossSpec::muh(num_classes), z, y) -
         z.squaredNorm();
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

double parse_param(std::string_view token, std::string_view key) {
  const auto eq = token.find('=');
  if (eq == std::string_view::npos || token.substr(0, eq) != key) {
    fail(ErrorCode::Parse, "expected '" + std::string(key) + "=<value>', got '" + std::string(token) + "'");
  }
  const auto val = token.substr(eq + 1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
  if (val.empty() || ec != std::errc{} || ptr != val.data() + val.size()) {
    fail(ErrorCode::Parse, "bad number in '" + std::string(token) + "'");
  }
  return v;
}

}  // namespace

LossSpec parse_loss(std::string_view text, int num_classes) {
  if (lower(text.substr(0, 4)) == "lin:") return linearize(parse_loss(text.substr(4), num_classes));
  const std::string s = lower(text);
  const auto colon = s.find(':');
  const std::string name = s.substr(0, colon);
  const std::string_view param = colon == std::string::npos ? std::string_view{} : std::string_view(s).substr(colon + 1);
  auto no_param = [&] {
    if (colon != std::string::npos) fail(ErrorCode::Parse, "loss '" + name + "' takes no parameters, got '" + std::string(param) + "'");
  };
  LossSpec spec;
  if (name == "muh") {
    no_param();
    spec = LossSpec::muh(num_classes);
  } else if (name == "mae") {
    no_param();
    spec = LossSpec::mae(num_classes);
  } else if (name == "softmax_ce") {
    no_param();
    spec = LossSpec::softmax_ce(num_classes);
  } else if (name == "square_star") {
    no_param();
    spec = LossSpec::square_star(num_classes);
  } else if (name == "gce") {
    spec = LossSpec::gce(num_classes, colon == std::string::npos ? 0.7 : parse_param(param, "q"));
  } else if (name == "sce") {
    spec = LossSpec::sce(num_classes, colon == std::string::npos ? 1.0 : parse_param(param, "lambda"));
  } else {
    fail(ErrorCode::Parse, "unknown loss '" + std::string(text) + "'");
  }
  spec.validate();
  return spec;
}

std::string to_string(const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::Muh: return "muh";
    case LossKind::Mae: return "mae";
    case LossKind::Gce: return "gce:q=" + format_double(spec.q);
    case LossKind::Sce: return "sce:lambda=" + format_double(spec.lambda_sce);
    case LossKind::SoftmaxCe: return "softmax_ce";
    case LossKind::SquareStar: return "square_star";
    case LossKind::Linearized: return "lin:matrix";
  }
  return "unknown";
}

}  // namespace rll
