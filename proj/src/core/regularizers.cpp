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

#include "regularizers.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "domain.hpp"
#include "errors.hpp"

namespace rll {

RegularizerSpec RegularizerSpec::quadratic(Matrix a, int num_classes, bool reduced) {
  RegularizerSpec s;
  s.kind = RegKind::Quadratic;
  s.num_classes = num_classes;
  s.reduced = reduced;
  if (num_classes < 2) fail(ErrorCode::Config, "regularizer needs C >= 2");
  if (a.rows() != s.dim() || a.cols() != s.dim()) {
    fail(ErrorCode::Shape, "quadratic regularizer matrix must be " + std::to_string(s.dim()) + " x " + std::to_string(s.dim()));
  }
  if (!a.allFinite() || !is_symmetric(a, 1e-12)) fail(ErrorCode::Config, "quadratic regularizer matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(es.eigenvalues().minCoeff() > 1e-10 * scale)) {
    fail(ErrorCode::Degeneracy, "quadratic regularizer matrix must be positive definite");
  }
  s.a = std::move(a);
  return s;
}

RegularizerSpec RegularizerSpec::entropy(int num_classes) {
  if (num_classes < 2) fail(ErrorCode::Config, "regularizer needs C >= 2");
  RegularizerSpec s;
  s.kind = RegKind::Entropy;
  s.num_classes = num_classes;
  s.reduced = true;
  return s;
}

RegularizerSpec RegularizerSpec::label_smoothing(int num_classes) {
  RegularizerSpec s = entropy(num_classes);
  s.kind = RegKind::LabelSmoothing;
  return s;
}

Vector reduce_outputs(const Eigen::Ref<const Vector>& z) {
  if (z.size() < 2) fail(ErrorCode::Shape, "reduce_outputs needs at least 2 entries");
  if (!z.allFinite()) fail(ErrorCode::Domain, "reduce_outputs: non-finite input");
  const Eigen::Index k = z.size() - 1;
  return z.head(k).array() - z[k];
}

Vector embed(const Eigen::Ref<const Vector>& reduced) {
  if (!reduced.allFinite()) fail(ErrorCode::Domain, "embed: non-finite input");
  Vector z(reduced.size() + 1);
  z.head(reduced.size()) = reduced;
  z[reduced.size()] = 0.0;
  return z;
}

RegEval reg_eval(const RegularizerSpec& spec, const Eigen::Ref<const Vector>& z) {
  if (z.size() != spec.dim()) fail(ErrorCode::Shape, "regularizer input has wrong length");
  if (!z.allFinite()) fail(ErrorCode::Domain, "regularizer input is not finite");
  RegEval out;
  switch (spec.kind) {
    case RegKind::Quadratic: {
      const Vector az = spec.a * z;
      out.value = z.dot(az);
      out.grad = 2.0 * az;
      return out;
    }
    case RegKind::Entropy: {
      const Vector full = embed(z);
      const Vector p = softmax(full);
      const Vector logp = full.array() - log_sum_exp(full);
      out.value = p.dot(logp);
      // d/dz sum p log p = p o (log p - sum p log p)
      const Vector g = p.array() * (logp.array() - out.value);
      out.grad = g.head(spec.dim());
      return out;
    }
    case RegKind::LabelSmoothing: {
      const Vector full = embed(z);
      const int c = spec.num_classes;
      out.value = log_sum_exp(full) - full.mean();
      const Vector g = softmax(full).array() - 1.0 / c;
      out.grad = g.head(spec.dim());
      return out;
    }
  }
  return out;
}

Matrix reg_hessian_at_min(const RegularizerSpec& spec) {
  switch (spec.kind) {
    case RegKind::Quadratic:
      return 2.0 * spec.a;
    case RegKind::Entropy:
    case RegKind::LabelSmoothing: {
      // diag(u) - u u^T at u = 1/C, first C-1 coordinates.
      const int c = spec.num_classes;
      const int k = spec.dim();
      return Matrix::Identity(k, k) / c - Matrix::Constant(k, k, 1.0 / (static_cast<double>(c) * c));
    }
  }
  return {};
}

RegularizerSpec quadratize(const RegularizerSpec& spec) {
  Matrix h = reg_hessian_at_min(spec);
  h = 0.5 * (h + h.transpose()).eval();
  try {
    return RegularizerSpec::quadratic(std::move(h), spec.num_classes, spec.reduced);
  } catch (const Error& e) {
    fail(ErrorCode::Degeneracy, std::string("quadratize: Hessian at 0 is not positive definite: ") + e.what());
  }
}

namespace {

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open matrix file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        fail(ErrorCode::Parse, path + ":" + std::to_string(lineno) + ": non-numeric entry '" + cell + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::Parse, path + ": empty matrix file");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) fail(ErrorCode::Parse, path + ": ragged matrix rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

}  // namespace

RegularizerSpec parse_regularizer(std::string_view text, int num_classes) {
  const auto colon = text.find(':');
  const std::string name = lower(text.substr(0, colon));
  const std::string_view param = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (name == "entropy" || name == "label_smoothing") {
    if (colon != std::string_view::npos) fail(ErrorCode::Parse, "'" + name + "' takes no parameters, got '" + std::string(param) + "'");
    return name == "entropy" ? RegularizerSpec::entropy(num_classes) : RegularizerSpec::label_smoothing(num_classes);
  }
  if (name != "quad") fail(ErrorCode::Parse, "unknown regularizer '" + std::string(text) + "'");
  if (colon == std::string_view::npos) fail(ErrorCode::Parse, "quad needs 'identity', 'scale=<s>' or 'file=<path>'");
  const auto eq = param.find('=');
  const std::string key = lower(param.substr(0, eq));
  if (key == "identity" && eq == std::string_view::npos) {
    return RegularizerSpec::quadratic(Matrix::Identity(num_classes, num_classes), num_classes);
  }
  if (eq == std::string_view::npos) fail(ErrorCode::Parse, "unknown quad option '" + std::string(param) + "'");
  const std::string_view value = param.substr(eq + 1);
  if (key == "scale") {
    double s = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
    if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
      fail(ErrorCode::Parse, "bad number in '" + std::string(param) + "'");
    }
    return RegularizerSpec::quadratic(s * Matrix::Identity(num_classes, num_classes), num_classes);
  }
  if (key == "file") return RegularizerSpec::quadratic(read_matrix_csv(std::string(value)), num_classes);
  fail(ErrorCode::Parse, "unknown quad option '" + std::string(param) + "'");
}

std::string to_string(const RegularizerSpec& spec) {
  switch (spec.kind) {
    case RegKind::Entropy: return "entropy";
    case RegKind::LabelSmoothing: return "label_smoothing";
    case RegKind::Quadratic: {
      const Eigen::Index k = spec.a.rows();
      const double s = spec.a(0, 0);
      if (spec.a.isApprox(s * Matrix::Identity(k, k), 0.0)) {
        return (spec.reduced ? "quad_reduced:scale=" : "quad:scale=") + format_double(s);
      }
      return spec.reduced ? "quad_reduced:matrix" : "quad:matrix";
    }
  }
  return "unknown";
}

}  // namespace rll
