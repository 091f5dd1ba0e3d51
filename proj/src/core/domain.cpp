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

#include "domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "errors.hpp"
#include "rng.hpp"

namespace rll {

namespace {

void check_label(int y, int num_classes) {
  if (y < 0 || y >= num_classes) {
    fail(ErrorCode::Index, "label " + std::to_string(y) + " out of range for C=" + std::to_string(num_classes));
  }
}

}  // namespace

void Dataset::validate() const {
  if (num_classes < 2) fail(ErrorCode::Config, "dataset needs at least 2 classes");
  if (features.rows() < 1) fail(ErrorCode::Shape, "dataset is empty");
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    fail(ErrorCode::Shape, "label count does not match feature rows");
  }
  for (int y : labels) check_label(y, num_classes);
  if (!features.allFinite()) fail(ErrorCode::Domain, "non-finite feature value");
}

Vector onehot(int y, int num_classes) {
  check_label(y, num_classes);
  Vector e = Vector::Zero(num_classes);
  e[y] = 1.0;
  return e;
}

Vector onehot_star(int y, int num_classes) {
  check_label(y, num_classes);
  Vector h = Vector::Constant(num_classes, -1.0 / num_classes);
  h[y] = 1.0 - 1.0 / num_classes;
  return h;
}

double log_sum_exp(const Eigen::Ref<const Vector>& z) {
  if (!z.allFinite()) fail(ErrorCode::Domain, "log_sum_exp: non-finite input");
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

Vector softmax(const Eigen::Ref<const Vector>& z) {
  if (!z.allFinite()) fail(ErrorCode::Domain, "softmax: non-finite input");
  Vector e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

NoiseSpec noise_constants(double rho, int num_classes) {
  if (num_classes < 2) fail(ErrorCode::Config, "noise model needs C >= 2");
  if (!(rho >= 0.0)) fail(ErrorCode::InvalidNoise, "noise level must be non-negative");
  const double limit = static_cast<double>(num_classes - 1) / num_classes;
  if (rho >= limit) {
    fail(ErrorCode::InvalidNoise, "noise level " + format_double(rho) + " must be below (C-1)/C = " + format_double(limit));
  }
  NoiseSpec s;
  s.rho = rho;
  s.num_classes = num_classes;
  s.a = 1.0 - rho * num_classes / (num_classes - 1);
  s.lambda_equiv = 1.0 / s.a;
  return s;
}

Vector flip_distribution(int y, const NoiseSpec& spec) {
  check_label(y, spec.num_classes);
  Vector p = Vector::Constant(spec.num_classes, spec.rho / (spec.num_classes - 1));
  p[y] = 1.0 - spec.rho;
  return p;
}

std::vector<int> inject_noise(std::span<const int> labels, const NoiseSpec& spec, std::uint64_t seed) {
  for (int y : labels) check_label(y, spec.num_classes);
  std::vector<int> out(labels.begin(), labels.end());
  if (spec.rho == 0.0) return out;
  Rng rng(seed);
  const auto others = static_cast<std::uint64_t>(spec.num_classes - 1);
  for (int& y : out) {
    if (rng.uniform() < spec.rho) {
      // Uniform over the C-1 other classes.
      int k = static_cast<int>(rng.below(others));
      y = k >= y ? k + 1 : k;
    }
  }
  return out;
}

Matrix default_centers(int num_classes, int dim, double scale) {
  if (dim < num_classes) fail(ErrorCode::Config, "default blob centers need dim >= C");
  Matrix c = Matrix::Zero(num_classes, dim);
  for (int k = 0; k < num_classes; ++k) c(k, k) = scale;
  return c;
}

Dataset make_blobs(const SyntheticSpec& spec) {
  if (spec.num_classes < 2) fail(ErrorCode::Config, "blobs need C >= 2");
  if (spec.n_per_class < 1 || spec.dim < 1) fail(ErrorCode::Config, "blobs need n_per_class >= 1 and dim >= 1");
  if (!(spec.sigma > 0.0)) fail(ErrorCode::Config, "blob sigma must be positive");
  if (spec.centers.rows() != spec.num_classes || spec.centers.cols() != spec.dim) {
    fail(ErrorCode::Shape, "blob centers must be C x d");
  }
  for (int i = 0; i < spec.num_classes; ++i) {
    for (int j = i + 1; j < spec.num_classes; ++j) {
      if (spec.centers.row(i) == spec.centers.row(j)) fail(ErrorCode::Config, "blob centers must be pairwise distinct");
    }
  }
  Rng rng(spec.seed);
  Dataset d;
  d.num_classes = spec.num_classes;
  const Eigen::Index n = static_cast<Eigen::Index>(spec.num_classes) * spec.n_per_class;
  d.features.resize(n, spec.dim);
  d.labels.resize(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (int k = 0; k < spec.num_classes; ++k) {
    for (int i = 0; i < spec.n_per_class; ++i, ++row) {
      for (int j = 0; j < spec.dim; ++j) d.features(row, j) = spec.centers(k, j) + spec.sigma * rng.normal();
      d.labels[static_cast<std::size_t>(row)] = k;
    }
  }
  return d;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) fail(ErrorCode::Io, "cannot format double");
  return std::string(buf, end);
}

std::string format_csv(const Dataset& data) {
  data.validate();
  std::string out;
  for (Eigen::Index j = 0; j < data.dim(); ++j) out += "f" + std::to_string(j) + ",";
  out += "label\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      out += format_double(data.features(i, j));
      out += ',';
    }
    out += std::to_string(data.labels[static_cast<std::size_t>(i)]);
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

[[noreturn]] void parse_error(std::string_view source, std::size_t line, const std::string& msg) {
  fail(ErrorCode::Parse, std::string(source) + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

Dataset parse_csv(std::string_view text, std::optional<int> num_classes, std::string_view source) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = pos + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) parse_error(source, 1, "missing header");

  const auto header = split_commas(lines[0]);
  if (header.size() < 2 || header.back() != "label") parse_error(source, 1, "header must be f0,...,f{d-1},label");
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "f" + std::to_string(j)) parse_error(source, 1, "unexpected header column '" + std::string(header[j]) + "'");
  }
  if (lines.size() < 2) parse_error(source, 2, "no data rows");

  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(d));
  data.labels.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto cells = split_commas(lines[li]);
    if (cells.size() != d + 1) {
      parse_error(source, li + 1, "expected " + std::to_string(d + 1) + " fields, got " + std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      const auto cell = cells[j];
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        parse_error(source, li + 1, "non-numeric feature '" + std::string(cell) + "' in column f" + std::to_string(j));
      }
      data.features(static_cast<Eigen::Index>(li - 1), static_cast<Eigen::Index>(j)) = v;
    }
    int y = -1;
    const auto cell = cells[d];
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), y);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || y < 0) {
      parse_error(source, li + 1, "invalid label '" + std::string(cell) + "'");
    }
    if (num_classes && y >= *num_classes) {
      parse_error(source, li + 1, "label " + std::to_string(y) + " >= C=" + std::to_string(*num_classes));
    }
    data.labels.push_back(y);
  }
  if (num_classes) {
    data.num_classes = *num_classes;
  } else {
    data.num_classes = std::max(2, *std::max_element(data.labels.begin(), data.labels.end()) + 1);
  }
  data.validate();
  return data;
}

Dataset load_csv(const std::filesystem::path& path, std::optional<int> num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), num_classes, path.string());
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  const std::string text = format_csv(data);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace rll
