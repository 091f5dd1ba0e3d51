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
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "linalg.hpp"

namespace rll {

/// Labelled sample: n x d features and 0-based labels in [0, C).
///
/// External labels are 0-based; class k here is class k+1 in 1-based notation.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  /// Throws on label out of range, empty data, non-finite features or shape mismatch.
  void validate() const;
};

/// Uniform label-noise level together with its derived constants.
struct NoiseSpec {
  double rho = 0.0;
  int num_classes = 2;
  /// 1 - rho C / (C - 1); scales the clean risk inside the noisy risk.
  double a = 1.0;
  /// 1 / a; the regularisation coefficient induced by the noise.
  double lambda_equiv = 1.0;
};

struct SyntheticSpec {
  int num_classes = 3;
  int dim = 3;
  int n_per_class = 100;
  Matrix centers;  // C x d
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

Vector onehot(int y, int num_classes);
/// onehot(y) - 1/C. Entries sum to zero.
Vector onehot_star(int y, int num_classes);

/// Numerically stable softmax (max subtraction). Throws Domain on non-finite input.
Vector softmax(const Eigen::Ref<const Vector>& z);
/// log(sum(exp(z))) with max subtraction.
double log_sum_exp(const Eigen::Ref<const Vector>& z);

NoiseSpec noise_constants(double rho, int num_classes);

/// P(noisy label = i | clean label = y).
Vector flip_distribution(int y, const NoiseSpec& spec);

/// Resamples each label independently from flip_distribution.
std::vector<int> inject_noise(std::span<const int> labels, const NoiseSpec& spec, std::uint64_t seed);

/// Centers scale * e_k in the first C coordinates; requires dim >= C.
Matrix default_centers(int num_classes, int dim, double scale);

/// Isotropic Gaussian blobs, n_per_class samples per class, grouped by class.
Dataset make_blobs(const SyntheticSpec& spec);

/// Reads a `f0,...,f{d-1},label` CSV. When num_classes is unset it is
/// inferred as max(label) + 1 (at least 2).
Dataset load_csv(const std::filesystem::path& path, std::optional<int> num_classes = std::nullopt);
void save_csv(const Dataset& data, const std::filesystem::path& path);
/// Parses CSV text; `source` names the origin in error messages.
Dataset parse_csv(std::string_view text, std::optional<int> num_classes, std::string_view source = "<memory>");
std::string format_csv(const Dataset& data);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

}  // namespace rll
