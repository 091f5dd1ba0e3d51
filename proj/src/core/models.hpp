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
#include <optional>
#include <string>
#include <vector>

#include "domain.hpp"
#include "linalg.hpp"
#include "losses.hpp"
#include "regularizers.hpp"

namespace rll {

enum class FeatureKind { Identity, AppendConstant, RandomFourier };

/// Deterministic feature map phi: R^d -> R^p.
struct FeatureMap {
  FeatureKind kind = FeatureKind::Identity;
  int input_dim = 0;
  int rff_dim = 0;
  double bandwidth = 1.0;
  std::uint64_t seed = 0;
  Matrix rff_weights;  // rff_dim x input_dim, N(0, 1/bandwidth^2)
  Vector rff_phase;    // U[0, 2 pi)

  static FeatureMap identity(int input_dim);
  /// phi(x) = (x, 1)
  static FeatureMap append_constant(int input_dim);
  /// phi(x) = sqrt(2/D) cos(W x + b)
  static FeatureMap random_fourier(int input_dim, int dim, double bandwidth, std::uint64_t seed);

  int output_dim() const;
  Matrix apply(const Matrix& x) const;
};

/// Output rows of a model, n x C (or n x (C-1) in reduced mode).
using ModelOutput = Matrix;

enum class ArchKind { Linear, Mlp2 };

/// Classifier family Z(theta) = f_theta(X).
///
/// Linear: Z = phi(X) Theta^T with Theta (k x p), theta = Theta row-major.
/// Mlp2: Z = tanh(X W1^T) W2^T, no biases, theta = (W1, W2) row-major, so
/// scaling W2 by t scales the outputs by t.
/// k is C, or C-1 when the model predicts reduced outputs.
class Model {
 public:
  static Model linear(FeatureMap phi, int num_classes, bool reduced = false);
  static Model mlp2(int input_dim, int hidden, int num_classes, bool reduced = false);

  ArchKind arch() const { return arch_; }
  int num_classes() const { return num_classes_; }
  bool reduced() const { return reduced_; }
  int output_dim() const { return reduced_ ? num_classes_ - 1 : num_classes_; }
  int input_dim() const { return input_dim_; }
  int hidden() const { return hidden_; }
  const FeatureMap& feature_map() const { return phi_; }
  Eigen::Index num_params() const;

  const Vector& theta() const { return theta_; }
  void set_theta(Vector theta);

  ModelOutput forward(const Matrix& x) const { return forward(x, theta_); }
  ModelOutput forward(const Matrix& x, const Vector& theta) const;
  /// Gradient of sum_ij dz(i,j) Z(i,j) with respect to theta.
  Vector backward(const Matrix& x, const Vector& theta, const Matrix& dz) const;
  /// Directional derivative of the outputs, grad Z(theta) v.
  ModelOutput jvp(const Matrix& x, const Vector& theta, const Vector& v) const;

  /// Parameters whose outputs are t times the current ones.
  Vector output_scaled_theta(double t) const;

  /// For Mlp2: W1 from `seed` (N(0, scale^2/d)) and W2 = 0, so Z = 0.
  /// For Linear: the zero vector.
  Vector origin_theta(std::uint64_t seed, double scale = 1.0) const;

  std::string to_json() const;
  static Model from_json(const std::string& text);

 private:
  ArchKind arch_ = ArchKind::Linear;
  int num_classes_ = 2;
  bool reduced_ = false;
  int input_dim_ = 0;
  int hidden_ = 0;
  FeatureMap phi_;
  Vector theta_;

  void check_input(const Matrix& x, const Vector& theta) const;
};

/// Row-wise argmax; ties go to the smallest index.
std::vector<int> predict(const ModelOutput& z);
/// Class scores from model outputs: embeds reduced rows by appending a 0.
ModelOutput class_scores(const ModelOutput& z, bool reduced);
/// Fraction of positions where the two label vectors agree.
double agreement(const std::vector<int>& a, const std::vector<int>& b);

/// sqrt(mean over rows of |z_i|^2)
double norm_l2(const ModelOutput& z);

/// loss_weight * L(theta) + reg_weight * G(theta) over the empirical
/// distribution. With `noise` set, L is the exact expectation over label
/// flips.
struct ObjectiveTerms {
  LossSpec loss;
  RegularizerSpec reg;
  double loss_weight = 1.0;
  double reg_weight = 1.0;
  std::optional<NoiseSpec> noise;
};

struct ValueGrad {
  double value = 0.0;
  Vector grad;
};

ValueGrad objective_grad(const Model& model, const Vector& theta, const Dataset& data, const ObjectiveTerms& terms);
inline ValueGrad objective_grad(const Model& model, const Dataset& data, const ObjectiveTerms& terms) {
  return objective_grad(model, model.theta(), data, terms);
}

/// Loss of one output row against label y; reduced rows are embedded first.
/// Gradient is with respect to the row as given.
LossEval row_loss(const LossSpec& loss, const Eigen::Ref<const Vector>& row, int y, bool reduced);

}  // namespace rll
