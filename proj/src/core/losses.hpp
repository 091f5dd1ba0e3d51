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
#include <string>
#include <string_view>

#include "linalg.hpp"

namespace rll {

enum class LossKind { Muh, Mae, Gce, Sce, SoftmaxCe, SquareStar, Linearized };

/// Tagged loss l(z, y) over logits z in R^C.
///
/// Simplex losses (MAE, GCE, SCE) are composed with softmax so that every kind
/// is a function of logits.
struct LossSpec {
  LossKind kind = LossKind::Muh;
  int num_classes = 2;
  double q = 1.0;           // GCE exponent, in (0, 1]
  double lambda_sce = 0.0;  // SCE weight of the reverse term, >= 0
  Matrix linear_rows;       // Linearized: row y is grad_z l(0, y)

  static LossSpec muh(int num_classes);
  static LossSpec mae(int num_classes);
  static LossSpec gce(int num_classes, double q);
  static LossSpec sce(int num_classes, double lambda_sce);
  static LossSpec softmax_ce(int num_classes);
  static LossSpec square_star(int num_classes);
  static LossSpec linearized(Matrix rows);

  void validate() const;
};

struct LossEval {
  double value = 0.0;
  Vector grad;
};

LossEval loss_eval(const LossSpec& spec, const Eigen::Ref<const Vector>& z, int y);
double loss_value(const LossSpec& spec, const Eigen::Ref<const Vector>& z, int y);

/// Sum of l(z, y) over all C labels.
double symmetry_sum(const LossSpec& spec, const Eigen::Ref<const Vector>& z);

struct SymmetryCheck {
  bool symmetric = false;
  double max_deviation = 0.0;
};

/// Samples `trials` logit vectors (N(0, 3^2) entries) and compares every
/// symmetry_sum against the first one.
SymmetryCheck is_symmetric(const LossSpec& spec, int trials, double tol, std::uint64_t seed);

/// First-order expansion at z = 0: l_lin(z, y) = grad_z l(0, y) . z
LossSpec linearize(const LossSpec& spec);

/// |z - onehot*(y)|^2 - 2 MUH(z, y) - |z|^2; constant (C-1)/C.
double muh_square_decomposition_residual(const Eigen::Ref<const Vector>& z, int y, int num_classes);

/// Parses `muh`, `mae`, `gce:q=0.7`, `sce:lambda=1.0`, `softmax_ce`,
/// `square_star` (case-insensitive); `lin:<loss>` yields linearize(<loss>).
/// Throws Parse naming the bad token.
LossSpec parse_loss(std::string_view text, int num_classes);
std::string to_string(const LossSpec& spec);

}  // namespace rll
