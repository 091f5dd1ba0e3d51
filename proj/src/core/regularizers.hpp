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

#include <string>
#include <string_view>

#include "linalg.hpp"

namespace rll {

enum class RegKind { Quadratic, Entropy, LabelSmoothing };

/// Output regulariser g(z). The coefficient in front of g lives in the
/// objective, not here.
///
/// Confidence penalties (entropy, label smoothing) are minimised on the whole
/// line z_1 = ... = z_C, so they are always evaluated in the reduced space
/// z' = (z_1 - z_C, ..., z_{C-1} - z_C) where their minimum at 0 is unique.
struct RegularizerSpec {
  RegKind kind = RegKind::Quadratic;
  int num_classes = 2;
  Matrix a;  // Quadratic only: symmetric positive definite, dim() x dim()
  bool reduced = false;

  /// Checks symmetry (|A - A^T| <= 1e-12) and positive definiteness
  /// (min eigenvalue > 1e-10 |A|). `reduced` selects a (C-1)-dim A.
  static RegularizerSpec quadratic(Matrix a, int num_classes, bool reduced = false);
  static RegularizerSpec entropy(int num_classes);
  static RegularizerSpec label_smoothing(int num_classes);

  /// Length of the output vector g acts on: C, or C-1 when reduced.
  int dim() const { return reduced ? num_classes - 1 : num_classes; }
};

struct RegEval {
  double value = 0.0;
  Vector grad;
};

/// Quadratic: z^T A z. Entropy: sum p log p. Label smoothing: -(1/C) sum log p.
/// For the penalties p = softmax(embed(z)).
RegEval reg_eval(const RegularizerSpec& spec, const Eigen::Ref<const Vector>& z);

/// Hessian at the minimum z = 0, dim() x dim().
Matrix reg_hessian_at_min(const RegularizerSpec& spec);

/// Quadratic with A = Hessian at 0, i.e. g_sq(z) = z^T [Hess g(0)] z. This is
/// twice the second-order Taylor term.
RegularizerSpec quadratize(const RegularizerSpec& spec);

/// z'_i = z_i - z_C, i < C.
Vector reduce_outputs(const Eigen::Ref<const Vector>& z);
/// (z'_1, ..., z'_{C-1}, 0).
Vector embed(const Eigen::Ref<const Vector>& reduced);

/// `quad:identity`, `quad:scale=<s>` (A = s I), `quad:file=<path>` (CSV
/// matrix), `entropy`, `label_smoothing`. Keywords are case-insensitive.
RegularizerSpec parse_regularizer(std::string_view text, int num_classes);
std::string to_string(const RegularizerSpec& spec);

}  // namespace rll
