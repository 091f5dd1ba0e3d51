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

#include <Eigen/Dense>

namespace rll {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative pivot threshold below which a dense solve is declared singular.
inline constexpr double kSingularPivotTol = 1e-12;

/// Solves M X = R by partial-pivot LU. Throws Rank when the smallest pivot is
/// below kSingularPivotTol times the largest.
Matrix solve_dense(const Matrix& m, const Matrix& rhs, const char* what = "matrix");

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& sym);

bool is_symmetric(const Matrix& m, double tol);

}  // namespace rll
