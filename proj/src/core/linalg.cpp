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

#include "linalg.hpp"

#include <string>

#include "errors.hpp"

namespace rll {

Matrix solve_dense(const Matrix& m, const Matrix& rhs, const char* what) {
  if (m.rows() != m.cols() || m.rows() != rhs.rows()) {
    fail(ErrorCode::Shape, std::string("solve: incompatible shapes for ") + what);
  }
  Eigen::PartialPivLU<Matrix> lu(m);
  const auto diag = lu.matrixLU().diagonal().cwiseAbs();
  const double largest = diag.maxCoeff();
  if (!(largest > 0.0) || diag.minCoeff() < kSingularPivotTol * largest) {
    fail(ErrorCode::Rank, std::string(what) + " is singular to working precision");
  }
  return lu.solve(rhs);
}

double min_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_symmetric(const Matrix& m, double tol) {
  return m.rows() == m.cols() && (m - m.transpose()).norm() <= tol;
}

}  // namespace rll
