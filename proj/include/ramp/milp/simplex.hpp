/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Revised primal simplex for bounded variables:
//
//   minimize c'x  subject to  row_lo <= A x <= row_hi,  col_lo <= x <= col_hi.
//
// One logical variable per row carries the row bounds, so the working system
// is [A  -I] (x, s) = 0 with every variable boxed. The basis is kept as a
// sparse LU factorization plus product-form updates between refactorizations.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ramp::milp {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper, Free };

// Status of structural variables followed by logicals. Exactly one variable
// per row is Basic.
struct Basis {
  std::vector<VarStatus> status;
  bool empty() const { return status.empty(); }
};

struct LpOptions {
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_interval = 50;
  int degenerate_switch = 50;  // degenerate pivots in a row before Bland's rule
  long max_iterations = -1;    // default scales with problem size
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0;
  Eigen::VectorXd x;         // structural values
  Eigen::VectorXd row_activity;
  Basis basis;
  long iterations = 0;
};

// Raised when the basis cannot be factorized or pivots become unreliable.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SimplexSolver {
 public:
  SimplexSolver(Eigen::SparseMatrix<double> a, Eigen::VectorXd c, Eigen::VectorXd row_lo, Eigen::VectorXd row_hi,
                LpOptions opts = {});

  // Column bounds are passed per call so branch-and-bound can reuse the
  // matrix. A basis from an earlier call seeds the search when given.
  LpResult solve(const Eigen::VectorXd& col_lo, const Eigen::VectorXd& col_hi, const Basis* warm = nullptr) const;

  int rows() const { return static_cast<int>(a_.rows()); }
  int cols() const { return static_cast<int>(a_.cols()); }

 private:
  Eigen::SparseMatrix<double> a_;
  Eigen::VectorXd c_, row_lo_, row_hi_;
  LpOptions opts_;
};

}  // namespace ramp::milp
