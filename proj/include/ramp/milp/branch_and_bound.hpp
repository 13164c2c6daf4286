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

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <vector>

#include "ramp/milp/model.hpp"
#include "ramp/milp/simplex.hpp"

namespace ramp::milp {

enum class MilpStatus {
  Optimal,          // incumbent within the requested gap of the best bound
  Infeasible,       // proven
  Unbounded,        // LP relaxation unbounded at the root
  BudgetExhausted,  // node or time budget hit; an incumbent may exist
};

const char* to_string(MilpStatus s);

struct MilpOptions {
  double abs_gap = 1e-6;
  double rel_gap = 0;  // 0 disables the relative criterion
  long node_limit = 500000;
  double time_limit_s = -1;  // negative: no time limit
  double int_tol = 1e-6;
  double feas_tol = 1e-6;
  // Maps a node LP solution to a candidate full solution; candidates are
  // checked against the model before use.
  std::function<std::optional<Eigen::VectorXd>(const Eigen::VectorXd&)> heuristic;
  std::vector<Eigen::VectorXd> starts;
  // Optional branching classes per variable: among fractional binaries the
  // smallest class is branched first, then the most fractional, then the
  // lowest index. Empty means a single class.
  std::vector<int> priority;
  LpOptions lp;
};

struct MilpResult {
  MilpStatus status = MilpStatus::Infeasible;
  bool has_solution = false;
  Eigen::VectorXd x;
  double objective = kInf;
  double best_bound = -kInf;
  long nodes = 0;
  long lp_iterations = 0;
  double seconds = 0;

  double gap() const { return has_solution ? objective - best_bound : kInf; }
};

// Depth-first plunging from the best-bound node, branching on the most
// fractional binary (lowest index on ties). Deterministic unless a time limit
// is set.
MilpResult solve_milp(const Model& model, const MilpOptions& opts = {});

// LP relaxation of the model (binaries relaxed to [0, 1]).
LpResult solve_relaxation(const Model& model, const LpOptions& opts = {});

}  // namespace ramp::milp
