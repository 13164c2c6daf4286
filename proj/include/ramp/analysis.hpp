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

// Certificates evaluated on a recorded trajectory. Each check reports the
// smallest margin found; a negative margin is a violation.

#include <string>

#include "ramp/ctm.hpp"
#include "ramp/log.hpp"

namespace ramp::analysis {

// Constants of the input-to-state bound for linear stage and terminal costs
// over horizon T:
//   a1 = min l, a2 = (T + 1) max(max l, max b), a3 = max d, rho = 1 - a1 / a2.
struct IssConstants {
  double a1 = 0, a2 = 0, a3 = 0, rho = 0;

  double state_gain() const { return a2 / a1; }
  double input_gain() const { return (a3 + (1 - rho) * a2) / (a1 * (1 - rho)); }
};

IssConstants iss_constants(const VectorXd& stage_weight, const VectorXd& terminal_weight,
                           const VectorXd& demand_gain, int horizon);

struct CheckReport {
  bool ok = true;
  double min_margin = std::numeric_limits<double>::infinity();
  int worst_step = -1;
  int checked = 0;
  std::string detail;
};

// |x(t)|_1 <= state_gain rho^(t - t0) |x_upper(t0)|_1 + input_gain sup|lambda|_1
// for every step from the first non-warmup step t0.
CheckReport verify_iss_bound(const TrajectoryLog& log, const IssConstants& k);

// Over consecutive feasible MPC steps,
//   V(t+1) - V(t) + l'x_upper(t) - d'lambda(t) <= gap(t) + gap(t+1) + tol,
// where the d term is dropped when demand_gain is empty (indicator cost).
CheckReport lyapunov_decrease_check(const TrajectoryLog& log, const VectorXd& stage_weight,
                                    const VectorXd& demand_gain, double tol = 1e-6);

// a1 |x_upper|_1 <= V <= a2 (|x_upper|_1 + |lambda|_1) at every solved step;
// the margin is the smaller slack of the two sides.
CheckReport value_function_bounds_check(const TrajectoryLog& log, const IssConstants& k, double tol = 1e-6);

// Truth inside the state, demand and parameter boxes, and parameter boxes
// nested in time.
CheckReport containment_check(const TrajectoryLog& log, const ctm::FreewayParams<double>& truth,
                              double tol = 1e-9);

// First step whose upper estimate lies in the terminal box, -1 if none.
int time_to_terminal(const TrajectoryLog& log, const VectorXd& terminal_upper, double tol = 1e-9);

}  // namespace ramp::analysis
