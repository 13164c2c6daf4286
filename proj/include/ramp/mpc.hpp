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

// Finite-horizon predictive control over the lifted system. The upper state
// trajectory is penalized, both components obey the lifted dynamics, and the
// upper state must end inside a terminal box.

#include <optional>
#include <string>
#include <vector>

#include "ramp/embedding.hpp"
#include "ramp/milp/branch_and_bound.hpp"
#include "ramp/milp/model.hpp"

namespace ramp::mpc {

using embedding::DemandBounds;
using embedding::LiftedState;
using embedding::ParamBounds;
using ctm::FreewayParams;

enum class CostMode {
  Linear,     // sum_k l'x(k) + b'x(T)
  Indicator,  // sum_k l'x(k) charged only while x(k) is outside the terminal box
};

struct MpcConfig {
  int horizon = 60;
  VectorXd stage_weight;     // l, size 2I
  VectorXd terminal_weight;  // b, size 2I, used in Linear mode
  CostMode mode = CostMode::Linear;
  VectorXd terminal_upper;   // upper corner of the terminal box, size 2I, may hold +inf
  VectorXd u_max;            // metering limit per ramp
  milp::MilpOptions solver;
  bool eliminate_redundant = true;  // use bounds to drop decided binaries
  bool alias_point_boxes = true;    // collapse the lower component when every box is a point
  bool stage_ordered_branching = true;  // branch on earlier stages first
  bool constructive_starts = true;      // offer hold-and-fill rollouts as starts
};

// Counts for a model built with eliminate_redundant = false. Capacity drops
// at the fixed initial state are always decided without a binary.
struct Census {
  long state_vars = 0;
  long control_vars = 0;
  long aux_continuous = 0;
  long binaries = 0;
  long total() const { return state_vars + control_vars + aux_continuous + binaries; }
};

Census census(Index cells, int horizon, CostMode mode, bool aliased, bool diag_upper, bool diag_lower);

struct MpcProblem {
  milp::Model model;
  int horizon = 0;
  Index cells = 0;
  bool aliased = false;
  bool trivially_infeasible = false;  // bound propagation already misses the terminal box
  std::vector<std::vector<milp::Var>> x_up, x_lo;  // [k][j], k = 0..T
  std::vector<std::vector<milp::Var>> u;           // [k][i], k = 0..T-1
  Census expected;
  std::vector<int> stage_of_var;  // prediction step that introduced each variable

  std::vector<VectorXd> controls(const VectorXd& sol) const;
  LiftedState<double> state(const VectorXd& sol, int k) const;

  // Completes a control sequence into a full assignment; empty if it breaks
  // a constraint.
  std::optional<VectorXd> complete(const std::vector<VectorXd>& controls, double tol = 1e-6) const;
};

MpcProblem build_problem(const LiftedState<double>& x0, const DemandBounds<double>& lambda,
                         const ParamBounds<double>& theta, const MpcConfig& cfg);

struct MpcResult {
  bool feasible = false;
  milp::MilpStatus status = milp::MilpStatus::Infeasible;
  VectorXd u0;
  std::vector<VectorXd> plan;
  std::vector<LiftedState<double>> predicted;
  double value = milp::kInf;
  double bound = -milp::kInf;
  long nodes = 0;
  double seconds = 0;
  long binaries = 0;
};

// `hints` are candidate control sequences (for example the previous plan
// shifted by one step) offered to the solver as starting incumbents.
MpcResult solve_mpc(const LiftedState<double>& x0, const DemandBounds<double>& lambda,
                    const ParamBounds<double>& theta, const MpcConfig& cfg,
                    const std::vector<std::vector<VectorXd>>& hints = {});

// Hold-and-fill policy rolled out on the lifted system. While some upper
// mainline density exceeds its smallest critical density, the ramps in
// `hold` release nothing; otherwise each ramp tops its cell up to `fill`
// times that critical density. Vehicles are only released when the lower
// ramp bound guarantees them.
struct Rollout {
  std::vector<VectorXd> controls;
  std::vector<bool> hold;
  double fill = 1;
  int entry = -1;     // first step with the upper state in the terminal box, -1 if never
  double cost = 0;    // sum of l'x_upper over the rollout
};

Rollout hold_fill_rollout(const LiftedState<double>& x0, const DemandBounds<double>& lambda,
                          const ParamBounds<double>& theta, const MpcConfig& cfg, const std::vector<bool>& hold,
                          double fill, int steps);

// Rollouts over hold masks (all 2^I masks for I <= 8, else none and all) and
// a few fill levels, best first: earliest entry, then lowest cost.
std::vector<Rollout> hold_fill_rollouts(const LiftedState<double>& x0, const DemandBounds<double>& lambda,
                                        const ParamBounds<double>& theta, const MpcConfig& cfg, int steps);

// Largest mainline state from which the free-flow equilibrium is recovered
// under u = lambda with known parameters.
VectorXd compute_xup(const FreewayParams<double>& p, const VectorXd& lambda);

// Mainline terminal weights b_j = l_j / v_j + beta_j b_{j+1}. These make
// b'x a Lyapunov function for the free-flow dynamics under u = lambda with
// gain d = b on the mainline. Ramp weights default to 1.
VectorXd choose_terminal_weights(const FreewayParams<double>& p, const VectorXd& stage_weight,
                                 const VectorXd& ramp_weight = {});

// Maximum of b'F(x, lambda) - b'x + l'x - d'lambda over sampled points of the
// terminal box (ramps at zero) and its vertices. Nonpositive means the
// terminal ingredients are valid.
double terminal_lyapunov_residual(const FreewayParams<double>& p, const VectorXd& lambda, const VectorXd& l,
                                  const VectorXd& b, const VectorXd& xf_mainline, const VectorXd& d,
                                  int samples = 2000, unsigned seed = 1);

// Lower bound on the number of steps needed to drain the excess of x above
// the terminal box when the network can remove at most its capacity per step.
int min_drain_steps(const FreewayParams<double>& p, const VectorXd& x, const VectorXd& lambda,
                    const VectorXd& terminal_upper);

}  // namespace ramp::mpc
