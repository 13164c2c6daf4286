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

// Set-membership estimation of the state, the demand and the parameters.
// Every bound kept here contains the truth as long as the plant follows the
// model with parameters and demand inside the initial boxes.

#include <deque>
#include <optional>
#include <vector>

#include "ramp/ctm.hpp"
#include "ramp/embedding.hpp"

namespace ramp::estimators {

using ctm::FreewayParams;
using ctm::Observation;
using ctm::OutputModel;
using embedding::DemandBounds;
using embedding::LiftedState;
using embedding::ParamBounds;

struct EstimatorConfig {
  int horizon = 1;              // backward window L
  int prune_depth = 8;          // bisections per bound per update
  int prune_budget = 400;       // consistency checks per update
  double consistency_tol = 1e-9;
  double rank_tol = 1e-8;
  bool identify = true;         // run the free-flow identifier when allowed
};

// Measured mainline cells and all ramps collapse to the reading. Throws
// ContainmentViolation when a reading falls outside the predicted box.
LiftedState<double> state_update(const LiftedState<double>& predicted, const Observation<double>& y,
                                 const OutputModel& c, double tol = 1e-9);

// The demand box is carried over unchanged.
inline DemandBounds<double> demand_update(const DemandBounds<double>& previous) { return previous; }

// Data over [t-L, t]: estimates e_0..e_L, controls c_0..c_{L-1} applied after
// each estimate, observations o_1..o_L taken with e_1..e_L, and the demand
// boxes in force during each transition.
class MeasurementWindow {
 public:
  explicit MeasurementWindow(int horizon = 1);

  void push_estimate(const LiftedState<double>& estimate, const Observation<double>& y);
  void push_control(const Eigen::VectorXd& u, const DemandBounds<double>& lambda);

  int horizon() const { return horizon_; }
  // Number of complete transitions currently stored.
  int transitions() const;
  bool full() const { return transitions() >= horizon_; }

  const std::deque<LiftedState<double>>& estimates() const { return estimates_; }
  const std::deque<Observation<double>>& observations() const { return observations_; }
  const std::deque<Eigen::VectorXd>& controls() const { return controls_; }
  const std::deque<DemandBounds<double>>& demands() const { return demands_; }

 private:
  void trim();

  int horizon_;
  std::deque<LiftedState<double>> estimates_;
  std::deque<Observation<double>> observations_;
  std::deque<Eigen::VectorXd> controls_;
  std::deque<DemandBounds<double>> demands_;
};

enum class Consistency { Feasible, Infeasible, Unknown };

// Propagates the state box with every parameter of `theta` through the
// recorded controls and compares with the observations. Infeasible only when
// some reading lies outside the propagated interval by more than `tol`.
// `tied`, when given, holds stored boxes e_1..e_k that the propagation is
// intersected with.
Consistency interval_consistency(const ParamBounds<double>& theta, const LiftedState<double>& state0,
                                 const std::vector<Eigen::VectorXd>& controls,
                                 const std::vector<Observation<double>>& observations,
                                 const std::vector<DemandBounds<double>>& demand, const OutputModel& c,
                                 const std::vector<LiftedState<double>>* tied = nullptr, double tol = 1e-9);

struct PruneStats {
  int checks = 0;
  int cuts = 0;
};

// Branch-and-prune contraction of the parameter box over the window. Jam
// density is kept as given. Throws ContainmentViolation when the whole box is
// refuted.
ParamBounds<double> theta_update(const MeasurementWindow& window, const ParamBounds<double>& theta,
                                 const OutputModel& c, const EstimatorConfig& cfg, PruneStats* stats = nullptr);

// --- free-flow identification -------------------------------------------

struct CellEstimate {
  double v = 0;
  std::optional<double> beta;  // split into this cell, absent for the first cell
};

// Identifies (beta_{i-1}, v_i) from three consecutive free-flow readings of
// cells i-1 and i and the ramp inflows of the two transitions. For i = 0 only
// v_0 is identified and `upstream_v` is ignored. Throws RankDeficient when the
// normalized determinant is below rank_tol and DomainError on readings that
// cannot come from free flow.
CellEstimate freeflow_identify(Index i, const std::array<Eigen::VectorXd, 3>& mainline,
                               const std::array<Eigen::VectorXd, 2>& inflow, double upstream_v,
                               double rank_tol = 1e-8);

enum class CellStatus { Identified, Unmeasured, RankDeficient, Degenerate, UpstreamMissing };
const char* to_string(CellStatus s);

struct SweepResult {
  Eigen::VectorXd v;     // NaN where not identified
  Eigen::VectorXd beta;  // size I-1, NaN where not identified
  std::vector<CellStatus> status;
  bool complete() const;
};

// Cascaded identification over the cells. The caller guarantees that the
// readings come from free flow, as holds once the loop is inside the terminal
// set under demand tracking.
SweepResult full_identify_sweep(const std::array<Eigen::VectorXd, 3>& mainline,
                                const std::array<Eigen::VectorXd, 2>& inflow, const ArrayXb& measured,
                                double rank_tol = 1e-8);

// Collapses the v and beta intervals onto the identified values that lie in
// the box (within tol); others are left as they are. Returns how many
// components collapsed.
int collapse_identified(ParamBounds<double>& theta, const SweepResult& sweep, double tol = 1e-9);

// --- the estimator pipeline ---------------------------------------------

// The predict-update loop: update() runs the state, parameter and demand
// updates on a new reading; predict() propagates the estimate through the
// embedding with the applied control.
class SetMembershipEstimator {
 public:
  SetMembershipEstimator(const LiftedState<double>& prior, const DemandBounds<double>& lambda,
                         const ParamBounds<double>& theta, const OutputModel& c, const EstimatorConfig& cfg);

  // `free_flow` tells the identifier that the readings in the window come
  // from free flow; it is only used when cfg.identify is set.
  void update(const Observation<double>& y, bool free_flow = false);
  void predict(const Eigen::VectorXd& u);

  const LiftedState<double>& estimate() const { return estimate_; }
  const LiftedState<double>& predicted() const { return predicted_; }
  const ParamBounds<double>& theta() const { return theta_; }
  const DemandBounds<double>& demand() const { return lambda_; }
  const MeasurementWindow& window() const { return window_; }
  const OutputModel& output_model() const { return output_; }
  const EstimatorConfig& config() const { return cfg_; }
  const PruneStats& last_prune() const { return prune_; }
  const std::optional<SweepResult>& last_sweep() const { return sweep_; }

 private:
  void try_identify();

  LiftedState<double> predicted_, estimate_;
  DemandBounds<double> lambda_;
  ParamBounds<double> theta_;
  OutputModel output_;
  EstimatorConfig cfg_;
  MeasurementWindow window_;
  PruneStats prune_;
  std::optional<SweepResult> sweep_;
  std::deque<Observation<double>> recent_obs_;  // last three readings
  std::deque<Eigen::VectorXd> recent_u_;        // controls between them
  bool have_estimate_ = false;
};

}  // namespace ramp::estimators
