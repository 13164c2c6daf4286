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

// Closed-loop policies. Every controller reads the set-membership estimate
// and returns a metering rate clipped to [0, u_max].

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "ramp/estimators.hpp"
#include "ramp/log.hpp"
#include "ramp/mpc.hpp"

namespace ramp::controllers {

using estimators::SetMembershipEstimator;

struct LocalConfig {
  int average = 1;       // number of observed demand samples averaged
  double epsilon = 0.1;  // added per ramp while its queue is positive
};

// Demand tracking: the mean of y_r(k) - y_r(k-1) + u(k-1) over the last
// `average` steps, plus epsilon on ramps with a queue. `ramp_obs` holds
// y_r(t-m)..y_r(t) and `controls` u(t-m)..u(t-1) with m >= 1.
VectorXd local_controller(const std::deque<VectorXd>& ramp_obs, const std::deque<VectorXd>& controls,
                          const LocalConfig& cfg, const VectorXd& u_max);

// u(t) = u(t-1) - gain (setpoint - x_upper), clipped to [0, u_max].
VectorXd alinea_step(const VectorXd& previous, const VectorXd& mainline_upper, const VectorXd& setpoint,
                     double gain, const VectorXd& u_max);

// Switches to the local phase when the upper estimate is inside the terminal
// box (inclusive) and back to MPC on exit when `revert` is set.
Phase dual_mode_supervisor(Phase current, const VectorXd& estimate_upper, const VectorXd& terminal_upper,
                           bool revert);

struct Decision {
  VectorXd u;
  Phase phase = Phase::Baseline;
  bool feasible = false;
  bool fallback = false;
  double value = std::numeric_limits<double>::quiet_NaN();
  double bound = std::numeric_limits<double>::quiet_NaN();
  milp::MilpStatus status = milp::MilpStatus::Infeasible;
  long nodes = 0;
  double seconds = 0;
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual Decision decide(const SetMembershipEstimator& est) = 0;
  // Called with the control actually applied, after decide().
  virtual void applied(const VectorXd& u) { (void)u; }
  // True when the last three readings are known to come from free flow.
  virtual bool free_flow() const { return false; }
  virtual std::string name() const = 0;
};

// What to do when the MPC returns no feasible plan.
enum class Fallback {
  Error,         // throw
  ZeroControl,   // u = 0
  Constructive,  // first move of the best hold-and-fill rollout
};

struct SetPcConfig {
  mpc::MpcConfig mpc;
  LocalConfig local;
  bool dual_mode = true;
  bool revert_to_mpc = true;
  Fallback fallback = Fallback::Error;
  int fallback_steps = 400;  // rollout length for Fallback::Constructive
};

class SetPcController : public Controller {
 public:
  explicit SetPcController(SetPcConfig cfg);
  Decision decide(const SetMembershipEstimator& est) override;
  void applied(const VectorXd& u) override;
  bool free_flow() const override { return local_steps_ >= 2; }
  std::string name() const override { return "setpc"; }

  Phase phase() const { return phase_; }
  const mpc::MpcResult& last_solve() const { return last_; }

 private:
  SetPcConfig cfg_;
  Phase phase_ = Phase::Mpc;
  int local_steps_ = 0;
  std::vector<VectorXd> plan_;
  mpc::MpcResult last_;
  std::deque<VectorXd> ramp_obs_, controls_;
};

class AlineaController : public Controller {
 public:
  AlineaController(double gain, VectorXd setpoint, VectorXd initial, VectorXd u_max);
  Decision decide(const SetMembershipEstimator& est) override;
  void applied(const VectorXd& u) override { prev_ = u; }
  std::string name() const override { return "alinea"; }

 private:
  double gain_;
  VectorXd setpoint_, prev_, u_max_;
};

class OpenLoopController : public Controller {
 public:
  OpenLoopController(VectorXd lambda, VectorXd u_max);
  Decision decide(const SetMembershipEstimator& est) override;
  std::string name() const override { return "openloop"; }

 private:
  VectorXd u_;
};

// Demand tracking from the first step, seeded by a given control.
class LocalController : public Controller {
 public:
  LocalController(LocalConfig cfg, VectorXd initial, VectorXd u_max);
  Decision decide(const SetMembershipEstimator& est) override;
  void applied(const VectorXd& u) override;
  std::string name() const override { return "local"; }

 private:
  LocalConfig cfg_;
  VectorXd initial_, u_max_;
  std::deque<VectorXd> ramp_obs_, controls_;
};

// Parameter box handed to the MPC: with an uncertain jam density both ends
// take the upper value.
embedding::ParamBounds<double> mpc_params(const embedding::ParamBounds<double>& theta);

}  // namespace ramp::controllers
