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
#include "ramp/controllers.hpp"

#include <algorithm>
#include <utility>

#include "ramp/types.hpp"

namespace ramp::controllers {

namespace {

constexpr double kTerminalTol = 1e-9;

VectorXd clip(VectorXd u, const VectorXd& hi) {
  for (Index i = 0; i < u.size(); ++i) u[i] = std::clamp(u[i], 0.0, std::max(hi[i], 0.0));
  return u;
}

VectorXd ramps_of(const embedding::LiftedState<double>& s) {
  const Index n = s.upper.size() / 2;
  return s.upper.tail(n);
}

void push_bounded(std::deque<VectorXd>& d, VectorXd v, std::size_t cap) {
  d.push_back(std::move(v));
  while (d.size() > cap) d.pop_front();
}

}  // namespace

VectorXd local_controller(const std::deque<VectorXd>& ramp_obs, const std::deque<VectorXd>& controls,
                          const LocalConfig& cfg, const VectorXd& u_max) {
  if (cfg.average < 1) throw DomainError("local_controller: average must be at least 1");
  if (ramp_obs.size() < 2 || controls.size() + 1 != ramp_obs.size())
    throw ContractError("local_controller: need y_r(t-m..t) and u(t-m..t-1) with m >= 1");
  const std::size_t m = std::min<std::size_t>(cfg.average, controls.size());
  const std::size_t last = ramp_obs.size() - 1;
  VectorXd sum = VectorXd::Zero(u_max.size());
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t k = last - j;
    sum += ramp_obs[k] - ramp_obs[k - 1] + controls[k - 1];
  }
  VectorXd u = sum / double(m);
  const VectorXd& queue = ramp_obs.back();
  for (Index i = 0; i < u.size(); ++i)
    if (queue[i] > 0) u[i] += cfg.epsilon;
  return clip(std::move(u), u_max);
}

VectorXd alinea_step(const VectorXd& previous, const VectorXd& mainline_upper, const VectorXd& setpoint,
                     double gain, const VectorXd& u_max) {
  if (previous.size() != setpoint.size() || mainline_upper.size() != setpoint.size())
    throw DomainError("alinea_step: dimension mismatch");
  return clip(previous - gain * (setpoint - mainline_upper), u_max);
}

Phase dual_mode_supervisor(Phase current, const VectorXd& estimate_upper, const VectorXd& terminal_upper,
                           bool revert) {
  const bool inside = ((estimate_upper - terminal_upper).array() <= kTerminalTol).all();
  if (current == Phase::Local) return (!inside && revert) ? Phase::Mpc : Phase::Local;
  return inside ? Phase::Local : Phase::Mpc;
}

embedding::ParamBounds<double> mpc_params(const embedding::ParamBounds<double>& theta) {
  auto out = theta;
  out.lower.x_jam = out.upper.x_jam;
  return out;
}

SetPcController::SetPcController(SetPcConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.mpc.terminal_upper.size() == 0 || cfg_.mpc.u_max.size() == 0)
    throw DomainError("SetPcController: terminal box and metering limit are required");
}

Decision SetPcController::decide(const SetMembershipEstimator& est) {
  const auto& x = est.estimate();
  const VectorXd& u_max = cfg_.mpc.u_max;
  const Index n = u_max.size();
  push_bounded(ramp_obs_, ramps_of(x), cfg_.local.average + 1);

  Decision d;
  const Phase next = cfg_.dual_mode ? dual_mode_supervisor(phase_, x.upper, cfg_.mpc.terminal_upper,
                                                           cfg_.revert_to_mpc)
                                    : Phase::Mpc;
  if (next != Phase::Local) local_steps_ = 0;
  phase_ = next;
  d.phase = phase_;

  if (phase_ == Phase::Local) {
    ++local_steps_;
    plan_.clear();
    d.feasible = true;
    if (controls_.empty()) {
      // Nothing to track yet: release the guaranteed demand.
      VectorXd u = est.demand().lower;
      for (Index i = 0; i < n; ++i)
        if (x.lower[n + i] > 0) u[i] += cfg_.local.epsilon;
      d.u = clip(std::move(u), u_max);
    } else {
      d.u = local_controller(ramp_obs_, controls_, cfg_.local, u_max);
    }
    return d;
  }

  std::vector<std::vector<VectorXd>> hints;
  if (plan_.size() > 1) {
    std::vector<VectorXd> shifted(plan_.begin() + 1, plan_.end());
    shifted.push_back(est.demand().lower);
    hints.push_back(std::move(shifted));
  }
  const auto theta = mpc_params(est.theta());
  last_ = mpc::solve_mpc(x, est.demand(), theta, cfg_.mpc, hints);
  d.status = last_.status;
  d.nodes = last_.nodes;
  d.seconds = last_.seconds;
  d.bound = last_.bound;
  // The solver may overshoot the releasable amount by its tolerance.
  const VectorXd releasable = (x.lower.tail(n) + est.demand().lower).cwiseMin(u_max);
  if (last_.feasible) {
    plan_ = last_.plan;
    d.feasible = true;
    d.value = last_.value;
    d.u = clip(last_.u0, releasable);
    return d;
  }
  plan_.clear();
  d.fallback = true;
  switch (cfg_.fallback) {
    case Fallback::Error:
      throw InvariantError(std::string("SetPcController: MPC returned no plan (") +
                           milp::to_string(last_.status) + ")");
    case Fallback::ZeroControl:
      d.u = VectorXd::Zero(n);
      break;
    case Fallback::Constructive: {
      const auto rollouts = mpc::hold_fill_rollouts(x, est.demand(), theta, cfg_.mpc, cfg_.fallback_steps);
      d.u = rollouts.empty() || rollouts.front().controls.empty() ? VectorXd::Zero(n)
                                                                 : clip(rollouts.front().controls[0], releasable);
      break;
    }
  }
  return d;
}

void SetPcController::applied(const VectorXd& u) { push_bounded(controls_, u, cfg_.local.average); }

AlineaController::AlineaController(double gain, VectorXd setpoint, VectorXd initial, VectorXd u_max)
    : gain_(gain), setpoint_(std::move(setpoint)), prev_(std::move(initial)), u_max_(std::move(u_max)) {
  if (setpoint_.size() != prev_.size() || u_max_.size() != prev_.size())
    throw DomainError("AlineaController: dimension mismatch");
}

Decision AlineaController::decide(const SetMembershipEstimator& est) {
  const Index n = setpoint_.size();
  Decision d;
  d.phase = Phase::Baseline;
  d.feasible = true;
  d.u = alinea_step(prev_, est.estimate().upper.head(n), setpoint_, gain_, u_max_);
  return d;
}

OpenLoopController::OpenLoopController(VectorXd lambda, VectorXd u_max) : u_(clip(std::move(lambda), u_max)) {}

Decision OpenLoopController::decide(const SetMembershipEstimator&) {
  Decision d;
  d.phase = Phase::Baseline;
  d.feasible = true;
  d.u = u_;
  return d;
}

LocalController::LocalController(LocalConfig cfg, VectorXd initial, VectorXd u_max)
    : cfg_(cfg), initial_(std::move(initial)), u_max_(std::move(u_max)) {}

Decision LocalController::decide(const SetMembershipEstimator& est) {
  push_bounded(ramp_obs_, ramps_of(est.estimate()), cfg_.average + 1);
  Decision d;
  d.phase = Phase::Local;
  d.feasible = true;
  d.u = controls_.empty() ? clip(initial_, u_max_) : local_controller(ramp_obs_, controls_, cfg_, u_max_);
  return d;
}

void LocalController::applied(const VectorXd& u) { push_bounded(controls_, u, cfg_.average); }

}  // namespace ramp::controllers
