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
#include "ramp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ramp::estimators {

using Eigen::VectorXd;

namespace {

void check_obs(const Observation<double>& y, const OutputModel& c, Index n) {
  if (c.measured.size() != n || c.gain.size() != n || y.mainline.size() != n || y.ramps.size() != n ||
      y.measured.size() != n)
    throw DomainError("observation does not match the output model");
  for (Index i = 0; i < n; ++i)
    if (c.measured[i] && c.gain[i] == 0) throw DomainError("measured cell with zero gain");
}

// Substitutes a reading into one component; false when it is outside the box.
bool substitute(LiftedState<double>& s, Index j, double value, double tol) {
  if (value > s.upper[j] + tol || value < s.lower[j] - tol) return false;
  s.upper[j] = s.lower[j] = value;
  return true;
}

bool apply_observation(LiftedState<double>& s, const Observation<double>& y, const OutputModel& c, double tol) {
  const Index n = c.measured.size();
  for (Index i = 0; i < n; ++i) {
    if (c.measured[i] && !substitute(s, i, y.mainline[i] / c.gain[i], tol)) return false;
    if (!substitute(s, n + i, y.ramps[i], tol)) return false;
  }
  return true;
}

// Intersection of two boxes; false when empty beyond tol.
bool intersect(LiftedState<double>& s, const LiftedState<double>& other, double tol) {
  s.upper = s.upper.cwiseMin(other.upper);
  s.lower = s.lower.cwiseMax(other.lower);
  for (Index j = 0; j < s.upper.size(); ++j) {
    if (s.lower[j] > s.upper[j] + tol) return false;
    if (s.lower[j] > s.upper[j]) s.lower[j] = s.upper[j];
  }
  return true;
}

bool admissible_box(const ParamBounds<double>& th) {
  // The embedding is monotone only while v_lower + w_upper <= 1.
  return ((th.lower.v + th.upper.w).array() <= 1).all();
}

}  // namespace

LiftedState<double> state_update(const LiftedState<double>& predicted, const Observation<double>& y,
                                 const OutputModel& c, double tol) {
  const Index n = c.measured.size();
  check_obs(y, c, n);
  if (predicted.upper.size() != 2 * n || predicted.lower.size() != 2 * n)
    throw DomainError("state_update: dimension mismatch");
  LiftedState<double> s = predicted;
  for (Index i = 0; i < n; ++i) {
    if (c.measured[i] && !substitute(s, i, y.mainline[i] / c.gain[i], tol))
      throw ContainmentViolation("reading of cell " + std::to_string(i + 1) + " lies outside the predicted box");
    if (!substitute(s, n + i, y.ramps[i], tol))
      throw ContainmentViolation("reading of ramp " + std::to_string(i + 1) + " lies outside the predicted box");
  }
  return s;
}

MeasurementWindow::MeasurementWindow(int horizon) : horizon_(horizon) {
  if (horizon < 1) throw DomainError("measurement window needs L >= 1");
}

int MeasurementWindow::transitions() const {
  return static_cast<int>(std::min(controls_.size(), observations_.size()));
}

void MeasurementWindow::push_estimate(const LiftedState<double>& estimate, const Observation<double>& y) {
  if (estimates_.size() > controls_.size()) throw ContractError("push_estimate: missing control for last estimate");
  estimates_.push_back(estimate);
  // The first estimate has no transition leading to it.
  if (estimates_.size() > 1) observations_.push_back(y);
  trim();
}

void MeasurementWindow::push_control(const VectorXd& u, const DemandBounds<double>& lambda) {
  if (controls_.size() + 1 != estimates_.size()) throw ContractError("push_control: expected an estimate first");
  controls_.push_back(u);
  demands_.push_back(lambda);
}

void MeasurementWindow::trim() {
  while (static_cast<int>(estimates_.size()) > horizon_ + 1) {
    estimates_.pop_front();
    controls_.pop_front();
    demands_.pop_front();
    observations_.pop_front();
  }
}

Consistency interval_consistency(const ParamBounds<double>& theta, const LiftedState<double>& state0,
                                 const std::vector<VectorXd>& controls,
                                 const std::vector<Observation<double>>& observations,
                                 const std::vector<DemandBounds<double>>& demand, const OutputModel& c,
                                 const std::vector<LiftedState<double>>* tied, double tol) {
  if (controls.size() != observations.size() || controls.size() != demand.size() ||
      (tied && tied->size() != controls.size()))
    throw DomainError("interval_consistency: window pieces differ in length");
  LiftedState<double> s = state0;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    s = embedding::lifted_step_saturating(s, controls[k], demand[k], theta);
    if (tied && !intersect(s, (*tied)[k], tol)) return Consistency::Infeasible;
    if (!apply_observation(s, observations[k], c, tol)) return Consistency::Infeasible;
  }
  return theta.is_point() && s.is_point() ? Consistency::Feasible : Consistency::Unknown;
}

ParamBounds<double> theta_update(const MeasurementWindow& window, const ParamBounds<double>& theta,
                                 const OutputModel& c, const EstimatorConfig& cfg, PruneStats* stats) {
  PruneStats local;
  PruneStats& st = stats ? *stats : local;
  st = {};
  const int k = window.transitions();
  if (k == 0 || theta.is_point()) return theta;
  const auto& est = window.estimates();
  const LiftedState<double>& start = est[est.size() - 1 - k];
  const std::vector<VectorXd> controls(window.controls().end() - k, window.controls().end());
  const std::vector<Observation<double>> obs(window.observations().end() - k, window.observations().end());
  const std::vector<DemandBounds<double>> lam(window.demands().end() - k, window.demands().end());
  const std::vector<LiftedState<double>> tied(est.end() - k, est.end());

  const auto refuted = [&](const ParamBounds<double>& box) {
    ++st.checks;
    return interval_consistency(box, start, controls, obs, lam, c, &tied, cfg.consistency_tol) ==
           Consistency::Infeasible;
  };
  if (refuted(theta)) throw ContainmentViolation("no parameter in the box is consistent with the window");

  ParamBounds<double> box = theta;
  for (const auto& [name, member] : ctm::param_fields<double>()) {
    if (member == &FreewayParams<double>::x_jam) continue;
    for (Index i = 0; i < (box.upper.*member).size(); ++i) {
      for (int side = 0; side < 2; ++side) {
        for (int d = 0; d < cfg.prune_depth && st.checks < cfg.prune_budget; ++d) {
          double& hi = (box.upper.*member)[i];
          double& lo = (box.lower.*member)[i];
          if (hi - lo <= 0) break;
          // side 0 probes the top end, side 1 the bottom end. The outer
          // quarter is tried when the outer half is not refuted, so a truth
          // sitting on a bisection point does not stall the contraction.
          bool cut = false;
          for (double frac : {0.5, 0.25}) {
            if (st.checks >= cfg.prune_budget) break;
            const double at = side == 0 ? hi - frac * (hi - lo) : lo + frac * (hi - lo);
            ParamBounds<double> piece = box;
            if (side == 0)
              (piece.lower.*member)[i] = at;
            else
              (piece.upper.*member)[i] = at;
            if (!admissible_box(piece) || !refuted(piece)) continue;
            ++st.cuts;
            (side == 0 ? hi : lo) = at;
            cut = true;
            break;
          }
          if (!cut) break;
        }
      }
    }
  }
  return box;
}

SetMembershipEstimator::SetMembershipEstimator(const LiftedState<double>& prior, const DemandBounds<double>& lambda,
                                               const ParamBounds<double>& theta, const OutputModel& c,
                                               const EstimatorConfig& cfg)
    : predicted_(prior), estimate_(prior), lambda_(lambda), theta_(theta), output_(c), cfg_(cfg),
      window_(cfg.horizon) {
  theta_.validate();
  const Index n = theta.upper.cells();
  if (prior.upper.size() != 2 * n || prior.lower.size() != 2 * n || lambda.upper.size() != n ||
      lambda.lower.size() != n)
    throw DomainError("estimator: dimension mismatch");
  if (!admissible_box(theta_)) throw DomainError("estimator requires v_lower + w_upper <= 1");
}

void SetMembershipEstimator::update(const Observation<double>& y, bool free_flow) {
  estimate_ = state_update(predicted_, y, output_, cfg_.consistency_tol);
  window_.push_estimate(estimate_, y);
  theta_ = theta_update(window_, theta_, output_, cfg_, &prune_);
  lambda_ = demand_update(lambda_);
  recent_obs_.push_back(y);
  if (recent_obs_.size() > 3) {
    recent_obs_.pop_front();
    recent_u_.pop_front();
  }
  sweep_.reset();
  if (cfg_.identify && free_flow) try_identify();
  have_estimate_ = true;
}

void SetMembershipEstimator::predict(const VectorXd& u) {
  if (!have_estimate_) throw ContractError("predict called before update");
  if (u.size() != theta_.upper.cells()) throw DomainError("predict: control has wrong size");
  window_.push_control(u, lambda_);
  recent_u_.push_back(u);
  predicted_ = embedding::lifted_step_saturating(estimate_, u, lambda_, theta_);
  have_estimate_ = false;
}

void SetMembershipEstimator::try_identify() {
  if (recent_obs_.size() < 3 || recent_u_.size() < 2) return;
  const Index n = theta_.upper.cells();
  std::array<VectorXd, 3> xm;
  for (int k = 0; k < 3; ++k) {
    xm[k] = VectorXd::Zero(n);
    for (Index i = 0; i < n; ++i)
      if (output_.measured[i]) xm[k][i] = recent_obs_[k].mainline[i] / output_.gain[i];
  }
  // A ramp inflow is known when the control was releasable for every demand
  // in the box, when a queue remained after release, or when a point demand
  // box fixes the amount that left an emptied queue.
  ArrayXb known = output_.measured;
  std::array<VectorXd, 2> inflow{VectorXd::Zero(n), VectorXd::Zero(n)};
  for (int k = 0; k < 2; ++k)
    for (Index i = 0; i < n; ++i) {
      const double q = recent_obs_[k].ramps[i], q_next = recent_obs_[k + 1].ramps[i], u = recent_u_[k][i];
      const bool point = lambda_.upper[i] == lambda_.lower[i];
      if (u <= q + lambda_.lower[i] || q_next > cfg_.consistency_tol)
        inflow[k][i] = u;
      else if (point)
        inflow[k][i] = q + lambda_.upper[i];
      else
        known[i] = false;
    }
  sweep_ = full_identify_sweep(xm, inflow, known, cfg_.rank_tol);
  ParamBounds<double> candidate = theta_;
  if (collapse_identified(candidate, *sweep_) == 0 || !admissible_box(candidate)) return;
  // Keep the collapse only if it is consistent with the window.
  const int kwin = window_.transitions();
  const auto& est = window_.estimates();
  const std::vector<VectorXd> controls(window_.controls().end() - kwin, window_.controls().end());
  const std::vector<Observation<double>> obs(window_.observations().end() - kwin, window_.observations().end());
  const std::vector<DemandBounds<double>> lam(window_.demands().end() - kwin, window_.demands().end());
  if (kwin > 0 && interval_consistency(candidate, est[est.size() - 1 - kwin], controls, obs, lam, output_, nullptr,
                                       cfg_.consistency_tol) == Consistency::Infeasible)
    return;
  theta_ = candidate;
}

}  // namespace ramp::estimators
