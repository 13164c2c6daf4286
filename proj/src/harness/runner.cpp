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
#include <array>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "ramp/harness.hpp"
#include "ramp/types.hpp"

namespace ramp::harness {

namespace {

VectorXd warmup_input(const Scenario& s) {
  return (s.demand_box.upper / 2).cwiseMin(s.setpc.mpc.u_max).cwiseMax(0.0);
}

bool known_model_regime(const Scenario& s) {
  return s.theta.is_point() && s.demand_box.is_point() && s.demand.kind == DemandProfile::Kind::Constant &&
         s.setpc.mpc.mode == mpc::CostMode::Linear && s.terminal == TerminalKind::Recoverable;
}

}  // namespace

std::unique_ptr<controllers::Controller> make_controller(const Scenario& s) {
  const VectorXd& u_max = s.setpc.mpc.u_max;
  switch (s.controller) {
    case ControllerKind::SetPc:
      return std::make_unique<controllers::SetPcController>(s.setpc);
    case ControllerKind::Alinea:
      return std::make_unique<controllers::AlineaController>(s.alinea_gain, s.alinea_setpoint, warmup_input(s),
                                                             u_max);
    case ControllerKind::OpenLoop:
      return std::make_unique<controllers::OpenLoopController>(s.demand.base, u_max);
    case ControllerKind::Local:
      return std::make_unique<controllers::LocalController>(s.setpc.local, warmup_input(s), u_max);
  }
  throw InvariantError("make_controller: unhandled controller kind");
}

TrajectoryLog run_closed_loop(const Scenario& s, const RunOptions& opts) {
  const Index n = s.cells;
  const int steps = opts.steps >= 0 ? opts.steps : s.steps;
  embedding::LiftedState<double> prior;
  prior.upper = VectorXd(2 * n);
  prior.lower = VectorXd::Zero(2 * n);
  prior.upper.head(n) = s.mainline_prior_upper;
  prior.lower.head(n) = s.mainline_prior_lower;
  prior.upper.tail(n).setConstant(std::numeric_limits<double>::infinity());

  estimators::SetMembershipEstimator est(prior, s.demand_box, s.theta, s.output, s.estimator);
  auto ctrl = make_controller(s);
  const VectorXd& l = s.setpc.mpc.stage_weight;
  const VectorXd& terminal = s.setpc.mpc.terminal_upper;

  TrajectoryLog log;
  log.steps.reserve(std::size_t(s.warmup + steps));
  VectorXd x = s.x0;
  for (int t = -s.warmup; t < steps; ++t) {
    est.update(ctm::measure(x, s.output), t >= 0 && (s.assume_free_flow || ctrl->free_flow()));
    StepRecord rec;
    rec.t = t;
    rec.x = x;
    rec.estimate = est.estimate();
    rec.theta = est.theta();
    rec.demand = est.demand();
    rec.lambda = s.demand.at(t);
    rec.stage_cost = l.dot(rec.estimate.upper);
    if (t < 0) {
      rec.u = warmup_input(s);
      rec.phase = Phase::Warmup;
      rec.feasible = true;
    } else {
      const auto d = ctrl->decide(est);
      ctrl->applied(d.u);
      rec.u = d.u;
      rec.phase = d.phase;
      rec.feasible = d.feasible;
      rec.fallback = d.fallback;
      rec.value = d.value;
      rec.bound = d.bound;
      rec.nodes = d.nodes;
    }
    const bool stop = opts.stop_at_terminal && t >= 0 && ((rec.estimate.upper - terminal).array() <= 1e-9).all();
    log.steps.push_back(rec);
    if (stop) break;
    x = ctm::plant_step(s.truth, x, rec.u, rec.lambda);
    est.predict(rec.u);
  }
  return log;
}

FeasibilityReport feasibility_conditions(const Scenario& s) {
  const Index n = s.cells;
  FeasibilityReport r;
  r.f_eq = ctm::equilibrium_flow(s.truth, s.demand.base);
  r.x_unc = ctm::equilibrium_uncongested(s.truth, s.demand.base);
  r.x_up = mpc::compute_xup(s.truth, s.demand.base);
  r.x_crit = s.truth.critical_density();
  const VectorXd& xf = s.setpc.mpc.terminal_upper;
  r.condition1 = (xf.head(n).array() > 0).all() && xf.tail(n).array().isInf().all();
  r.condition2 = s.theta.is_point() && s.demand_box.is_point() &&
                 ((xf.head(n) - mpc::compute_xup(s.theta.lower, s.demand_box.lower)).array() >= 0).all() &&
                 (xf.tail(n).array() >= 0).all();
  return r;
}

IdentifyReport identify_from_log(const Scenario& s, const TrajectoryLog& log, int start) {
  const Index n = s.cells;
  IdentifyReport r;
  if (start < 0) {
    start = analysis::time_to_terminal(log, s.setpc.mpc.terminal_upper);
    if (start < 0) start = 0;
  }
  std::size_t k = 0;
  while (k < log.steps.size() && log.steps[k].t != start) ++k;
  if (k + 2 >= log.steps.size()) throw DomainError("identify: fewer than three readings from step " + std::to_string(start));
  r.start = start;
  std::array<VectorXd, 3> mainline;
  std::array<VectorXd, 2> inflow;
  for (int j = 0; j < 3; ++j) mainline[j] = log.steps[k + j].estimate.upper.head(n);
  for (int j = 0; j < 2; ++j) {
    const auto& a = log.steps[k + j];
    const auto& b = log.steps[k + j + 1];
    inflow[j] = a.x.tail(n) + a.lambda - b.x.tail(n);
  }
  r.sweep = estimators::full_identify_sweep(mainline, inflow, s.output.measured, s.estimator.rank_tol);
  return r;
}

Certificates certify(const Scenario& s, const TrajectoryLog& log) {
  Certificates c;
  const auto& m = s.setpc.mpc;
  const VectorXd d = s.demand_gain();
  c.constants = analysis::iss_constants(m.stage_weight, m.terminal_weight, d, m.horizon);
  c.iss = analysis::verify_iss_bound(log, c.constants);
  c.lyapunov = analysis::lyapunov_decrease_check(log, m.stage_weight,
                                                 m.mode == mpc::CostMode::Linear ? d : VectorXd());
  c.value_bounds = analysis::value_function_bounds_check(log, c.constants);
  c.containment = analysis::containment_check(log, s.truth);
  c.terminal_entry = analysis::time_to_terminal(log, m.terminal_upper);
  if (!known_model_regime(s)) {
    c.iss.detail = "needs known parameters, constant demand and linear cost";
    c.value_bounds.detail = "needs known parameters, constant demand and linear cost";
    c.lyapunov.detail = "needs known parameters, constant demand and linear cost";
  }
  return c;
}

void write_summary(const Scenario& s, const TrajectoryLog& log, const Certificates& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write " + path);
  const auto report = [&](const char* name, const analysis::CheckReport& r) {
    out << fmt::format("{}.ok = {}\n{}.min_margin = {:.12g}\n{}.worst_step = {}\n{}.checked = {}\n", name,
                       r.ok ? "true" : "false", name, r.min_margin, name, r.worst_step, name, r.checked);
    if (!r.detail.empty()) out << fmt::format("{}.note = {}\n", name, r.detail);
  };
  out << fmt::format("scenario = {}\ncontroller = {}\nsteps = {}\n", s.name, to_string(s.controller),
                     log.steps.size());
  out << fmt::format("iss.a1 = {:.12g}\niss.a2 = {:.12g}\niss.a3 = {:.12g}\niss.rho = {:.12g}\n", c.constants.a1,
                     c.constants.a2, c.constants.a3, c.constants.rho);
  out << fmt::format("terminal_entry = {}\n", c.terminal_entry);
  report("iss", c.iss);
  report("lyapunov", c.lyapunov);
  report("value_bounds", c.value_bounds);
  report("containment", c.containment);
}

}  // namespace ramp::harness
