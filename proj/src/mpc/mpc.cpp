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
#include "ramp/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ramp/milp/gadgets.hpp"

namespace ramp::mpc {

using milp::LinExpr;
using milp::Sense;
using milp::Var;

Census census(Index cells, int horizon, CostMode mode, bool aliased, bool diag_upper, bool diag_lower) {
  const long n = cells, T = horizon;
  Census c;
  c.state_vars = 2 * 2 * n * (T + 1);
  c.control_vars = n * T;
  long cont = 0, bin = 0;
  if (aliased) {
    bin += n;                        // capacity drop
    cont += n;                       // demand
    bin += diag_upper ? 0 : n;
    cont += n - 1;                   // mainline flow
    bin += n - 1;
  } else {
    bin += 2 * n;
    cont += 2 * n;
    bin += (diag_upper ? 0 : n) + (diag_lower ? 0 : n);
    cont += 2 * (n - 1);             // demands feeding the next cell
    bin += 2 * (n - 1);
    cont += 4 * (n - 1);             // in/out flows of both components
    bin += 4 * (n - 1);
  }
  if (mode == CostMode::Indicator) {
    cont += 1;
    bin += 1;
  }
  c.aux_continuous = cont * T;
  c.binaries = bin * T;
  if (T > 0) {
    // The initial state is fixed, so its capacity drops need no binary; where
    // a drop binary doubled as the demand selector, the demand min gets its own.
    const long drops = aliased ? n : 2 * n;
    const long selectors = (diag_upper ? n : 0) + (!aliased && diag_lower ? n : 0);
    c.binaries += selectors - drops;
  }
  return c;
}

namespace {

struct StageBox {
  VectorXd up_lo, up_hi, lo_lo, lo_hi;
};

void clamp_box(VectorXd& x, const VectorXd& jam) {
  const Index n = jam.size();
  for (Index i = 0; i < n; ++i) {
    x[i] = std::clamp(x[i], 0.0, jam[i]);
    x[n + i] = std::max(x[n + i], 0.0);
  }
}

std::string tag(const char* what, int k, Index i) {
  return std::string(what) + "_" + std::to_string(k) + "_" + std::to_string(i + 1);
}

}  // namespace

std::vector<VectorXd> MpcProblem::controls(const VectorXd& sol) const {
  std::vector<VectorXd> out(horizon, VectorXd(cells));
  for (int k = 0; k < horizon; ++k)
    for (Index i = 0; i < cells; ++i) out[k][i] = sol[u[k][i].id];
  return out;
}

LiftedState<double> MpcProblem::state(const VectorXd& sol, int k) const {
  LiftedState<double> s{VectorXd(2 * cells), VectorXd(2 * cells)};
  for (Index j = 0; j < 2 * cells; ++j) {
    s.upper[j] = sol[x_up[k][j].id];
    s.lower[j] = sol[x_lo[k][j].id];
  }
  return s;
}

std::optional<VectorXd> MpcProblem::complete(const std::vector<VectorXd>& ctl, double tol) const {
  if (static_cast<int>(ctl.size()) != horizon || trivially_infeasible) return std::nullopt;
  VectorXd x = VectorXd::Zero(model.num_vars());
  for (int k = 0; k < horizon; ++k) {
    if (ctl[k].size() != cells) return std::nullopt;
    for (Index i = 0; i < cells; ++i) {
      const auto& info = model.var(u[k][i]);
      x[u[k][i].id] = std::clamp(ctl[k][i], info.lower, info.upper);
    }
  }
  model.complete(x);
  if (model.max_violation(x) > tol) return std::nullopt;
  return x;
}

MpcProblem build_problem(const LiftedState<double>& x0, const DemandBounds<double>& lam,
                         const ParamBounds<double>& th, const MpcConfig& cfg) {
  th.validate();
  const Index n = th.upper.cells();
  const int T = cfg.horizon;
  if (T < 1) throw DomainError("MPC horizon must be at least 1");
  if (x0.upper.size() != 2 * n || x0.lower.size() != 2 * n || lam.upper.size() != n || lam.lower.size() != n ||
      cfg.stage_weight.size() != 2 * n || cfg.terminal_upper.size() != 2 * n || cfg.u_max.size() != n ||
      (cfg.mode == CostMode::Linear && cfg.terminal_weight.size() != 2 * n))
    throw DomainError("build_problem: dimension mismatch");
  if (th.upper.x_jam != th.lower.x_jam) throw DomainError("MPC requires a known jam density");
  if (((th.lower.v + th.upper.w).array() > 1).any())
    throw DomainError("MPC requires v_lower + w_upper <= 1 in every cell");
  const FreewayParams<double>& hi = th.upper;
  const FreewayParams<double>& lo = th.lower;
  const VectorXd& jam = hi.x_jam;

  LiftedState<double> s0 = embedding::clamp_to_state_space(x0, jam);
  MpcProblem P;
  P.horizon = T;
  P.cells = n;
  P.aliased = cfg.alias_point_boxes && s0.is_point() && lam.is_point() && th.is_point();
  const milp::GadgetOptions go{cfg.eliminate_redundant};

  bool diag_up = true, diag_lo = true;
  for (Index i = 0; i < n; ++i) {
    diag_up = diag_up && lo.v[i] / hi.v[i] >= lo.alpha[i];
    diag_lo = diag_lo && hi.v[i] == lo.v[i] && 1.0 >= hi.alpha[i];
  }
  P.expected = census(n, T, cfg.mode, P.aliased, diag_up, diag_lo);

  // Outer bounds of every reachable lifted state, by monotonicity.
  std::vector<StageBox> box(T + 1);
  std::vector<VectorXd> umax(T);
  box[0] = {s0.upper, s0.upper, s0.lower, s0.lower};
  const VectorXd zero = VectorXd::Zero(n);
  for (int k = 0; k < T; ++k) {
    const StageBox& b = box[k];
    umax[k] = cfg.u_max.cwiseMin(b.lo_hi.tail(n) + lam.lower).cwiseMax(0.0);
    StageBox nb;
    nb.up_lo = embedding::detail::decomposition(b.up_lo, b.lo_hi, zero, umax[k], lam.upper, hi, lo);
    nb.up_hi = embedding::detail::decomposition(b.up_hi, b.lo_lo, umax[k], zero, lam.upper, hi, lo);
    nb.lo_lo = embedding::detail::decomposition(b.lo_lo, b.up_hi, zero, umax[k], lam.lower, lo, hi);
    nb.lo_hi = embedding::detail::decomposition(b.lo_hi, b.up_lo, umax[k], zero, lam.lower, lo, hi);
    for (VectorXd* v : {&nb.up_lo, &nb.up_hi, &nb.lo_lo, &nb.lo_hi}) clamp_box(*v, jam);
    if (k + 1 == T) nb.up_hi = nb.up_hi.cwiseMin(cfg.terminal_upper);
    nb.lo_hi = nb.lo_hi.cwiseMin(nb.up_hi);
    nb.up_lo = nb.up_lo.cwiseMax(nb.lo_lo);
    if (((nb.up_lo - nb.up_hi).array() > 1e-9).any() || ((nb.lo_lo - nb.lo_hi).array() > 1e-9).any()) {
      P.trivially_infeasible = true;
      return P;
    }
    nb.up_lo = nb.up_lo.cwiseMin(nb.up_hi);
    nb.lo_lo = nb.lo_lo.cwiseMin(nb.lo_hi);
    box[k + 1] = std::move(nb);
  }

  milp::Model& m = P.model;
  P.x_up.resize(T + 1);
  P.x_lo.resize(T + 1);
  P.u.resize(T);
  for (int k = 0; k <= T; ++k) {
    for (Index j = 0; j < 2 * n; ++j) {
      P.x_up[k].push_back(m.add_var(box[k].up_lo[j], box[k].up_hi[j], milp::VarKind::Continuous, tag("xu", k, j)));
      P.x_lo[k].push_back(m.add_var(box[k].lo_lo[j], box[k].lo_hi[j], milp::VarKind::Continuous, tag("xl", k, j)));
    }
    if (k < T)
      for (Index i = 0; i < n; ++i)
        P.u[k].push_back(m.add_var(0, umax[k][i], milp::VarKind::Continuous, tag("u", k, i)));
  }
  {
    std::vector<std::pair<int, double>> fixed;
    for (Index j = 0; j < 2 * n; ++j) {
      fixed.emplace_back(P.x_up[0][j].id, s0.upper[j]);
      fixed.emplace_back(P.x_lo[0][j].id, s0.lower[j]);
    }
    m.add_definition([fixed](Eigen::VectorXd& x) {
      for (const auto& [id, v] : fixed) x[id] = v;
    });
  }
  const auto define_state = [&m](Var target, const LinExpr& e, const std::string& name) {
    m.add_constraint(target, Sense::Equal, e, name);
    m.add_definition([target, e](Eigen::VectorXd& x) { x[target.id] = milp::evaluate(e, x); });
  };

  LinExpr objective;
  P.stage_of_var.assign(m.num_vars(), 0);
  for (int k = 0; k < T; ++k) {
    P.stage_of_var.resize(m.num_vars(), k);
    const auto& xu = P.x_up[k];
    const auto& xl = P.x_lo[k];
    const auto& uk = P.u[k];
    if (P.aliased) {
      std::vector<Var> d(n);
      for (Index i = 0; i < n; ++i) {
        const auto drop = milp::encode_capacity_drop(m, xu[i], hi.c_max[i] / hi.v[i], hi.c_max[i],
                                                     hi.alpha[i] * hi.c_max[i], tag("xi", k, i), go);
        d[i] = milp::encode_min_equality(m, hi.v[i] * LinExpr(xu[i]), drop.capacity, tag("d", k, i),
                                         diag_up ? drop.full : std::nullopt, go);
      }
      std::vector<LinExpr> g(n);
      for (Index i = 0; i < n; ++i) {
        if (i + 1 < n) {
          const LinExpr s = hi.w[i + 1] / hi.beta[i] * (jam[i + 1] - LinExpr(xu[i + 1]));
          g[i] = milp::encode_min_equality(m, d[i], s, tag("f", k, i), std::nullopt, go);
        } else {
          g[i] = d[i];
        }
      }
      for (Index i = 0; i < n; ++i) {
        LinExpr next = LinExpr(xu[i]) + uk[i] - g[i];
        if (i > 0) next += hi.beta[i - 1] * g[i - 1];
        define_state(P.x_up[k + 1][i], next, tag("dyn_u", k, i));
        define_state(P.x_up[k + 1][n + i], LinExpr(xu[n + i]) - uk[i] + lam.upper[i], tag("dyn_ur", k, i));
        define_state(P.x_lo[k + 1][i], P.x_up[k + 1][i], tag("alias", k, i));
        define_state(P.x_lo[k + 1][n + i], P.x_up[k + 1][n + i], tag("alias_r", k, i));
      }
    } else {
      std::vector<Var> d_out_u(n), d_out_l(n), d_in_u(n), d_in_l(n);
      std::vector<LinExpr> xi_u(n), xi_l(n);
      for (Index i = 0; i < n; ++i) {
        // Upper component sees the pessimistic drop at the upper density.
        const auto du = milp::encode_capacity_drop(m, xu[i], lo.c_max[i] / hi.v[i], lo.c_max[i],
                                                   lo.alpha[i] * lo.c_max[i], tag("xiu", k, i), go);
        const auto dl = milp::encode_capacity_drop(m, xl[i], hi.c_max[i] / lo.v[i], hi.c_max[i],
                                                   hi.alpha[i] * hi.c_max[i], tag("xil", k, i), go);
        xi_u[i] = du.capacity;
        xi_l[i] = dl.capacity;
        d_out_u[i] = milp::encode_min_equality(m, lo.v[i] * LinExpr(xu[i]), xi_u[i], tag("dou", k, i),
                                               diag_up ? du.full : std::nullopt, go);
        d_out_l[i] = milp::encode_min_equality(m, hi.v[i] * LinExpr(xl[i]), xi_l[i], tag("dol", k, i),
                                               diag_lo ? dl.full : std::nullopt, go);
        if (i + 1 < n) {
          d_in_u[i] = milp::encode_min_equality(m, hi.v[i] * LinExpr(xu[i]), xi_l[i], tag("diu", k, i), std::nullopt, go);
          d_in_l[i] = milp::encode_min_equality(m, lo.v[i] * LinExpr(xl[i]), xi_u[i], tag("dil", k, i), std::nullopt, go);
        }
      }
      std::vector<LinExpr> g_out_u(n), g_out_l(n), g_in_u(n), g_in_l(n);
      for (Index i = 0; i < n; ++i) {
        if (i + 1 == n) {
          g_out_u[i] = d_out_u[i];
          g_out_l[i] = d_out_l[i];
          continue;
        }
        const LinExpr room_u = jam[i + 1] - LinExpr(xu[i + 1]);
        const LinExpr room_l = jam[i + 1] - LinExpr(xl[i + 1]);
        g_out_u[i] = milp::encode_min_equality(m, d_out_u[i], lo.w[i + 1] / hi.beta[i] * room_u, tag("gou", k, i),
                                               std::nullopt, go);
        g_out_l[i] = milp::encode_min_equality(m, d_out_l[i], hi.w[i + 1] / lo.beta[i] * room_l, tag("gol", k, i),
                                               std::nullopt, go);
        g_in_u[i + 1] = milp::encode_min_equality(m, d_in_u[i], hi.w[i + 1] / hi.beta[i] * room_u, tag("giu", k, i),
                                                  std::nullopt, go);
        g_in_l[i + 1] = milp::encode_min_equality(m, d_in_l[i], lo.w[i + 1] / lo.beta[i] * room_l, tag("gil", k, i),
                                                  std::nullopt, go);
      }
      for (Index i = 0; i < n; ++i) {
        LinExpr nu = LinExpr(xu[i]) + uk[i] - g_out_u[i];
        LinExpr nl = LinExpr(xl[i]) + uk[i] - g_out_l[i];
        if (i > 0) {
          nu += hi.beta[i - 1] * g_in_u[i];
          nl += lo.beta[i - 1] * g_in_l[i];
        }
        define_state(P.x_up[k + 1][i], nu, tag("dyn_u", k, i));
        define_state(P.x_lo[k + 1][i], nl, tag("dyn_l", k, i));
        define_state(P.x_up[k + 1][n + i], LinExpr(xu[n + i]) - uk[i] + lam.upper[i], tag("dyn_ur", k, i));
        define_state(P.x_lo[k + 1][n + i], LinExpr(xl[n + i]) - uk[i] + lam.lower[i], tag("dyn_lr", k, i));
      }
      for (Index j = 0; j < 2 * n; ++j)
        m.add_constraint(P.x_lo[k + 1][j], Sense::LessEqual, P.x_up[k + 1][j], tag("order", k + 1, j));
    }

    LinExpr stage;
    for (Index j = 0; j < 2 * n; ++j) stage += cfg.stage_weight[j] * LinExpr(xu[j]);
    if (cfg.mode == CostMode::Linear) {
      objective += stage;
      continue;
    }
    // Indicator cost: charged unless the upper state is in the terminal box.
    bool always_in = true, never_in = false;
    for (Index j = 0; j < 2 * n; ++j) {
      if (!std::isfinite(cfg.terminal_upper[j])) continue;
      always_in = always_in && box[k].up_hi[j] <= cfg.terminal_upper[j];
      never_in = never_in || box[k].up_lo[j] > cfg.terminal_upper[j];
    }
    if (cfg.eliminate_redundant && always_in) continue;
    if (cfg.eliminate_redundant && never_in) {
      objective += stage;
      continue;
    }
    const double big = std::max(m.range(stage).upper, 0.0);
    const Var q = m.add_binary(tag("inside", k, 0));
    const Var c = m.add_var(0, big, milp::VarKind::Continuous, tag("cost", k, 0));
    m.add_constraint(c, Sense::GreaterEqual, stage - big * LinExpr(q), tag("cost_ge", k, 0));
    std::vector<std::pair<int, double>> caps;
    for (Index j = 0; j < 2 * n; ++j) {
      if (!std::isfinite(cfg.terminal_upper[j])) continue;
      milp::encode_indicator_le(m, q, xu[j], cfg.terminal_upper[j], tag("inside_le", k, j));
      caps.emplace_back(xu[j].id, cfg.terminal_upper[j]);
    }
    m.add_definition([q, c, caps, stage](Eigen::VectorXd& x) {
      bool in = true;
      for (const auto& [id, cap] : caps) in = in && x[id] <= cap;
      x[q.id] = in ? 1.0 : 0.0;
      x[c.id] = in ? 0.0 : std::max(0.0, milp::evaluate(stage, x));
    });
    objective += c;
  }
  if (cfg.mode == CostMode::Linear)
    for (Index j = 0; j < 2 * n; ++j) objective += cfg.terminal_weight[j] * LinExpr(P.x_up[T][j]);
  P.stage_of_var.resize(m.num_vars(), T);
  m.set_objective(objective);
  return P;
}

MpcResult solve_mpc(const LiftedState<double>& x0, const DemandBounds<double>& lambda,
                    const ParamBounds<double>& theta, const MpcConfig& cfg,
                    const std::vector<std::vector<VectorXd>>& hints) {
  const MpcProblem P = build_problem(x0, lambda, theta, cfg);
  MpcResult res;
  if (P.trivially_infeasible) return res;
  res.binaries = P.model.num_binaries();

  milp::MilpOptions opts = cfg.solver;
  const Index n = P.cells;
  std::vector<std::vector<VectorXd>> candidates = hints;
  candidates.emplace_back(P.horizon, VectorXd::Zero(n));
  candidates.emplace_back(P.horizon, lambda.lower.cwiseMin(cfg.u_max));
  if (cfg.constructive_starts)
    for (auto& r : hold_fill_rollouts(x0, lambda, theta, cfg, P.horizon))
      if (r.entry >= 0) candidates.push_back(std::move(r.controls));
  for (const auto& c : candidates)
    if (auto x = P.complete(c)) opts.starts.push_back(std::move(*x));
  if (cfg.stage_ordered_branching) opts.priority = P.stage_of_var;
  opts.heuristic = [&P](const VectorXd& lp_x) { return P.complete(P.controls(lp_x)); };

  const milp::MilpResult r = milp::solve_milp(P.model, opts);
  res.status = r.status;
  res.nodes = r.nodes;
  res.seconds = r.seconds;
  res.bound = r.best_bound;
  if (!r.has_solution) return res;
  res.feasible = true;
  res.value = r.objective;
  res.plan = P.controls(r.x);
  res.u0 = res.plan.front();
  for (int k = 0; k <= P.horizon; ++k) res.predicted.push_back(P.state(r.x, k));
  return res;
}

}  // namespace ramp::mpc
