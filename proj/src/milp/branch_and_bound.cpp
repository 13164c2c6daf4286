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
#include "ramp/milp/branch_and_bound.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <queue>
#include <tuple>

#include "ramp/types.hpp"

namespace ramp::milp {

const char* to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::Optimal: return "optimal";
    case MilpStatus::Infeasible: return "infeasible";
    case MilpStatus::Unbounded: return "unbounded";
    case MilpStatus::BudgetExhausted: return "budget_exhausted";
  }
  return "unknown";
}

namespace {

using Eigen::VectorXd;

SimplexSolver make_solver(const Model& m, const LpOptions& o) {
  std::vector<Eigen::Triplet<double>> trip;
  VectorXd lo(m.num_rows()), hi(m.num_rows());
  for (int r = 0; r < m.num_rows(); ++r) {
    const Row& row = m.rows()[r];
    for (std::size_t k = 0; k < row.idx.size(); ++k) trip.emplace_back(r, row.idx[k], row.val[k]);
    lo[r] = row.sense == Sense::LessEqual ? -kInf : row.rhs;
    hi[r] = row.sense == Sense::GreaterEqual ? kInf : row.rhs;
  }
  Eigen::SparseMatrix<double> a(m.num_rows(), m.num_vars());
  a.setFromTriplets(trip.begin(), trip.end());
  return SimplexSolver(std::move(a), m.objective(), std::move(lo), std::move(hi), o);
}

struct BoundChange {
  int var;
  double lo, hi;
};

struct Node {
  std::vector<BoundChange> changes;
  double bound;
  long id;
  std::shared_ptr<const Basis> basis;
};

struct WorseBound {
  bool operator()(const Node& a, const Node& b) const {
    return std::tie(a.bound, a.id) > std::tie(b.bound, b.id);
  }
};

}  // namespace

LpResult solve_relaxation(const Model& model, const LpOptions& opts) {
  const SimplexSolver lp = make_solver(model, opts);
  VectorXd lo(model.num_vars()), hi(model.num_vars());
  for (int j = 0; j < model.num_vars(); ++j) {
    lo[j] = model.vars()[j].lower;
    hi[j] = model.vars()[j].upper;
  }
  return lp.solve(lo, hi);
}

MilpResult solve_milp(const Model& model, const MilpOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  const SimplexSolver lp = make_solver(model, opts.lp);
  const int n = model.num_vars();
  VectorXd root_lo(n), root_hi(n);
  std::vector<int> binaries;
  for (int j = 0; j < n; ++j) {
    root_lo[j] = model.vars()[j].lower;
    root_hi[j] = model.vars()[j].upper;
    if (model.vars()[j].kind == VarKind::Binary) binaries.push_back(j);
  }
  const double c0 = model.objective_constant();
  if (!opts.priority.empty() && static_cast<int>(opts.priority.size()) != n)
    throw DomainError("solve_milp: priority vector has wrong size");

  MilpResult res;
  const auto gap_tol = [&] { return std::max(opts.abs_gap, opts.rel_gap * std::abs(res.objective)); };
  const auto offer = [&](VectorXd cand) {
    if (cand.size() != n) return;
    for (int j : binaries) cand[j] = std::round(cand[j]);
    if (model.max_violation(cand) > opts.feas_tol) return;
    const double obj = model.objective_value(cand);
    if (!res.has_solution || obj < res.objective - 1e-12) {
      res.has_solution = true;
      res.objective = obj;
      res.x = std::move(cand);
    }
  };
  for (const auto& s : opts.starts) offer(s);

  std::priority_queue<Node, std::vector<Node>, WorseBound> open;
  std::optional<Node> next = Node{{}, -kInf, 0, nullptr};
  long next_id = 1;
  bool incomplete = false;
  double pruned_floor = kInf;  // smallest bound among nodes dropped without proof
  VectorXd lo, hi;

  while (next || !open.empty()) {
    if (!next) {
      next = open.top();
      open.pop();
    }
    Node node = std::move(*next);
    next.reset();
    if (res.has_solution && node.bound >= res.objective - c0 - gap_tol()) continue;
    if (res.nodes >= opts.node_limit || (opts.time_limit_s >= 0 && elapsed() > opts.time_limit_s)) {
      open.push(std::move(node));
      incomplete = true;
      break;
    }
    ++res.nodes;
    lo = root_lo;
    hi = root_hi;
    for (const auto& c : node.changes) {
      lo[c.var] = c.lo;
      hi[c.var] = c.hi;
    }
    LpResult r;
    try {
      r = lp.solve(lo, hi, node.basis.get());
    } catch (const NumericalError&) {
      // Unresolved node: its bound stays open.
      incomplete = true;
      pruned_floor = std::min(pruned_floor, node.bound);
      continue;
    }
    res.lp_iterations += r.iterations;
    if (r.status == LpStatus::Unbounded && node.changes.empty()) {
      res.status = MilpStatus::Unbounded;
      res.seconds = elapsed();
      return res;
    }
    if (r.status == LpStatus::Infeasible) continue;
    if (r.status != LpStatus::Optimal) {
      incomplete = true;
      pruned_floor = std::min(pruned_floor, node.bound);
      continue;
    }
    const double bound = std::max(r.objective, node.bound);
    if (res.has_solution && bound >= res.objective - c0 - gap_tol()) continue;
    if (opts.heuristic)
      if (auto cand = opts.heuristic(r.x)) offer(std::move(*cand));

    int branch = -1, class_best = 0;
    double frac_best = 0;
    for (int j : binaries) {
      const double f = std::abs(r.x[j] - std::round(r.x[j]));
      if (f <= opts.int_tol) continue;
      const int cls = opts.priority.empty() ? 0 : opts.priority[j];
      if (branch < 0 || cls < class_best || (cls == class_best && f > frac_best + 1e-12)) {
        branch = j;
        class_best = cls;
        frac_best = f;
      }
    }
    if (branch < 0) {
      VectorXd cand = r.x;
      for (int j : binaries) cand[j] = std::round(cand[j]);
      if (model.max_violation(cand) <= opts.feas_tol) {
        offer(std::move(cand));
        continue;
      }
      // Rounding broke a row: settle the continuous part with binaries fixed.
      VectorXd flo = lo, fhi = hi;
      for (int j : binaries) flo[j] = fhi[j] = cand[j];
      bool unresolved = false;
      try {
        LpResult fixed = lp.solve(flo, fhi, &r.basis);
        res.lp_iterations += fixed.iterations;
        if (fixed.status == LpStatus::Optimal) {
          offer(fixed.x);
        } else if (fixed.status != LpStatus::Infeasible) {
          unresolved = true;
        }
      } catch (const NumericalError&) {
        unresolved = true;
      }
      // Otherwise the tolerance hid a fraction the big-M rows depend on.
      for (int j : binaries) {
        const double f = std::abs(r.x[j] - std::round(r.x[j]));
        if (lo[j] < hi[j] && f > 0 && f > frac_best) {
          branch = j;
          frac_best = f;
        }
      }
      if (branch < 0) {
        if (unresolved) {
          incomplete = true;
          pruned_floor = std::min(pruned_floor, node.bound);
        }
        continue;
      }
    }

    auto basis = std::make_shared<const Basis>(std::move(r.basis));
    Node down{node.changes, bound, next_id++, basis};
    down.changes.push_back({branch, lo[branch], 0.0});
    Node up{std::move(node.changes), bound, next_id++, basis};
    up.changes.push_back({branch, 1.0, hi[branch]});
    if (r.x[branch] >= 0.5) {
      next = std::move(up);
      open.push(std::move(down));
    } else {
      next = std::move(down);
      open.push(std::move(up));
    }
  }

  double floor = pruned_floor;
  if (next) floor = std::min(floor, next->bound);
  if (!open.empty()) floor = std::min(floor, open.top().bound);
  res.seconds = elapsed();
  if (res.has_solution) {
    res.best_bound = std::min(res.objective, std::isfinite(floor) ? floor + c0 : res.objective);
    if (!open.empty() && std::isinf(open.top().bound)) res.best_bound = -kInf;
    res.status = (!incomplete || res.objective - res.best_bound <= gap_tol()) ? MilpStatus::Optimal
                                                                              : MilpStatus::BudgetExhausted;
  } else {
    res.best_bound = std::isfinite(floor) ? floor + c0 : (incomplete ? -kInf : kInf);
    res.status = incomplete ? MilpStatus::BudgetExhausted : MilpStatus::Infeasible;
  }
  return res;
}

}  // namespace ramp::milp
