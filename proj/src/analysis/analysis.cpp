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
#include "ramp/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "ramp/types.hpp"

namespace ramp::analysis {

namespace {

void record(CheckReport& r, double margin, int t) {
  ++r.checked;
  if (margin < r.min_margin) {
    r.min_margin = margin;
    r.worst_step = t;
  }
  if (margin < 0) r.ok = false;
}

bool solved(const StepRecord& s) { return s.phase == Phase::Mpc && s.feasible && std::isfinite(s.value); }

double gap(const StepRecord& s) { return std::isfinite(s.bound) ? std::max(0.0, s.value - s.bound) : 0.0; }

std::size_t first_active(const TrajectoryLog& log) {
  std::size_t k = 0;
  while (k < log.steps.size() && log.steps[k].phase == Phase::Warmup) ++k;
  return k;
}

// min(b - a); +inf for empty vectors such as the split ratios of one cell.
double below(const VectorXd& a, const VectorXd& b) {
  return a.size() == 0 ? std::numeric_limits<double>::infinity() : (b - a).minCoeff();
}

}  // namespace

IssConstants iss_constants(const VectorXd& l, const VectorXd& b, const VectorXd& d, int horizon) {
  if (l.size() == 0 || b.size() == 0 || d.size() == 0) throw DomainError("iss_constants: empty weight");
  if (horizon < 1) throw DomainError("iss_constants: horizon must be positive");
  if (l.minCoeff() <= 0) throw DomainError("iss_constants: stage weight must be positive");
  if (b.minCoeff() < 0 || d.minCoeff() < 0) throw DomainError("iss_constants: weights must be nonnegative");
  IssConstants k;
  k.a1 = l.minCoeff();
  k.a2 = (horizon + 1) * std::max(l.maxCoeff(), b.maxCoeff());
  k.a3 = d.maxCoeff();
  k.rho = 1 - k.a1 / k.a2;
  if (!(k.rho > 0 && k.rho < 1)) throw InvariantError("iss_constants: contraction rate outside (0, 1)");
  return k;
}

CheckReport verify_iss_bound(const TrajectoryLog& log, const IssConstants& k) {
  CheckReport r;
  const std::size_t t0 = first_active(log);
  if (t0 >= log.steps.size()) return r;
  double lam = 0;
  for (std::size_t s = t0; s < log.steps.size(); ++s) lam = std::max(lam, log.steps[s].lambda.lpNorm<1>());
  const double x0 = log.steps[t0].estimate.upper.lpNorm<1>();
  const double offset = k.input_gain() * lam;
  for (std::size_t s = t0; s < log.steps.size(); ++s) {
    const auto& st = log.steps[s];
    const double rhs = k.state_gain() * std::pow(k.rho, double(s - t0)) * x0 + offset;
    record(r, rhs - st.x.lpNorm<1>(), st.t);
  }
  return r;
}

CheckReport lyapunov_decrease_check(const TrajectoryLog& log, const VectorXd& l, const VectorXd& d, double tol) {
  CheckReport r;
  for (std::size_t s = 0; s + 1 < log.steps.size(); ++s) {
    const auto& a = log.steps[s];
    const auto& b = log.steps[s + 1];
    if (!solved(a) || !solved(b)) continue;
    double residual = b.value - a.value + l.dot(a.estimate.upper);
    if (d.size() > 0) residual -= d.dot(a.lambda);
    record(r, gap(a) + gap(b) + tol - residual, a.t);
  }
  if (r.checked == 0) r.detail = "no consecutive solved MPC steps";
  return r;
}

CheckReport value_function_bounds_check(const TrajectoryLog& log, const IssConstants& k, double tol) {
  CheckReport r;
  for (const auto& s : log.steps) {
    if (!solved(s)) continue;
    const double x = s.estimate.upper.lpNorm<1>();
    const double lo = k.a1 * x - gap(s) - tol;
    const double hi = k.a2 * (x + s.lambda.lpNorm<1>()) + tol;
    record(r, std::min(s.value - lo, hi - s.value), s.t);
  }
  return r;
}

CheckReport containment_check(const TrajectoryLog& log, const ctm::FreewayParams<double>& truth, double tol) {
  CheckReport r;
  const StepRecord* prev = nullptr;
  for (const auto& s : log.steps) {
    double m = std::min(below(s.x, s.estimate.upper), below(s.estimate.lower, s.x));
    m = std::min({m, below(s.lambda, s.demand.upper), below(s.demand.lower, s.lambda)});
    for (const auto& [name, field] : ctm::param_fields<double>()) {
      (void)name;
      m = std::min({m, below(truth.*field, s.theta.upper.*field), below(s.theta.lower.*field, truth.*field)});
      if (prev) {
        m = std::min({m, below(s.theta.upper.*field, prev->theta.upper.*field),
                      below(prev->theta.lower.*field, s.theta.lower.*field)});
      }
    }
    record(r, m + tol, s.t);
    prev = &s;
  }
  return r;
}

int time_to_terminal(const TrajectoryLog& log, const VectorXd& terminal_upper, double tol) {
  for (const auto& s : log.steps)
    if (((s.estimate.upper - terminal_upper).array() <= tol).all()) return s.t;
  return -1;
}

}  // namespace ramp::analysis
