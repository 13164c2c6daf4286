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
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ramp/estimators.hpp"

namespace ramp::estimators {

using Eigen::VectorXd;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMinDensity = 1e-9;  // readings at or below this carry no speed information

void check_freeflow(Index i, double v, const std::optional<double>& beta) {
  if (!(v > 0 && v <= 1 + 1e-12))
    throw DomainError("readings of cell " + std::to_string(i + 1) + " imply v = " + std::to_string(v) +
                      ", not a free-flow trajectory");
  if (beta && !(*beta > 0 && *beta < 1 + 1e-12))
    throw DomainError("readings of cell " + std::to_string(i + 1) + " imply beta = " + std::to_string(*beta) +
                      ", not a free-flow trajectory");
}

}  // namespace

const char* to_string(CellStatus s) {
  switch (s) {
    case CellStatus::Identified: return "identified";
    case CellStatus::Unmeasured: return "unmeasured";
    case CellStatus::RankDeficient: return "rank_deficient";
    case CellStatus::Degenerate: return "degenerate";
    case CellStatus::UpstreamMissing: return "upstream_missing";
  }
  return "unknown";
}

CellEstimate freeflow_identify(Index i, const std::array<VectorXd, 3>& x, const std::array<VectorXd, 2>& r,
                               double upstream_v, double rank_tol) {
  const Index n = x[0].size();
  if (i < 0 || i >= n || x[1].size() != n || x[2].size() != n || r[0].size() != n || r[1].size() != n)
    throw DomainError("freeflow_identify: bad cell index or dimensions");
  if (x[0][i] <= kMinDensity || x[1][i] <= kMinDensity)
    throw DomainError("freeflow_identify: cell " + std::to_string(i + 1) + " is empty");
  CellEstimate out;
  if (i == 0) {
    // x' = (1 - v) x + r
    out.v = (x[0][0] + r[0][0] - x[1][0]) / x[0][0];
    check_freeflow(i, out.v, out.beta);
    return out;
  }
  // [v_up x_up(t)   -x(t)  ] [beta]   [x(t+1) - x(t) - r(t)    ]
  // [v_up x_up(t+1) -x(t+1)] [v   ] = [x(t+2) - x(t+1) - r(t+1)]
  Eigen::Matrix2d a;
  Eigen::Vector2d rhs;
  for (int k = 0; k < 2; ++k) {
    a(k, 0) = upstream_v * x[k][i - 1];
    a(k, 1) = -x[k][i];
    rhs[k] = x[k + 1][i] - x[k][i] - r[k][i];
  }
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const double scale = a.row(0).norm() * a.row(1).norm();
  if (!(scale > 0) || std::abs(det) < rank_tol * scale)
    throw RankDeficient("cell " + std::to_string(i + 1) + ": upstream and local densities evolve proportionally");
  out.beta = (rhs[0] * a(1, 1) - a(0, 1) * rhs[1]) / det;
  out.v = (a(0, 0) * rhs[1] - a(1, 0) * rhs[0]) / det;
  check_freeflow(i, out.v, out.beta);
  return out;
}

bool SweepResult::complete() const {
  for (CellStatus s : status)
    if (s != CellStatus::Identified) return false;
  return true;
}

SweepResult full_identify_sweep(const std::array<VectorXd, 3>& x, const std::array<VectorXd, 2>& r,
                                const ArrayXb& measured, double rank_tol) {
  const Index n = measured.size();
  SweepResult res{VectorXd::Constant(n, kNaN), VectorXd::Constant(std::max<Index>(n - 1, 0), kNaN),
                  std::vector<CellStatus>(n, CellStatus::Unmeasured)};
  for (Index i = 0; i < n; ++i) {
    if (!measured[i]) continue;
    if (i > 0 && (!measured[i - 1] || res.status[i - 1] != CellStatus::Identified)) {
      res.status[i] = CellStatus::UpstreamMissing;
      continue;
    }
    if (x[0][i] <= kMinDensity || x[1][i] <= kMinDensity || (i > 0 && x[0][i - 1] <= kMinDensity)) {
      res.status[i] = CellStatus::Degenerate;
      continue;
    }
    try {
      const CellEstimate e = freeflow_identify(i, x, r, i > 0 ? res.v[i - 1] : 0.0, rank_tol);
      res.v[i] = e.v;
      if (e.beta) res.beta[i - 1] = *e.beta;
      res.status[i] = CellStatus::Identified;
    } catch (const RankDeficient&) {
      res.status[i] = CellStatus::RankDeficient;
    } catch (const DomainError&) {
      res.status[i] = CellStatus::Degenerate;
    }
  }
  return res;
}

int collapse_identified(ParamBounds<double>& theta, const SweepResult& s, double tol) {
  int collapsed = 0;
  const auto pin = [&](double& hi, double& lo, double value) {
    if (std::isnan(value) || value > hi + tol || value < lo - tol) return;
    value = std::clamp(value, lo, hi);
    if (hi == value && lo == value) return;
    hi = lo = value;
    ++collapsed;
  };
  for (Index i = 0; i < s.v.size(); ++i) pin(theta.upper.v[i], theta.lower.v[i], s.v[i]);
  for (Index i = 0; i < s.beta.size(); ++i) pin(theta.upper.beta[i], theta.lower.beta[i], s.beta[i]);
  return collapsed;
}

}  // namespace ramp::estimators
