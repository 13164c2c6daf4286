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
#include <limits>
#include <tuple>

#include "ramp/mpc.hpp"

namespace ramp::mpc {

namespace {

bool inside(const LiftedState<double>& s, const VectorXd& cap) {
  return (s.upper.array() <= cap.array() + kStateTol).all();
}

}  // namespace

Rollout hold_fill_rollout(const LiftedState<double>& x0, const DemandBounds<double>& lam,
                          const ParamBounds<double>& th, const MpcConfig& cfg, const std::vector<bool>& hold,
                          double fill, int steps) {
  const Index n = th.upper.cells();
  if (static_cast<Index>(hold.size()) != n || cfg.u_max.size() != n || cfg.terminal_upper.size() != 2 * n ||
      cfg.stage_weight.size() != 2 * n)
    throw DomainError("hold_fill_rollout: dimension mismatch");
  // Smallest critical density over the parameter box.
  const VectorXd crit = th.lower.c_max.cwiseQuotient(th.upper.v);
  const VectorXd zero = VectorXd::Zero(n);
  Rollout r{{}, hold, fill, -1, 0};
  LiftedState<double> s = embedding::clamp_to_state_space(x0, th.upper.x_jam);
  for (int k = 0; k < steps; ++k) {
    if (r.entry < 0 && inside(s, cfg.terminal_upper)) r.entry = k;
    r.cost += cfg.stage_weight.dot(s.upper);
    const bool congested = (s.upper.head(n).array() > crit.array()).any();
    const LiftedState<double> pre = embedding::lifted_step(s, zero, lam, th);
    VectorXd u(n);
    for (Index i = 0; i < n; ++i) {
      const double avail = std::min(cfg.u_max[i], s.lower[n + i] + lam.lower[i]);
      u[i] = congested && hold[i] ? 0.0 : std::clamp(fill * crit[i] - pre.upper[i], 0.0, std::max(avail, 0.0));
    }
    r.controls.push_back(u);
    s = embedding::lifted_step(s, u, lam, th);
  }
  if (r.entry < 0 && inside(s, cfg.terminal_upper)) r.entry = steps;
  return r;
}

std::vector<Rollout> hold_fill_rollouts(const LiftedState<double>& x0, const DemandBounds<double>& lam,
                                        const ParamBounds<double>& th, const MpcConfig& cfg, int steps) {
  const Index n = th.upper.cells();
  std::vector<std::vector<bool>> masks;
  if (n <= 8) {
    for (unsigned bits = 0; bits < (1u << n); ++bits) {
      std::vector<bool> m(n);
      for (Index i = 0; i < n; ++i) m[i] = (bits >> i) & 1u;
      masks.push_back(std::move(m));
    }
  } else {
    masks = {std::vector<bool>(n, false), std::vector<bool>(n, true)};
  }
  std::vector<Rollout> out;
  for (const auto& m : masks)
    for (double fill : {1.0, 0.99, 0.975}) out.push_back(hold_fill_rollout(x0, lam, th, cfg, m, fill, steps));
  const auto key = [](const Rollout& r) {
    return std::make_tuple(r.entry < 0 ? std::numeric_limits<int>::max() : r.entry, r.cost);
  };
  std::stable_sort(out.begin(), out.end(), [&](const Rollout& a, const Rollout& b) { return key(a) < key(b); });
  return out;
}

}  // namespace ramp::mpc
