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
#include <climits>
#include <cmath>
#include <random>

#include "ramp/mpc.hpp"

namespace ramp::mpc {

VectorXd compute_xup(const FreewayParams<double>& p, const VectorXd& lambda) {
  p.validate();
  const VectorXd unc = ctm::equilibrium_uncongested(p, lambda);
  const VectorXd crit = p.critical_density();
  const Index n = p.cells();
  VectorXd up(n);
  up[n - 1] = crit[n - 1];
  for (Index i = n - 2; i >= 0; --i)
    up[i] = std::min(crit[i], unc[i] + (up[i + 1] - unc[i + 1]) * p.v[i + 1] / (p.beta[i] * p.v[i]));
  return up;
}

VectorXd choose_terminal_weights(const FreewayParams<double>& p, const VectorXd& stage_weight,
                                 const VectorXd& ramp_weight) {
  const Index n = p.cells();
  if (stage_weight.size() != 2 * n) throw DomainError("choose_terminal_weights: stage weight must have size 2I");
  if ((stage_weight.array() < 0).any()) throw DomainError("choose_terminal_weights: negative stage weight");
  VectorXd b(2 * n);
  for (Index i = n - 1; i >= 0; --i)
    b[i] = stage_weight[i] / p.v[i] + (i + 1 < n ? p.beta[i] * b[i + 1] : 0.0);
  if (ramp_weight.size() == 0) {
    b.tail(n).setOnes();
  } else {
    if (ramp_weight.size() != n) throw DomainError("choose_terminal_weights: ramp weight must have size I");
    b.tail(n) = ramp_weight;
  }
  return b;
}

double terminal_lyapunov_residual(const FreewayParams<double>& p, const VectorXd& lambda, const VectorXd& l,
                                  const VectorXd& b, const VectorXd& xf, const VectorXd& d, int samples,
                                  unsigned seed) {
  const Index n = p.cells();
  if (lambda.size() != n || l.size() != 2 * n || b.size() != 2 * n || xf.size() != n || d.size() != n)
    throw DomainError("terminal_lyapunov_residual: dimension mismatch");
  const auto residual = [&](const VectorXd& xm) {
    VectorXd x = VectorXd::Zero(2 * n);
    x.head(n) = xm;
    const VectorXd next = ctm::detail::compact_dynamics(p, x, lambda, lambda);
    return b.dot(next) - b.dot(x) + l.dot(x) - d.dot(lambda);
  };
  double worst = -milp::kInf;
  for (long mask = 0; mask < (1L << n); ++mask) {
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = (mask >> i) & 1 ? xf[i] : 0.0;
    worst = std::max(worst, residual(v));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < samples; ++s) {
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = unit(rng) * xf[i];
    worst = std::max(worst, residual(v));
  }
  return worst;
}

int min_drain_steps(const FreewayParams<double>& p, const VectorXd& x, const VectorXd& lambda,
                    const VectorXd& terminal_upper) {
  const Index n = p.cells();
  if (!terminal_upper.allFinite()) return 0;
  const double excess = x.sum() - terminal_upper.sum();
  if (excess <= 0) return 0;
  double exits = p.c_max[n - 1];
  for (Index i = 0; i + 1 < n; ++i) exits += (1 - p.beta[i]) * p.c_max[i];
  const double net = exits - lambda.sum();
  if (net <= 0) return INT_MAX;
  return static_cast<int>(std::ceil(excess / net));
}

}  // namespace ramp::mpc
