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

// Mixed-monotone decomposition of the compact plant and the lifted system it
// defines. A lifted state carries an upper and a lower bound on the true state;
// parameters and demands carry boxes in the same [upper, lower] order.
//
// The decomposition is nondecreasing in every upper argument and nonincreasing
// in every lower argument (given v_lower + w_upper <= 1 per cell), and equals
// the compact plant when upper == lower.

#include <algorithm>
#include <string>

#include "ramp/ctm.hpp"

namespace ramp::embedding {

using ctm::FreewayParams;

template <typename Scalar = double>
struct LiftedState {
  Vector<Scalar> upper;
  Vector<Scalar> lower;

  static LiftedState point(const Vector<Scalar>& x) { return {x, x}; }
  LiftedState swapped() const { return {lower, upper}; }
  bool contains(const Vector<Scalar>& x, Scalar tol = 0) const {
    return ((x - upper).array() <= tol).all() && ((lower - x).array() <= tol).all();
  }
  bool is_point() const { return upper == lower; }
  Vector<Scalar> width() const { return upper - lower; }
};

template <typename Scalar = double>
struct DemandBounds {
  Vector<Scalar> upper;
  Vector<Scalar> lower;

  static DemandBounds point(const Vector<Scalar>& l) { return {l, l}; }
  bool is_point() const { return upper == lower; }
};

template <typename Scalar = double>
struct ParamBounds {
  FreewayParams<Scalar> upper;
  FreewayParams<Scalar> lower;

  static ParamBounds point(const FreewayParams<Scalar>& p) { return {p, p}; }

  bool is_point() const {
    return upper.beta == lower.beta && upper.v == lower.v && upper.w == lower.w &&
           upper.x_jam == lower.x_jam && upper.c_max == lower.c_max && upper.alpha == lower.alpha;
  }

  void validate() const {
    upper.validate_shape();
    lower.validate_shape();
    if (upper.cells() != lower.cells()) throw DomainError("parameter box ends differ in size");
    const auto ordered = [](const Vector<Scalar>& hi, const Vector<Scalar>& lo) {
      return ((hi - lo).array() >= 0).all();
    };
    if (!ordered(upper.beta, lower.beta) || !ordered(upper.v, lower.v) || !ordered(upper.w, lower.w) ||
        !ordered(upper.x_jam, lower.x_jam) || !ordered(upper.c_max, lower.c_max) ||
        !ordered(upper.alpha, lower.alpha))
      throw DomainError("parameter box has lower end above upper end");
  }

  bool contains(const FreewayParams<Scalar>& p) const {
    const auto in = [](const Vector<Scalar>& x, const Vector<Scalar>& hi, const Vector<Scalar>& lo) {
      return ((x - hi).array() <= 0).all() && ((lo - x).array() <= 0).all();
    };
    return in(p.beta, upper.beta, lower.beta) && in(p.v, upper.v, lower.v) && in(p.w, upper.w, lower.w) &&
           in(p.x_jam, upper.x_jam, lower.x_jam) && in(p.c_max, upper.c_max, lower.c_max) &&
           in(p.alpha, upper.alpha, lower.alpha);
  }
};

// Demand min{v x, xi(z)} where the capacity and drop come from `theta` and the
// drop threshold c_max / v uses the speed from `theta_t`.
template <typename Scalar>
inline Scalar tilde_demand(const FreewayParams<Scalar>& theta, const FreewayParams<Scalar>& theta_t,
                           Index i, Scalar x, Scalar z) {
  const Scalar xi = z <= theta.c_max[i] / theta_t.v[i] ? theta.c_max[i] : theta.alpha[i] * theta.c_max[i];
  return std::min<Scalar>(theta.v[i] * x, xi);
}

// Supply of cell i >= 1 with wave speed, jam density and upstream capacity from
// `theta` and the split ratio from `theta_t`. Clipped at zero.
template <typename Scalar>
inline Scalar tilde_supply(const FreewayParams<Scalar>& theta, const FreewayParams<Scalar>& theta_t,
                           Index i, Scalar x) {
  if (i < 1 || i >= theta.cells()) throw DomainError("tilde_supply is defined for cells 2..I");
  const Scalar s = std::min<Scalar>(theta.w[i] / theta_t.beta[i - 1] * (theta.x_jam[i] - x), theta.c_max[i - 1]);
  return std::max<Scalar>(0, s);
}

namespace detail {

// F with separate mainline entry (`enter`) and ramp release (`release`)
// vectors. Both equal the metering rate in the compact model.
template <typename Scalar>
Vector<Scalar> decomposition(const Vector<Scalar>& x, const Vector<Scalar>& z, const Vector<Scalar>& enter,
                             const Vector<Scalar>& release, const Vector<Scalar>& lambda,
                             const FreewayParams<Scalar>& theta, const FreewayParams<Scalar>& eta) {
  const Index n = theta.cells();
  Vector<Scalar> out(2 * n);
  // Terms are added in the order used by the compact dynamics so that the
  // diagonal agrees with it bit for bit.
  for (Index i = 0; i < n; ++i) {
    Scalar inflow = 0;
    if (i > 0)
      inflow = theta.beta[i - 1] *
               std::min(tilde_demand(theta, eta, i - 1, x[i - 1], z[i - 1]), tilde_supply(theta, theta, i, x[i]));
    Scalar fout = tilde_demand(eta, theta, i, x[i], x[i]);
    if (i + 1 < n) fout = std::min(fout, tilde_supply(eta, theta, i + 1, x[i + 1]));
    out[i] = x[i] + inflow - fout + enter[i];
    out[n + i] = x[n + i] - release[i] + lambda[i];
  }
  return out;
}

template <typename Scalar>
void check_dims(const FreewayParams<Scalar>& p, const Vector<Scalar>& a, const Vector<Scalar>& b,
                const Vector<Scalar>& u, const Vector<Scalar>& l1, const Vector<Scalar>& l2) {
  const Index n = p.cells();
  if (a.size() != 2 * n || b.size() != 2 * n || u.size() != n || l1.size() != n || l2.size() != n)
    throw DomainError("embedding: dimension mismatch");
}

}  // namespace detail

// Upper component of the decomposition function. The lower component is the
// same call with every [upper, lower] pair swapped.
template <typename Scalar>
Vector<Scalar> decomposition_F(const Vector<Scalar>& x, const Vector<Scalar>& z, const Vector<Scalar>& u,
                               const Vector<Scalar>& lambda, const Vector<Scalar>& phi,
                               const FreewayParams<Scalar>& theta, const FreewayParams<Scalar>& eta) {
  detail::check_dims(theta, x, z, u, lambda, phi);
  return detail::decomposition(x, z, u, u, lambda, theta, eta);
}

template <typename Scalar>
LiftedState<Scalar> clamp_to_state_space(LiftedState<Scalar> s, const Vector<Scalar>& x_jam) {
  const Index n = x_jam.size();
  for (Index i = 0; i < n; ++i) {
    s.upper[i] = std::clamp<Scalar>(s.upper[i], 0, x_jam[i]);
    s.lower[i] = std::clamp<Scalar>(s.lower[i], 0, x_jam[i]);
    s.upper[n + i] = std::max<Scalar>(s.upper[n + i], 0);
    s.lower[n + i] = std::max<Scalar>(s.lower[n + i], 0);
  }
  for (Index j = 0; j < 2 * n; ++j)
    if (s.lower[j] > s.upper[j] + kStateTol)
      throw InvariantError("lifted state lost its ordering at entry " + std::to_string(j + 1));
  s.lower = s.lower.cwiseMin(s.upper);
  return s;
}

// One step of the lifted system. Assumes every ramp releases exactly u.
template <typename Scalar>
LiftedState<Scalar> lifted_step(const LiftedState<Scalar>& s, const Vector<Scalar>& u,
                                const DemandBounds<Scalar>& lam, const ParamBounds<Scalar>& th) {
  detail::check_dims(th.upper, s.upper, s.lower, u, lam.upper, lam.lower);
  LiftedState<Scalar> next;
  if (s.is_point() && lam.is_point() && th.is_point()) {
    next.upper = ctm::detail::compact_dynamics(th.upper, s.upper, u, lam.upper);
    next.lower = next.upper;
  } else {
    next.upper = detail::decomposition(s.upper, s.lower, u, u, lam.upper, th.upper, th.lower);
    next.lower = detail::decomposition(s.lower, s.upper, u, u, lam.lower, th.lower, th.upper);
  }
  return clamp_to_state_space(std::move(next), th.upper.x_jam);
}

// Lifted step that does not assume the ramps release u. The release is bounded
// by the queue plus arrivals and, from below, by the room left in the cell, so
// the result contains the plant successor for any ramp behaviour. Equals
// lifted_step whenever u is releasable and fits.
template <typename Scalar>
LiftedState<Scalar> lifted_step_saturating(const LiftedState<Scalar>& s, const Vector<Scalar>& u,
                                           const DemandBounds<Scalar>& lam, const ParamBounds<Scalar>& th) {
  detail::check_dims(th.upper, s.upper, s.lower, u, lam.upper, lam.lower);
  const Index n = th.upper.cells();
  const Vector<Scalar> zero = Vector<Scalar>::Zero(n);
  const Vector<Scalar> pre_hi = detail::decomposition(s.upper, s.lower, zero, zero, lam.upper, th.upper, th.lower);
  Vector<Scalar> r_hi(n), r_lo(n);
  for (Index i = 0; i < n; ++i) {
    r_hi[i] = std::max<Scalar>(0, std::min<Scalar>(u[i], s.upper[n + i] + lam.upper[i]));
    const Scalar room = th.lower.x_jam[i] - pre_hi[i];
    r_lo[i] = std::max<Scalar>(0, std::min({u[i], s.lower[n + i] + lam.lower[i], room}));
  }
  LiftedState<Scalar> next;
  next.upper = detail::decomposition(s.upper, s.lower, r_hi, r_lo, lam.upper, th.upper, th.lower);
  next.lower = detail::decomposition(s.lower, s.upper, r_lo, r_hi, lam.lower, th.lower, th.upper);
  return clamp_to_state_space(std::move(next), th.upper.x_jam);
}

template <typename Scalar>
std::vector<LiftedState<Scalar>> simulate_lifted(const LiftedState<Scalar>& s0,
                                                 const std::vector<Vector<Scalar>>& controls,
                                                 const DemandBounds<Scalar>& lam, const ParamBounds<Scalar>& th) {
  std::vector<LiftedState<Scalar>> traj{s0};
  traj.reserve(controls.size() + 1);
  for (const auto& u : controls) traj.push_back(lifted_step(traj.back(), u, lam, th));
  return traj;
}

}  // namespace ramp::embedding
