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

// Cell transmission model of a freeway stretch with I cells, one on-ramp per
// cell and an off-ramp between consecutive cells.
//
// State layout is x = [mainline densities x_0..x_{I-1}, ramp queues
// x_I..x_{2I-1}]. Cells are 0-based in code; files and logs number them from 1.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "ramp/types.hpp"

namespace ramp::ctm {

template <typename Scalar = double>
struct FreewayParams {
  Vector<Scalar> beta;   // split ratio between cell i and i+1, size I-1
  Vector<Scalar> v;      // free-flow speed
  Vector<Scalar> w;      // congestion wave speed
  Vector<Scalar> x_jam;  // jam density
  Vector<Scalar> c_max;  // capacity
  Vector<Scalar> alpha;  // capacity-drop factor

  Index cells() const { return v.size(); }

  Vector<Scalar> critical_density() const { return c_max.cwiseQuotient(v); }

  static FreewayParams homogeneous(Index cells, Scalar beta, Scalar v, Scalar w,
                                   Scalar x_jam, Scalar c_max, Scalar alpha) {
    FreewayParams p;
    p.beta = Vector<Scalar>::Constant(std::max<Index>(cells - 1, 0), beta);
    p.v = Vector<Scalar>::Constant(cells, v);
    p.w = Vector<Scalar>::Constant(cells, w);
    p.x_jam = Vector<Scalar>::Constant(cells, x_jam);
    p.c_max = Vector<Scalar>::Constant(cells, c_max);
    p.alpha = Vector<Scalar>::Constant(cells, alpha);
    return p;
  }

  // Shape and sign checks that also apply to the ends of a parameter box.
  void validate_shape() const {
    const Index n = cells();
    if (n < 1) throw DomainError("freeway needs at least one cell");
    if (beta.size() != n - 1 || w.size() != n || x_jam.size() != n ||
        c_max.size() != n || alpha.size() != n)
      throw DomainError("parameter vectors have inconsistent sizes");
    for (Index i = 0; i < n; ++i) {
      if (!(v[i] > 0 && v[i] <= 1)) throw DomainError("v must lie in (0, 1] at cell " + std::to_string(i + 1));
      if (!(w[i] > 0 && w[i] <= 1)) throw DomainError("w must lie in (0, 1] at cell " + std::to_string(i + 1));
      if (!(c_max[i] > 0)) throw DomainError("c_max must be positive at cell " + std::to_string(i + 1));
      if (!(alpha[i] > 0 && alpha[i] <= 1)) throw DomainError("alpha must lie in (0, 1] at cell " + std::to_string(i + 1));
      if (!(x_jam[i] > 0)) throw DomainError("x_jam must be positive at cell " + std::to_string(i + 1));
    }
    for (Index i = 0; i + 1 < n; ++i)
      if (!(beta[i] > 0 && beta[i] < 1)) throw DomainError("beta must lie in (0, 1) at cell " + std::to_string(i + 1));
  }

  // Full physical check for a single parameter vector.
  void validate() const {
    validate_shape();
    for (Index i = 0; i < cells(); ++i)
      if (c_max[i] / v[i] > x_jam[i])
        throw DomainError("critical density exceeds jam density at cell " + std::to_string(i + 1));
  }
};

// Parameter families in a fixed order, used for logging and for
// component-wise box contraction.
template <typename Scalar>
using ParamMember = Vector<Scalar> FreewayParams<Scalar>::*;

template <typename Scalar = double>
inline const std::array<std::pair<const char*, ParamMember<Scalar>>, 6>& param_fields() {
  static const std::array<std::pair<const char*, ParamMember<Scalar>>, 6> fields{{
      {"beta", &FreewayParams<Scalar>::beta},
      {"v", &FreewayParams<Scalar>::v},
      {"w", &FreewayParams<Scalar>::w},
      {"x_jam", &FreewayParams<Scalar>::x_jam},
      {"c_max", &FreewayParams<Scalar>::c_max},
      {"alpha", &FreewayParams<Scalar>::alpha},
  }};
  return fields;
}

template <typename Scalar>
inline Scalar checked_density(const FreewayParams<Scalar>& p, Index i, Scalar x) {
  if (!(x >= -kStateTol) || !(x <= p.x_jam[i] + kStateTol))
    throw DomainError("density outside [0, x_jam] at cell " + std::to_string(i + 1));
  return std::clamp<Scalar>(x, 0, p.x_jam[i]);
}

// Capacity with drop: full capacity up to the critical density (inclusive).
template <typename Scalar>
inline Scalar capacity_with_drop(const FreewayParams<Scalar>& p, Index i, Scalar x) {
  return x <= p.c_max[i] / p.v[i] ? p.c_max[i] : p.alpha[i] * p.c_max[i];
}

template <typename Scalar>
inline Scalar demand(const FreewayParams<Scalar>& p, Index i, Scalar x) {
  x = checked_density(p, i, x);
  return std::min<Scalar>(p.v[i] * x, capacity_with_drop(p, i, x));
}

// Receiving capacity of cell i >= 1 as seen from cell i-1.
template <typename Scalar>
inline Scalar supply(const FreewayParams<Scalar>& p, Index i, Scalar x) {
  if (i < 1 || i >= p.cells()) throw DomainError("supply is defined for cells 2..I");
  x = checked_density(p, i, x);
  return std::min<Scalar>(p.w[i] / p.beta[i - 1] * (p.x_jam[i] - x), p.c_max[i - 1]);
}

// Mainline outflows f^out for a mainline density vector.
template <typename Scalar>
Vector<Scalar> mainline_outflow(const FreewayParams<Scalar>& p, const Vector<Scalar>& xm) {
  const Index n = p.cells();
  Vector<Scalar> f(n);
  for (Index i = 0; i < n; ++i) {
    f[i] = demand(p, i, xm[i]);
    if (i + 1 < n) f[i] = std::min(f[i], supply(p, i + 1, xm[i + 1]));
  }
  return f;
}

// Ramp outflow limited by the metering command, the queue plus arrivals and the
// space left in the cell after mainline exchange.
template <typename Scalar>
Vector<Scalar> ramp_outflow(const FreewayParams<Scalar>& p, const Vector<Scalar>& x,
                            const Vector<Scalar>& u, const Vector<Scalar>& lambda) {
  const Index n = p.cells();
  if (x.size() != 2 * n || u.size() != n || lambda.size() != n)
    throw DomainError("ramp_outflow: dimension mismatch");
  const Vector<Scalar> fout = mainline_outflow<Scalar>(p, x.head(n));
  Vector<Scalar> fr(n);
  for (Index i = 0; i < n; ++i) {
    if (x[n + i] < -kStateTol) throw DomainError("negative ramp queue at cell " + std::to_string(i + 1));
    if (u[i] < 0 || lambda[i] < 0) throw DomainError("negative ramp input at cell " + std::to_string(i + 1));
    const Scalar inflow = i > 0 ? p.beta[i - 1] * fout[i - 1] : Scalar(0);
    const Scalar space = p.x_jam[i] - (x[i] + inflow - fout[i]);
    const Scalar queue = std::max<Scalar>(x[n + i], 0) + lambda[i];
    fr[i] = std::max<Scalar>(0, std::min({u[i], queue, space}));
  }
  return fr;
}

// One step of the nonlinear plant.
template <typename Scalar>
Vector<Scalar> plant_step(const FreewayParams<Scalar>& p, const Vector<Scalar>& x,
                          const Vector<Scalar>& u, const Vector<Scalar>& lambda) {
  const Index n = p.cells();
  const Vector<Scalar> fr = ramp_outflow(p, x, u, lambda);
  const Vector<Scalar> fout = mainline_outflow<Scalar>(p, x.head(n));
  Vector<Scalar> next(2 * n);
  for (Index i = 0; i < n; ++i) {
    const Scalar inflow = (i > 0 ? p.beta[i - 1] * fout[i - 1] : Scalar(0)) + fr[i];
    next[i] = x[i] + inflow - fout[i];
    next[n + i] = std::max<Scalar>(x[n + i], 0) + lambda[i] - fr[i];
    if (next[i] < -kStateTol || next[i] > p.x_jam[i] + kStateTol || next[n + i] < -kStateTol)
      throw InvariantError("plant left the state space at cell " + std::to_string(i + 1));
    next[i] = std::clamp<Scalar>(next[i], 0, p.x_jam[i]);
    next[n + i] = std::max<Scalar>(next[n + i], 0);
  }
  return next;
}

namespace detail {

// x_m - (I - R) f_out + u on the mainline and x_r - u + lambda on the ramps.
template <typename Scalar>
Vector<Scalar> compact_dynamics(const FreewayParams<Scalar>& p, const Vector<Scalar>& x,
                                const Vector<Scalar>& u, const Vector<Scalar>& lambda) {
  const Index n = p.cells();
  const Vector<Scalar> fout = mainline_outflow<Scalar>(p, x.head(n));
  Vector<Scalar> next(2 * n);
  for (Index i = 0; i < n; ++i) {
    const Scalar inflow = i > 0 ? p.beta[i - 1] * fout[i - 1] : Scalar(0);
    next[i] = x[i] + inflow - fout[i] + u[i];
    next[n + i] = x[n + i] - u[i] + lambda[i];
  }
  return next;
}

}  // namespace detail

// Plant written with the metering rate as the ramp outflow. Valid only when the
// ramp can release u and the cell can absorb it.
template <typename Scalar>
Vector<Scalar> compact_step(const FreewayParams<Scalar>& p, const Vector<Scalar>& x,
                            const Vector<Scalar>& u, const Vector<Scalar>& lambda) {
  const Index n = p.cells();
  if (x.size() != 2 * n || u.size() != n || lambda.size() != n)
    throw DomainError("compact_step: dimension mismatch");
  for (Index i = 0; i < n; ++i)
    if (u[i] < 0 || u[i] > x[n + i] + lambda[i] + kStateTol)
      throw ContractError("compact_step: ramp " + std::to_string(i + 1) + " cannot release u");
  Vector<Scalar> next = detail::compact_dynamics(p, x, u, lambda);
  for (Index i = 0; i < n; ++i)
    if (next[i] > p.x_jam[i] + kStateTol)
      throw ContractError("compact_step: cell " + std::to_string(i + 1) + " overflows");
  return next;
}

// Solve (I - R) f = lambda by forward substitution; R has beta on the subdiagonal.
template <typename Scalar>
Vector<Scalar> equilibrium_flow(const FreewayParams<Scalar>& p, const Vector<Scalar>& lambda) {
  const Index n = p.cells();
  if (lambda.size() != n) throw DomainError("equilibrium_flow: dimension mismatch");
  Vector<Scalar> f(n);
  for (Index i = 0; i < n; ++i) f[i] = lambda[i] + (i > 0 ? p.beta[i - 1] * f[i - 1] : Scalar(0));
  return f;
}

// Free-flow equilibrium f_eq / v. Requires f_eq <= c_max.
template <typename Scalar>
Vector<Scalar> equilibrium_uncongested(const FreewayParams<Scalar>& p, const Vector<Scalar>& lambda) {
  const Vector<Scalar> f = equilibrium_flow(p, lambda);
  for (Index i = 0; i < f.size(); ++i)
    if (f[i] > p.c_max[i] * (1 + 1e-12))
      throw AdmissibilityError("equilibrium flow exceeds capacity at cell " + std::to_string(i + 1));
  return f.cwiseQuotient(p.v);
}

// Admissibility of a demand profile (rows = ramps, columns = time). The limsup
// of the running average is approximated by its maximum over the last
// `tail` samples.
template <typename Scalar>
bool check_admissible(const FreewayParams<Scalar>& p,
                      const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& lambda,
                      Index tail = -1) {
  const Index n = p.cells(), steps = lambda.cols();
  if (lambda.rows() != n || steps == 0) throw DomainError("check_admissible: bad demand matrix");
  if (tail < 0) tail = std::max<Index>(1, steps / 2);
  tail = std::min(tail, steps);
  Vector<Scalar> sum = Vector<Scalar>::Zero(n);
  for (Index t = 0; t < steps; ++t) {
    sum += lambda.col(t);
    if (t < steps - tail) continue;
    const Vector<Scalar> f = equilibrium_flow<Scalar>(p, sum / Scalar(t + 1));
    if ((f - p.c_max).maxCoeff() > Scalar(1e-12) * p.c_max.maxCoeff()) return false;
  }
  return true;
}

// Which mainline cells are measured, and with what gain.
struct OutputModel {
  ArrayXb measured;
  VectorXd gain;

  static OutputModel full(Index cells) { return {ArrayXb::Constant(cells, true), VectorXd::Ones(cells)}; }
  static OutputModel none(Index cells) { return {ArrayXb::Constant(cells, false), VectorXd::Ones(cells)}; }
};

// Mainline readings are meaningful only where `measured` is set. Ramp queues
// are always observed.
template <typename Scalar = double>
struct Observation {
  ArrayXb measured;
  Vector<Scalar> mainline;
  Vector<Scalar> ramps;
};

template <typename Scalar>
Observation<Scalar> measure(const Vector<Scalar>& x, const OutputModel& c) {
  const Index n = c.measured.size();
  if (x.size() != 2 * n) throw DomainError("measure: dimension mismatch");
  Observation<Scalar> y{c.measured, Vector<Scalar>::Zero(n), x.tail(n)};
  for (Index i = 0; i < n; ++i)
    if (c.measured[i]) y.mainline[i] = Scalar(c.gain[i]) * x[i];
  return y;
}

}  // namespace ramp::ctm
