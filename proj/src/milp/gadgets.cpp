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
#include "ramp/milp/gadgets.hpp"

#include <algorithm>
#include <cmath>

#include "ramp/types.hpp"

namespace ramp::milp {

namespace {

void require_finite(const Interval& r, const std::string& name) {
  if (!std::isfinite(r.lower) || !std::isfinite(r.upper))
    throw DomainError("gadget '" + name + "' needs finite bounds on its arguments");
}

Var define_as(Model& m, const LinExpr& e, const std::string& name) {
  const Interval r = m.range(e);
  const Var f = m.add_var(r.lower, r.upper, VarKind::Continuous, name);
  m.add_constraint(f, Sense::Equal, e, name + "_def");
  m.add_definition([f, e](Eigen::VectorXd& x) { x[f.id] = evaluate(e, x); });
  return f;
}

}  // namespace

Var encode_min_equality(Model& m, const LinExpr& a, const LinExpr& b, const std::string& name,
                        std::optional<Var> selector, const GadgetOptions& o) {
  const Interval ra = m.range(a), rb = m.range(b);
  require_finite(ra, name);
  require_finite(rb, name);
  const double m_a = m.range(a - b).upper;  // how far a can exceed b
  const double m_b = m.range(b - a).upper;
  if (o.eliminate_redundant && m_a <= 0) return define_as(m, a, name);
  if (o.eliminate_redundant && m_b <= 0) return define_as(m, b, name);

  const Var f = m.add_var(std::min(ra.lower, rb.lower), std::min(ra.upper, rb.upper), VarKind::Continuous, name);
  m.add_constraint(f, Sense::LessEqual, a, name + "_le_a");
  m.add_constraint(f, Sense::LessEqual, b, name + "_le_b");
  const Var z = selector ? *selector : m.add_binary(name + "_z");
  // z = 1: f >= a. z = 0: f >= b.
  m.add_constraint(f, Sense::GreaterEqual, a - std::max(m_a, 0.0) * (LinExpr(1.0) - z), name + "_ge_a");
  m.add_constraint(f, Sense::GreaterEqual, b - std::max(m_b, 0.0) * LinExpr(z), name + "_ge_b");
  const bool own = !selector;
  m.add_definition([f, z, a, b, own](Eigen::VectorXd& x) {
    const double va = evaluate(a, x), vb = evaluate(b, x);
    x[f.id] = std::min(va, vb);
    if (own) x[z.id] = va <= vb ? 1.0 : 0.0;
  });
  return f;
}

Var encode_max_equality(Model& m, const LinExpr& a, const LinExpr& b, const std::string& name,
                        const GadgetOptions& o) {
  // max(a, b) = -min(-a, -b)
  const Var g = encode_min_equality(m, -a, -b, name + "_neg", std::nullopt, o);
  return define_as(m, -LinExpr(g), name);
}

CapacityDrop encode_capacity_drop(Model& m, const LinExpr& x, double threshold, double c_full, double c_drop,
                                  const std::string& name, const GadgetOptions& o) {
  const Interval r = m.range(x);
  require_finite(r, name);
  if (o.eliminate_redundant && r.upper <= threshold) return {LinExpr(c_full), std::nullopt};
  if (o.eliminate_redundant && r.lower >= threshold + kDropMargin) return {LinExpr(c_drop), std::nullopt};
  // A fixed value inside the excluded band is still decided exactly.
  if (r.lower == r.upper) return {LinExpr(r.lower <= threshold ? c_full : c_drop), std::nullopt};
  const Var z = m.add_binary(name + "_full");
  const double m_up = std::max(r.upper - threshold, 0.0);
  const double m_lo = std::max(threshold + kDropMargin - r.lower, 0.0);
  m.add_constraint(x, Sense::LessEqual, threshold + m_up * (LinExpr(1.0) - z), name + "_full_le");
  m.add_constraint(x, Sense::GreaterEqual, threshold + kDropMargin - m_lo * LinExpr(z), name + "_drop_ge");
  m.add_definition([z, x, threshold](Eigen::VectorXd& v) { v[z.id] = evaluate(x, v) <= threshold ? 1.0 : 0.0; });
  return {c_drop + (c_full - c_drop) * LinExpr(z), z};
}

Var encode_saturation(Model& m, const LinExpr& a, const LinExpr& b, const std::string& name,
                      const GadgetOptions& o) {
  const Var inner = encode_min_equality(m, a, b, name + "_min", std::nullopt, o);
  return encode_max_equality(m, inner, LinExpr(0.0), name, o);
}

void encode_indicator_le(Model& m, Var z, const LinExpr& e, double rhs, const std::string& name) {
  const Interval r = m.range(e);
  require_finite(r, name);
  const double big = std::max(r.upper - rhs, 0.0);
  if (big == 0) return;
  m.add_constraint(e, Sense::LessEqual, rhs + big * (LinExpr(1.0) - z), name);
}

}  // namespace ramp::milp
