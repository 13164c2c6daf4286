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
#include "ramp/milp/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ramp/types.hpp"

namespace ramp::milp {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  constant += o.constant;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  for (const auto& [i, c] : o.terms) terms.emplace_back(i, -c);
  constant -= o.constant;
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  for (auto& t : terms) t.second *= s;
  constant *= s;
  return *this;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator-(LinExpr a) { return a *= -1.0; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }
LinExpr operator*(LinExpr a, double s) { return a *= s; }

Var Model::add_var(double lower, double upper, VarKind kind, std::string name) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper)
    throw DomainError("add_var: empty or NaN bounds for '" + name + "'");
  if (kind == VarKind::Binary) {
    lower = std::max(lower, 0.0);
    upper = std::min(upper, 1.0);
    if (lower > upper) throw DomainError("add_var: binary with empty range");
  }
  vars_.push_back({lower, upper, kind, std::move(name)});
  obj_.conservativeResize(num_vars());
  obj_[num_vars() - 1] = 0;
  return Var{num_vars() - 1};
}

int Model::add_constraint(const LinExpr& lhs, Sense sense, const LinExpr& rhs, std::string name) {
  std::map<int, double> merged;
  for (const auto& [i, c] : lhs.terms) merged[i] += c;
  for (const auto& [i, c] : rhs.terms) merged[i] -= c;
  Row r{{}, {}, sense, rhs.constant - lhs.constant, std::move(name)};
  for (const auto& [i, c] : merged) {
    if (i < 0 || i >= num_vars()) throw DomainError("add_constraint: unknown variable");
    if (c != 0) {
      r.idx.push_back(i);
      r.val.push_back(c);
    }
  }
  rows_.push_back(std::move(r));
  return num_rows() - 1;
}

void Model::set_objective(const LinExpr& obj) {
  obj_.setZero(num_vars());
  for (const auto& [i, c] : obj.terms) {
    if (i < 0 || i >= num_vars()) throw DomainError("set_objective: unknown variable");
    obj_[i] += c;
  }
  obj_const_ = obj.constant;
}

void Model::add_definition(std::function<void(Eigen::VectorXd&)> rule) { definitions_.push_back(std::move(rule)); }

void Model::tighten(Var v, double lower, double upper) {
  auto& info = vars_.at(v.id);
  info.lower = std::max(info.lower, lower);
  info.upper = std::min(info.upper, upper);
  if (info.lower > info.upper) throw DomainError("tighten: empty range for '" + info.name + "'");
}

Interval Model::range(const LinExpr& e) const {
  Interval r{e.constant, e.constant};
  for (const auto& [i, c] : e.terms) {
    const auto& v = vars_.at(i);
    if (c > 0) {
      r.lower += c * v.lower;
      r.upper += c * v.upper;
    } else if (c < 0) {
      r.lower += c * v.upper;
      r.upper += c * v.lower;
    }
  }
  return r;
}

double evaluate(const LinExpr& e, const Eigen::VectorXd& x) {
  double s = e.constant;
  for (const auto& [i, c] : e.terms) s += c * x[i];
  return s;
}

double Model::value(const LinExpr& e, const Eigen::VectorXd& x) const {
  return evaluate(e, x);
}

int Model::num_binaries() const {
  return static_cast<int>(std::count_if(vars_.begin(), vars_.end(),
                                        [](const VarInfo& v) { return v.kind == VarKind::Binary; }));
}

double Model::objective_value(const Eigen::VectorXd& x) const { return obj_.dot(x) + obj_const_; }

double Model::max_violation(const Eigen::VectorXd& x) const {
  if (x.size() != num_vars()) throw DomainError("max_violation: dimension mismatch");
  double worst = 0;
  for (int j = 0; j < num_vars(); ++j) {
    const auto& v = vars_[j];
    if (!std::isfinite(x[j])) return kInf;
    worst = std::max({worst, v.lower - x[j], x[j] - v.upper});
    if (v.kind == VarKind::Binary) worst = std::max(worst, std::abs(x[j] - std::round(x[j])));
  }
  for (const auto& r : rows_) {
    double s = 0;
    for (std::size_t k = 0; k < r.idx.size(); ++k) s += r.val[k] * x[r.idx[k]];
    const double viol = r.sense == Sense::LessEqual      ? s - r.rhs
                        : r.sense == Sense::GreaterEqual ? r.rhs - s
                                                         : std::abs(s - r.rhs);
    worst = std::max(worst, viol);
  }
  return worst;
}

void Model::complete(Eigen::VectorXd& x) const {
  if (x.size() != num_vars()) throw DomainError("complete: dimension mismatch");
  for (const auto& d : definitions_) d(x);
}

std::string to_lp_format(const Model& m) {
  std::ostringstream os;
  os.precision(17);
  const auto name = [&](int j) {
    const auto& n = m.vars()[j].name;
    return n.empty() ? "x" + std::to_string(j) : n;
  };
  const auto terms = [&](const std::vector<int>& idx, const std::vector<double>& val) {
    for (std::size_t k = 0; k < idx.size(); ++k) os << (val[k] < 0 ? " - " : " + ") << std::abs(val[k]) << ' ' << name(idx[k]);
  };
  os << "Minimize\n obj:";
  std::vector<int> oi;
  std::vector<double> ov;
  for (int j = 0; j < m.num_vars(); ++j)
    if (m.objective()[j] != 0) {
      oi.push_back(j);
      ov.push_back(m.objective()[j]);
    }
  terms(oi, ov);
  if (m.objective_constant() != 0) os << " + " << m.objective_constant() << " constant";
  os << "\nSubject To\n";
  for (int r = 0; r < m.num_rows(); ++r) {
    const auto& row = m.rows()[r];
    os << ' ' << (row.name.empty() ? "c" + std::to_string(r) : row.name) << ':';
    terms(row.idx, row.val);
    os << (row.sense == Sense::LessEqual ? " <= " : row.sense == Sense::GreaterEqual ? " >= " : " = ") << row.rhs << '\n';
  }
  os << "Bounds\n";
  for (int j = 0; j < m.num_vars(); ++j) {
    const auto& v = m.vars()[j];
    os << ' ';
    if (std::isinf(v.lower)) os << "-inf"; else os << v.lower;
    os << " <= " << name(j) << " <= ";
    if (std::isinf(v.upper)) os << "+inf"; else os << v.upper;
    os << '\n';
  }
  os << "Binaries\n";
  for (int j = 0; j < m.num_vars(); ++j)
    if (m.vars()[j].kind == VarKind::Binary) os << ' ' << name(j) << '\n';
  os << "End\n";
  return os.str();
}

}  // namespace ramp::milp
