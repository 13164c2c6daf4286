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

// Mixed-integer linear model: minimize c'x + c0 subject to linear rows and
// variable bounds, with some variables restricted to {0, 1}.

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace ramp::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Var {
  int id = -1;
};

class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double c) : constant(c) {}  // NOLINT(google-explicit-constructor)
  LinExpr(Var v) : terms{{v.id, 1.0}} {}  // NOLINT(google-explicit-constructor)

  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double s);

  std::vector<std::pair<int, double>> terms;
  double constant = 0;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a);
LinExpr operator*(double s, LinExpr a);
LinExpr operator*(LinExpr a, double s);

double evaluate(const LinExpr& e, const Eigen::VectorXd& x);

enum class VarKind { Continuous, Binary };
enum class Sense { LessEqual, GreaterEqual, Equal };

struct VarInfo {
  double lower;
  double upper;
  VarKind kind;
  std::string name;
};

// Row sum_k val[k] * x[idx[k]] (sense) rhs. Duplicate indices are merged.
struct Row {
  std::vector<int> idx;
  std::vector<double> val;
  Sense sense;
  double rhs;
  std::string name;
};

struct Interval {
  double lower;
  double upper;
};

class Model {
 public:
  Var add_var(double lower, double upper, VarKind kind = VarKind::Continuous, std::string name = {});
  Var add_binary(std::string name = {}) { return add_var(0, 1, VarKind::Binary, std::move(name)); }

  // Stores lhs - rhs (sense) 0 as a row.
  int add_constraint(const LinExpr& lhs, Sense sense, const LinExpr& rhs, std::string name = {});

  void set_objective(const LinExpr& obj);

  // Registers a rule that fills some variables from ones set earlier (in
  // registration order). Used to complete a partial assignment, e.g. controls
  // only, into a full candidate solution.
  void add_definition(std::function<void(Eigen::VectorXd&)> rule);

  void tighten(Var v, double lower, double upper);

  Interval range(const LinExpr& e) const;
  double value(const LinExpr& e, const Eigen::VectorXd& x) const;

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  int num_binaries() const;
  const std::vector<VarInfo>& vars() const { return vars_; }
  const VarInfo& var(Var v) const { return vars_.at(v.id); }
  const std::vector<Row>& rows() const { return rows_; }
  const Eigen::VectorXd& objective() const { return obj_; }
  double objective_constant() const { return obj_const_; }

  double objective_value(const Eigen::VectorXd& x) const;

  // Largest bound, row or integrality violation of x.
  double max_violation(const Eigen::VectorXd& x) const;

  // Applies the registered definitions to x in place.
  void complete(Eigen::VectorXd& x) const;

 private:
  std::vector<VarInfo> vars_;
  std::vector<Row> rows_;
  Eigen::VectorXd obj_;
  double obj_const_ = 0;
  std::vector<std::function<void(Eigen::VectorXd&)>> definitions_;
};

std::string to_lp_format(const Model& m);

}  // namespace ramp::milp
