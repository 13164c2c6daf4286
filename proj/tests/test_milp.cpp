#include <gtest/gtest.h>

#include <random>

#include "ramp/milp/branch_and_bound.hpp"
#include "ramp/milp/gadgets.hpp"
#include "ramp/types.hpp"

namespace {

using namespace ramp::milp;
using Eigen::VectorXd;

TEST(Lp, SingleBound) {
  Model m;
  const Var x = m.add_var(0, 10);
  m.add_constraint(x, Sense::GreaterEqual, 3.0);
  m.set_objective(x);
  const LpResult r = solve_relaxation(m);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.x[0], 3, 1e-9);
  EXPECT_NEAR(r.objective, 3, 1e-9);
}

TEST(Lp, TwoVariableVertex) {
  Model m;
  const Var x = m.add_var(0, kInf), y = m.add_var(0, kInf);
  m.add_constraint(x + y, Sense::LessEqual, 4.0);
  m.add_constraint(x, Sense::LessEqual, 2.0);
  m.set_objective(-3.0 * LinExpr(x) - 2.0 * LinExpr(y));
  const LpResult r = solve_relaxation(m);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.x[0], 2, 1e-9);
  EXPECT_NEAR(r.x[1], 2, 1e-9);
  EXPECT_NEAR(-r.objective, 10, 1e-9);
}

TEST(Lp, InfeasibleAndUnbounded) {
  Model m;
  const Var x = m.add_var(-kInf, kInf);
  m.add_constraint(x, Sense::GreaterEqual, 1.0);
  m.add_constraint(x, Sense::LessEqual, 0.0);
  m.set_objective(x);
  EXPECT_EQ(solve_relaxation(m).status, LpStatus::Infeasible);
  Model u;
  const Var z = u.add_var(0, kInf);
  u.set_objective(-1.0 * LinExpr(z));
  EXPECT_EQ(solve_relaxation(u).status, LpStatus::Unbounded);
  EXPECT_EQ(solve_milp(u).status, MilpStatus::Unbounded);
}

TEST(Lp, EqualityAndFreeVariables) {
  Model m;
  const Var x = m.add_var(-kInf, kInf), y = m.add_var(-kInf, kInf);
  m.add_constraint(x + y, Sense::Equal, 1.0);
  m.add_constraint(x - y, Sense::Equal, 3.0);
  m.set_objective(x + y);
  const LpResult r = solve_relaxation(m);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.x[0], 2, 1e-9);
  EXPECT_NEAR(r.x[1], -1, 1e-9);
}

TEST(Milp, RoundingForced) {
  Model m;
  const Var a = m.add_binary(), b = m.add_binary();
  m.add_constraint(a + b, Sense::GreaterEqual, 1.5);
  m.set_objective(a + b);
  const MilpResult r = solve_milp(m);
  ASSERT_EQ(r.status, MilpStatus::Optimal);
  EXPECT_NEAR(r.objective, 2, 1e-9);
}

TEST(Milp, IntegralRelaxationSolvedAtRoot) {
  Model m;
  const Var a = m.add_binary(), b = m.add_binary();
  m.add_constraint(a + b, Sense::GreaterEqual, 1.0);
  m.set_objective(a + 2.0 * LinExpr(b));
  const MilpResult r = solve_milp(m);
  ASSERT_EQ(r.status, MilpStatus::Optimal);
  EXPECT_EQ(r.nodes, 1);
  EXPECT_NEAR(r.objective, 1, 1e-9);
}

TEST(Milp, InfeasibleProven) {
  Model m;
  const Var a = m.add_binary();
  m.add_constraint(a, Sense::GreaterEqual, 0.3);
  m.add_constraint(a, Sense::LessEqual, 0.7);
  m.set_objective(a);
  EXPECT_EQ(solve_milp(m).status, MilpStatus::Infeasible);
}

// Random pure-binary programs with a continuous slack, compared against
// enumeration. The continuous variable has a closed-form optimum for each
// binary assignment, so the oracle needs no LP.
TEST(Milp, MatchesEnumeration) {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> U(-5, 5);
  for (int inst = 0; inst < 200; ++inst) {
    const int n = 1 + inst % 6;
    Model m;
    std::vector<Var> b;
    for (int j = 0; j < n; ++j) b.push_back(m.add_binary());
    const Var s = m.add_var(0, 10);  // s >= row activity excess, priced at 1
    std::vector<std::vector<double>> a(3, std::vector<double>(n));
    std::vector<double> rhs(3), c(n);
    for (int r = 0; r < 3; ++r) {
      LinExpr e;
      for (int j = 0; j < n; ++j) {
        a[r][j] = U(g);
        e += a[r][j] * LinExpr(b[j]);
      }
      rhs[r] = U(g);
      if (r < 2)
        m.add_constraint(e, Sense::LessEqual, rhs[r]);
      else
        m.add_constraint(e - s, Sense::LessEqual, rhs[r]);
    }
    LinExpr obj = s;
    for (int j = 0; j < n; ++j) {
      c[j] = U(g);
      obj += c[j] * LinExpr(b[j]);
    }
    m.set_objective(obj);

    double best = kInf;
    for (int mask = 0; mask < (1 << n); ++mask) {
      double act[3] = {0, 0, 0}, val = 0;
      for (int j = 0; j < n; ++j)
        if (mask >> j & 1) {
          for (int r = 0; r < 3; ++r) act[r] += a[r][j];
          val += c[j];
        }
      if (act[0] > rhs[0] + 1e-9 || act[1] > rhs[1] + 1e-9) continue;
      const double slack = std::max(0.0, act[2] - rhs[2]);
      if (slack > 10) continue;
      best = std::min(best, val + slack);
    }
    const MilpResult r = solve_milp(m);
    if (std::isinf(best)) {
      EXPECT_EQ(r.status, MilpStatus::Infeasible) << "instance " << inst;
    } else {
      ASSERT_EQ(r.status, MilpStatus::Optimal) << "instance " << inst;
      EXPECT_NEAR(r.objective, best, 1e-6) << "instance " << inst;
    }
  }
}

TEST(Milp, StartsAndNodeLimit) {
  Model m;
  std::vector<Var> b;
  LinExpr sum, obj;
  for (int j = 0; j < 12; ++j) {
    b.push_back(m.add_binary());
    sum += b.back();
    obj += (1.0 + 0.1 * j) * LinExpr(b.back());
  }
  m.add_constraint(sum, Sense::GreaterEqual, 6.5);
  m.set_objective(obj);
  MilpOptions o;
  o.node_limit = 1;
  VectorXd start = VectorXd::Ones(12);
  o.starts.push_back(start);
  const MilpResult r = solve_milp(m, o);
  EXPECT_TRUE(r.has_solution);
  EXPECT_LE(r.objective, start.sum() + 6.6 + 1e-9);
  EXPECT_LE(r.best_bound, r.objective);
}

TEST(Model, ViolationAndLpFormat) {
  Model m;
  const Var x = m.add_var(0, 1, VarKind::Continuous, "x");
  const Var z = m.add_binary("z");
  m.add_constraint(x + z, Sense::LessEqual, 1.0, "cap");
  m.set_objective(x - 2.0 * LinExpr(z));
  VectorXd p(2);
  p << 0.5, 1;
  EXPECT_NEAR(m.max_violation(p), 0.5, 1e-12);
  p << 0, 0.5;
  EXPECT_NEAR(m.max_violation(p), 0.5, 1e-12);
  const std::string lp = to_lp_format(m);
  EXPECT_NE(lp.find("cap"), std::string::npos);
  EXPECT_NE(lp.find("Binar"), std::string::npos);
}

// Fixes a and b at constants, then minimizes and maximizes the gadget output.
std::pair<double, double> min_gadget_range(double a, double b) {
  double out[2];
  for (int sense = 0; sense < 2; ++sense) {
    Model m;
    const Var va = m.add_var(a, a), vb = m.add_var(b, b);
    GadgetOptions o;
    o.eliminate_redundant = false;
    const Var f = encode_min_equality(m, va, vb, "f", std::nullopt, o);
    m.set_objective(sense == 0 ? LinExpr(f) : -1.0 * LinExpr(f));
    const MilpResult r = solve_milp(m);
    EXPECT_EQ(r.status, MilpStatus::Optimal);
    out[sense] = r.x[f.id];
  }
  return {out[0], out[1]};
}

TEST(Gadgets, MinEqualityExamples) {
  auto [lo, hi] = min_gadget_range(15, 20);
  EXPECT_NEAR(lo, 15, 1e-9);
  EXPECT_NEAR(hi, 15, 1e-9);
  std::tie(lo, hi) = min_gadget_range(7, 7);
  EXPECT_NEAR(lo, 7, 1e-9);
  EXPECT_NEAR(hi, 7, 1e-9);
}

TEST(Gadgets, MinEqualityGrid) {
  for (double a = -10; a <= 30; a += 2.5)
    for (double b = -10; b <= 30; b += 2.5) {
      const auto [lo, hi] = min_gadget_range(a, b);
      ASSERT_NEAR(lo, std::min(a, b), 1e-7) << a << " " << b;
      ASSERT_NEAR(hi, std::min(a, b), 1e-7) << a << " " << b;
    }
}

TEST(Gadgets, MinEqualityOnFreeInputs) {
  // a and b free in boxes: f must track min(a, b) at every optimum of a
  // linear objective that rewards a large f.
  Model m;
  const Var a = m.add_var(0, 10), b = m.add_var(0, 10);
  const Var f = encode_min_equality(m, a, b, "f");
  m.add_constraint(a, Sense::Equal, 4.0);
  m.set_objective(-1.0 * LinExpr(f) + 0.01 * LinExpr(b));
  const MilpResult r = solve_milp(m);
  ASSERT_EQ(r.status, MilpStatus::Optimal);
  EXPECT_NEAR(r.x[f.id], 4, 1e-9);
  EXPECT_NEAR(r.x[b.id], 4, 1e-9);
}

TEST(Gadgets, MaxAndSaturation) {
  for (double a = -6; a <= 6; a += 1.5)
    for (double b = -6; b <= 6; b += 1.5)
      for (int sense = 0; sense < 2; ++sense) {
        Model m;
        const Var va = m.add_var(a, a), vb = m.add_var(b, b);
        GadgetOptions o;
        o.eliminate_redundant = false;
        const Var mx = encode_max_equality(m, va, vb, "mx", o);
        const Var sat = encode_saturation(m, va, vb, "sat", o);
        const LinExpr obj = LinExpr(mx) + LinExpr(sat);
        m.set_objective(sense == 0 ? obj : -1.0 * obj);
        const MilpResult r = solve_milp(m);
        ASSERT_EQ(r.status, MilpStatus::Optimal);
        ASSERT_NEAR(r.x[mx.id], std::max(a, b), 1e-7);
        ASSERT_NEAR(r.x[sat.id], std::max(0.0, std::min(a, b)), 1e-7);
      }
}

double capacity_at(double x, int sense) {
  Model m;
  const Var vx = m.add_var(x, x);
  GadgetOptions o;
  o.eliminate_redundant = false;
  const CapacityDrop cd = encode_capacity_drop(m, vx, 40, 20, 18, "xi", o);
  const Var xi = m.add_var(-kInf, kInf);
  m.add_constraint(xi, Sense::Equal, cd.capacity);
  m.set_objective(sense == 0 ? LinExpr(xi) : -1.0 * LinExpr(xi));
  const MilpResult r = solve_milp(m);
  EXPECT_EQ(r.status, MilpStatus::Optimal) << x;
  return r.x[xi.id];
}

TEST(Gadgets, CapacityDropExamples) {
  for (int s = 0; s < 2; ++s) {
    EXPECT_NEAR(capacity_at(30, s), 20, 1e-9);
    EXPECT_NEAR(capacity_at(60, s), 18, 1e-9);
    EXPECT_NEAR(capacity_at(40, s), 20, 1e-9);
  }
}

TEST(Gadgets, CapacityDropGrid) {
  for (double x = 0; x <= 160; x += 0.25)
    for (int s = 0; s < 2; ++s) ASSERT_NEAR(capacity_at(x, s), x <= 40 ? 20.0 : 18.0, 1e-9) << x;
  // Constants just past the threshold are decided exactly.
  for (int s = 0; s < 2; ++s) EXPECT_NEAR(capacity_at(40 + 1e-7, s), 18, 1e-9);
}

// At the threshold the relaxation puts the selector a hair above zero, inside
// the integrality tolerance, and rounding it breaks the big-M row.
TEST(Gadgets, CapacityDropAtThresholdPinnedByRow) {
  Model m;
  const Var x = m.add_var(0, 160);
  m.add_constraint(x, Sense::Equal, 40.0);
  const CapacityDrop cd = encode_capacity_drop(m, x, 40, 20, 18, "xi");
  ASSERT_TRUE(cd.full.has_value());
  m.set_objective(cd.capacity);
  const MilpResult r = solve_milp(m);
  ASSERT_EQ(r.status, MilpStatus::Optimal);
  EXPECT_NEAR(r.objective, 20, 1e-9);
}

TEST(Gadgets, CapacityDropDecidedByBounds) {
  Model m;
  const Var x = m.add_var(0, 35);
  const CapacityDrop cd = encode_capacity_drop(m, x, 40, 20, 18, "xi");
  EXPECT_FALSE(cd.full.has_value());
  EXPECT_EQ(m.num_binaries(), 0);
}

TEST(Gadgets, IndicatorLe) {
  Model m;
  const Var z = m.add_binary(), x = m.add_var(0, 10);
  encode_indicator_le(m, z, x, 3);
  m.add_constraint(x, Sense::GreaterEqual, 5.0);
  m.set_objective(-1.0 * LinExpr(z));
  const MilpResult r = solve_milp(m);
  ASSERT_EQ(r.status, MilpStatus::Optimal);
  EXPECT_NEAR(r.x[z.id], 0, 1e-9);
}

}  // namespace
