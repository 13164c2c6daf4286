#include <gtest/gtest.h>

#include <limits>

#include "ramp/mpc.hpp"

namespace {

using namespace ramp;
using namespace ramp::mpc;

FreewayParams<double> four_cell() { return FreewayParams<double>::homogeneous(4, 0.9, 0.5, 1.0 / 6, 160, 20, 0.9); }

VectorXd base_demand() {
  VectorXd l(4);
  l << 19.17, 1.67, 1.67, 1.67;
  return l;
}

MpcConfig config(int T, const VectorXd& terminal) {
  MpcConfig c;
  c.horizon = T;
  c.stage_weight = VectorXd::Ones(8);
  c.terminal_weight = choose_terminal_weights(four_cell(), c.stage_weight);
  c.terminal_upper = terminal;
  c.u_max = VectorXd::Constant(4, 40);
  return c;
}

VectorXd recoverable_terminal() {
  VectorXd t(8);
  t << compute_xup(four_cell(), base_demand()), VectorXd::Zero(4);
  return t;
}

TEST(ComputeXup, FourCellAndLimits) {
  const VectorXd up = compute_xup(four_cell(), base_demand());
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(up[i], 40, 1e-9);
  const VectorXd z = compute_xup(four_cell(), VectorXd::Zero(4));
  EXPECT_LT((z - four_cell().critical_density()).norm(), 1e-9);
  const auto one = FreewayParams<double>::homogeneous(1, 0.9, 0.4, 0.2, 160, 20, 0.9);
  EXPECT_NEAR(compute_xup(one, VectorXd::Constant(1, 5.0))[0], 50, 1e-9);
}

TEST(TerminalWeights, ValuesScalingAndSingleCell) {
  const VectorXd b = choose_terminal_weights(four_cell(), VectorXd::Ones(8));
  const double want[] = {6.878, 5.42, 3.8, 2};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(b[i], want[i], 1e-9);
  for (int i = 4; i < 8; ++i) EXPECT_DOUBLE_EQ(b[i], 1);
  const VectorXd b3 = choose_terminal_weights(four_cell(), VectorXd::Constant(8, 3.0));
  EXPECT_LT((b3.head(4) - 3 * b.head(4)).norm(), 1e-9);
  const auto one = FreewayParams<double>::homogeneous(1, 0.9, 0.4, 0.2, 160, 20, 0.9);
  EXPECT_NEAR(choose_terminal_weights(one, VectorXd::Constant(2, 2.0))[0], 5, 1e-12);
}

TEST(TerminalLyapunov, ValidWeightsAndViolation) {
  const auto p = four_cell();
  const VectorXd l = VectorXd::Ones(8), b = choose_terminal_weights(p, l);
  const VectorXd xf = compute_xup(p, base_demand());
  EXPECT_LE(terminal_lyapunov_residual(p, base_demand(), l, b, xf, b.head(4)), 1e-9);
  VectorXd small = b;
  small.head(4) *= 0.5;
  EXPECT_GT(terminal_lyapunov_residual(p, base_demand(), l, small, xf, small.head(4)), 0);
  EXPECT_NEAR(terminal_lyapunov_residual(p, VectorXd::Zero(4), l, b, VectorXd::Zero(4), b.head(4)), 0, 1e-12);
}

TEST(Census, MatchesUneliminatedModel) {
  const auto p = four_cell();
  VectorXd x(8);
  x << 30, 30, 30, 120, 1, 1, 1, 1;
  ParamBounds<double> box{FreewayParams<double>::homogeneous(4, 0.95, 0.6, 0.3, 160, 24, 0.9),
                          FreewayParams<double>::homogeneous(4, 0.7, 0.4, 0.1, 160, 16, 0.9)};
  LiftedState<double> s{x, x};
  s.upper.head(4).array() += 5;
  // An unbounded terminal box keeps bound propagation from settling the model.
  auto cfg = config(3, VectorXd::Constant(8, std::numeric_limits<double>::infinity()));
  cfg.eliminate_redundant = false;
  const DemandBounds<double> lam{base_demand() * 1.1, base_demand() * 0.9};
  const MpcProblem P = build_problem(s, lam, box, cfg);
  EXPECT_FALSE(P.aliased);
  EXPECT_EQ(P.model.num_binaries(), P.expected.binaries);
  EXPECT_EQ(P.model.num_vars(), P.expected.total());
  // Point boxes alias the two components.
  const MpcProblem Q = build_problem(LiftedState<double>::point(x), DemandBounds<double>::point(base_demand()),
                                     ParamBounds<double>::point(p), cfg);
  EXPECT_TRUE(Q.aliased);
  EXPECT_EQ(Q.model.num_binaries(), Q.expected.binaries);
  EXPECT_LT(Q.model.num_vars(), P.model.num_vars());
}

TEST(SolveMpc, EquilibriumKeepsDemandTracking) {
  const auto p = four_cell();
  const VectorXd lam = base_demand();
  VectorXd x(8);
  x << ctm::equilibrium_uncongested(p, lam), VectorXd::Zero(4);
  for (int T : {1, 5}) {
    const auto cfg = config(T, recoverable_terminal());
    const MpcResult r = solve_mpc(LiftedState<double>::point(x), DemandBounds<double>::point(lam),
                                  ParamBounds<double>::point(p), cfg);
    ASSERT_TRUE(r.feasible) << T;
    EXPECT_LT((r.u0 - lam).cwiseAbs().maxCoeff(), 1e-6) << T;
    const double want = T * cfg.stage_weight.dot(x) + cfg.terminal_weight.dot(x);
    EXPECT_NEAR(r.value, want, 1e-5) << T;
  }
}

TEST(SolveMpc, ShortHorizonCannotDrainQueue) {
  const auto p = four_cell();
  VectorXd x(8);
  x << 30, 30, 30, 30, 200, 0, 0, 0;
  const auto cfg = config(3, recoverable_terminal());
  const MpcResult r = solve_mpc(LiftedState<double>::point(x), DemandBounds<double>::point(base_demand()),
                                ParamBounds<double>::point(p), cfg);
  EXPECT_FALSE(r.feasible);
  EXPECT_GT(min_drain_steps(p, x, base_demand(), recoverable_terminal()), 3);
}

TEST(SolveMpc, OpenRampTerminalFeasibleFromCongestion) {
  const auto p = four_cell();
  VectorXd x(8), terminal(8);
  x << 60, 50, 45, 45, 5, 5, 5, 5;
  terminal << p.critical_density(), VectorXd::Constant(4, std::numeric_limits<double>::infinity());
  // Holding every ramp drains the mainline; its entry time is a witness horizon.
  VectorXd s = x;
  int K = 0;
  while (((s.head(4) - terminal.head(4)).array() > 0).any()) {
    s = ctm::plant_step(p, s, VectorXd(VectorXd::Zero(4)), base_demand());
    ++K;
    ASSERT_LT(K, 100);
  }
  auto cfg = config(K, terminal);
  const MpcResult r = solve_mpc(LiftedState<double>::point(x), DemandBounds<double>::point(base_demand()),
                                ParamBounds<double>::point(p), cfg);
  ASSERT_TRUE(r.feasible) << K;
  EXPECT_TRUE(((r.predicted.back().upper.head(4) - terminal.head(4)).array() <= 1e-6).all());
  EXPECT_LE(min_drain_steps(p, x, base_demand(), terminal), K);
}

TEST(SolveMpc, PlanMatchesLiftedSimulation) {
  const auto p = four_cell();
  VectorXd x(8);
  x << 30, 30, 30, 42, 0, 0, 0, 0;
  const auto cfg = config(8, recoverable_terminal());
  const auto s0 = LiftedState<double>::point(x);
  const auto d = DemandBounds<double>::point(base_demand());
  const auto th = ParamBounds<double>::point(p);
  const MpcResult r = solve_mpc(s0, d, th, cfg);
  ASSERT_TRUE(r.feasible);
  const auto traj = embedding::simulate_lifted(s0, r.plan, d, th);
  for (std::size_t k = 0; k < traj.size(); ++k) EXPECT_LT((traj[k].upper - r.predicted[k].upper).norm(), 1e-5);
  EXPECT_TRUE((r.u0.array() <= 40 + 1e-9).all());
}

TEST(Rollouts, HoldFillReachesTerminal) {
  const auto p = four_cell();
  VectorXd x(8);
  x << 30, 30, 30, 120, 0, 0, 0, 0;
  const auto cfg = config(60, recoverable_terminal());
  const auto rolls = hold_fill_rollouts(LiftedState<double>::point(x), DemandBounds<double>::point(base_demand()),
                                        ParamBounds<double>::point(p), cfg, 200);
  ASSERT_FALSE(rolls.empty());
  EXPECT_GE(rolls.front().entry, 0);
  for (std::size_t k = 1; k < rolls.size(); ++k)
    if (rolls[k].entry >= 0) {
      EXPECT_LE(rolls.front().entry, rolls[k].entry);
    }
}

}  // namespace
