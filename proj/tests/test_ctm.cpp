#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ramp/ctm.hpp"

namespace {

using namespace ramp;
using ctm::FreewayParams;

FreewayParams<double> four_cell() { return FreewayParams<double>::homogeneous(4, 0.9, 0.5, 1.0 / 6, 160, 20, 0.9); }

VectorXd base_demand() {
  VectorXd l(4);
  l << 19.17, 1.67, 1.67, 1.67;
  return l;
}

TEST(CtmDemand, FreeFlowDropAndZero) {
  const auto p = four_cell();
  EXPECT_DOUBLE_EQ(ctm::demand(p, 0, 30.0), 15.0);
  EXPECT_DOUBLE_EQ(ctm::demand(p, 0, 60.0), 18.0);
  EXPECT_DOUBLE_EQ(ctm::demand(p, 0, 0.0), 0.0);
  // The critical density itself keeps full capacity.
  EXPECT_DOUBLE_EQ(ctm::demand(p, 0, 40.0), 20.0);
  EXPECT_THROW(ctm::demand(p, 0, 200.0), DomainError);
}

TEST(CtmSupply, JamCapAndFirstCell) {
  const auto p = four_cell();
  EXPECT_DOUBLE_EQ(ctm::supply(p, 1, 160.0), 0.0);
  EXPECT_NEAR(ctm::supply(p, 1, 100.0), 60.0 / 5.4, 1e-12);
  EXPECT_DOUBLE_EQ(ctm::supply(p, 1, 0.0), 20.0);
  EXPECT_THROW(ctm::supply(p, 0, 10.0), DomainError);
}

TEST(CtmRampOutflow, QueueSpaceAndZeroLimits) {
  const auto p = FreewayParams<double>::homogeneous(1, 0.9, 0.5, 1.0 / 6, 160, 20, 0.9);
  VectorXd x(2), u(1), lam(1);
  x << 10, 1;
  u << 5;
  lam << 2;
  EXPECT_DOUBLE_EQ(ctm::ramp_outflow(p, x, u, lam)[0], 3.0);  // queue plus arrivals
  VectorXd x2(2);
  x2 << 160, 8;  // jammed: outflow 18, room 18
  u << 5;
  EXPECT_DOUBLE_EQ(ctm::ramp_outflow(p, x2, u, lam)[0], 5.0);
  u << 0;
  EXPECT_DOUBLE_EQ(ctm::ramp_outflow(p, x2, u, lam)[0], 0.0);
}

TEST(CtmRampOutflow, SpaceLimited) {
  // Downstream cell nearly jammed and blocked by its own congested neighbour.
  auto p = FreewayParams<double>::homogeneous(2, 0.9, 0.5, 1.0 / 6, 160, 20, 0.9);
  VectorXd x(4), u(2), lam(2);
  x << 0, 159, 0, 10;
  u << 0, 5;
  lam << 0, 0;
  // Cell 2 sends min(79.5, 18) = 18 and receives nothing, room = 160 - 141 = 19.
  EXPECT_DOUBLE_EQ(ctm::ramp_outflow(p, x, u, lam)[1], 5.0);
  x << 0, 160, 0, 10;
  p.alpha.setConstant(0.05);  // outflow 1
  EXPECT_DOUBLE_EQ(ctm::ramp_outflow(p, x, u, lam)[1], 1.0);
}

TEST(CtmPlant, EquilibriumIsFixedPoint) {
  const auto p = four_cell();
  const VectorXd lam = base_demand();
  VectorXd x(8);
  x << ctm::equilibrium_uncongested(p, lam), VectorXd::Zero(4);
  const VectorXd next = ctm::plant_step(p, x, lam, lam);
  EXPECT_LT((next - x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((ctm::compact_step(p, x, lam, lam) - next).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CtmPlant, ZeroStaysZero) {
  const auto p = four_cell();
  const VectorXd z = VectorXd::Zero(8), z4 = VectorXd::Zero(4);
  EXPECT_EQ(ctm::plant_step(p, z, z4, z4), z);
}

TEST(CtmPlant, HoldingRampsGrowsQueuesByDemand) {
  const auto p = four_cell();
  const VectorXd lam = base_demand();
  VectorXd x(8);
  x << ctm::equilibrium_uncongested(p, lam), VectorXd::Zero(4);
  const VectorXd next = ctm::plant_step(p, x, VectorXd(VectorXd::Zero(4)), lam);
  EXPECT_LT((next.tail(4) - lam).cwiseAbs().maxCoeff(), 1e-12);
  const VectorXd f = ctm::mainline_outflow(p, VectorXd(x.head(4)));
  for (int i = 0; i < 4; ++i) {
    const double in = i > 0 ? 0.9 * f[i - 1] : 0.0;
    EXPECT_NEAR(next[i], x[i] + in - f[i], 1e-12);
  }
}

TEST(CtmPlant, ConservationAndInvarianceRandomized) {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> U(0, 1);
  const auto p = four_cell();
  for (int k = 0; k < 20000; ++k) {
    VectorXd x(8), u(4), lam(4);
    for (int i = 0; i < 4; ++i) {
      x[i] = 160 * U(g);
      x[4 + i] = 30 * U(g);
      u[i] = 40 * U(g);
      lam[i] = 20 * U(g);
    }
    const VectorXd next = ctm::plant_step(p, x, u, lam);
    const VectorXd f = ctm::mainline_outflow(p, VectorXd(x.head(4)));
    const VectorXd r = ctm::ramp_outflow(p, x, u, lam);
    for (int i = 0; i < 4; ++i) {
      const double in = (i > 0 ? 0.9 * f[i - 1] : 0.0) + r[i];
      ASSERT_NEAR(next[i] - x[i], in - f[i], 1e-12);
      ASSERT_GE(next[i], 0);
      ASSERT_LE(next[i], 160);
      ASSERT_GE(next[4 + i], 0);
    }
    // The compact model agrees whenever its precondition holds.
    if ((r - u).cwiseAbs().maxCoeff() == 0) {
      ASSERT_LT((ctm::compact_step(p, x, u, lam) - next).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(CtmCompact, PreconditionViolations) {
  const auto p = four_cell();
  VectorXd x = VectorXd::Zero(8), u = VectorXd::Constant(4, 5), lam = VectorXd::Constant(4, 1);
  EXPECT_THROW(ctm::compact_step(p, x, u, lam), ContractError);
}

TEST(CtmEquilibrium, FlowAndUncongestedState) {
  const auto p = four_cell();
  const VectorXd f = ctm::equilibrium_flow(p, base_demand());
  const double fe[] = {19.17, 18.923, 18.7007, 18.50063};
  const double xe[] = {38.34, 37.846, 37.4014, 37.00126};
  const VectorXd xu = ctm::equilibrium_uncongested(p, base_demand());
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(f[i], fe[i], 1e-9);
    EXPECT_NEAR(xu[i], xe[i], 1e-9);
  }
  VectorXd e1 = VectorXd::Zero(4);
  e1[0] = 1;
  const VectorXd g = ctm::equilibrium_flow(p, e1);
  EXPECT_NEAR(g[3], 0.729, 1e-12);
  EXPECT_EQ(ctm::equilibrium_uncongested(p, VectorXd(VectorXd::Zero(4))), VectorXd(VectorXd::Zero(4)));
  VectorXd at_cap = VectorXd::Zero(4);
  at_cap[0] = 20;
  EXPECT_DOUBLE_EQ(ctm::equilibrium_uncongested(p, at_cap)[0], 40.0);
  VectorXd over = base_demand();
  over[0] = 25;
  EXPECT_THROW(ctm::equilibrium_uncongested(p, over), AdmissibilityError);
}

TEST(CtmAdmissible, ConstantOverCapacityAndPeriodic) {
  const auto p = four_cell();
  Eigen::MatrixXd seq(4, 400);
  for (int t = 0; t < 400; ++t) seq.col(t) = base_demand();
  EXPECT_TRUE(ctm::check_admissible(p, seq));
  Eigen::MatrixXd bad = seq;
  bad.row(0).setConstant(25);
  EXPECT_FALSE(ctm::check_admissible(p, bad));
  // Sampled over whole periods the running mean settles on the base demand.
  const int period_steps = 3141;  // 100 periods of 2 pi / 0.2 is about 3141.6 steps
  Eigen::MatrixXd per(4, period_steps);
  for (int t = 0; t < period_steps; ++t) per.col(t) = base_demand() * (1 + 0.05 * std::sin(0.2 * t));
  EXPECT_TRUE(ctm::check_admissible(p, per, 200));
}

TEST(CtmMeasure, Masks) {
  VectorXd x(8);
  x << 30, 31, 32, 33, 1, 2, 3, 4;
  const auto full = ctm::measure(x, ctm::OutputModel::full(4));
  EXPECT_EQ(full.mainline, x.head(4));
  EXPECT_EQ(full.ramps, x.tail(4));
  auto one = ctm::OutputModel::none(4);
  one.measured[0] = true;
  const auto y = ctm::measure(x, one);
  EXPECT_DOUBLE_EQ(y.mainline[0], 30);
  EXPECT_FALSE(y.measured[1]);
  const auto none = ctm::measure(x, ctm::OutputModel::none(4));
  EXPECT_EQ(none.ramps, x.tail(4));
}

TEST(CtmParams, ValidationRejectsBadValues) {
  auto p = four_cell();
  p.v[1] = 1.2;
  EXPECT_THROW(p.validate(), DomainError);
  p = four_cell();
  p.beta[0] = 1.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = four_cell();
  p.c_max[2] = 200;  // critical density above jam density
  EXPECT_THROW(p.validate(), DomainError);
  EXPECT_NO_THROW(four_cell().validate());
}

}  // namespace
