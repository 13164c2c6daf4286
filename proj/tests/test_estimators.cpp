#include <gtest/gtest.h>

#include <cmath>

#include "ramp/estimators.hpp"

namespace {

using namespace ramp;
using namespace ramp::estimators;

FreewayParams<double> four_cell() { return FreewayParams<double>::homogeneous(4, 0.9, 0.5, 1.0 / 6, 160, 20, 0.9); }

VectorXd base_demand() {
  VectorXd l(4);
  l << 19.17, 1.67, 1.67, 1.67;
  return l;
}

ParamBounds<double> uncertain_box() {
  return {FreewayParams<double>::homogeneous(4, 0.95, 0.6, 0.3, 170, 24, 0.9),
          FreewayParams<double>::homogeneous(4, 0.7, 0.4, 0.1, 150, 16, 0.9)};
}

LiftedState<double> wide_prior() {
  LiftedState<double> s{VectorXd(8), VectorXd::Zero(8)};
  s.upper << VectorXd::Constant(4, 160), VectorXd::Constant(4, 1000);
  return s;
}

TEST(StateUpdate, MaskedCellCollapses) {
  VectorXd x(8);
  x << 30, 31, 32, 33, 1, 2, 3, 4;
  auto c = OutputModel::none(4);
  c.measured[0] = true;
  const auto e = state_update(wide_prior(), ctm::measure(x, c), c);
  EXPECT_DOUBLE_EQ(e.upper[0], 30);
  EXPECT_DOUBLE_EQ(e.lower[0], 30);
  EXPECT_DOUBLE_EQ(e.upper[1], 160);
  EXPECT_DOUBLE_EQ(e.lower[1], 0);
  EXPECT_EQ(VectorXd(e.upper.tail(4)), VectorXd(x.tail(4)));
  EXPECT_EQ(VectorXd(e.lower.tail(4)), VectorXd(x.tail(4)));
}

TEST(StateUpdate, FullAndEmptyMasks) {
  VectorXd x(8);
  x << 30, 31, 32, 33, 1, 2, 3, 4;
  const auto full = OutputModel::full(4);
  const auto e = state_update(wide_prior(), ctm::measure(x, full), full);
  EXPECT_EQ(e.upper, x);
  EXPECT_EQ(e.lower, x);
  const auto none = OutputModel::none(4);
  const auto n = state_update(wide_prior(), ctm::measure(x, none), none);
  EXPECT_EQ(VectorXd(n.upper.head(4)), VectorXd::Constant(4, 160));
  EXPECT_EQ(VectorXd(n.lower.tail(4)), VectorXd(x.tail(4)));
}

TEST(StateUpdate, ReadingOutsideBoxViolates) {
  LiftedState<double> s{VectorXd::Constant(8, 50), VectorXd::Constant(8, 40)};
  VectorXd x = VectorXd::Constant(8, 45);
  x[0] = 70;
  const auto full = OutputModel::full(4);
  EXPECT_THROW(state_update(s, ctm::measure(x, full), full), ContainmentViolation);
}

TEST(DemandUpdate, Identity) {
  DemandBounds<double> d{base_demand() * 1.1, base_demand() * 0.9};
  auto e = d;
  for (int k = 0; k < 1000; ++k) e = demand_update(e);
  EXPECT_EQ(e.upper, d.upper);
  EXPECT_EQ(e.lower, d.lower);
}

TEST(FreeflowIdentify, FirstCell) {
  std::array<VectorXd, 3> x{VectorXd::Constant(1, 30.0), VectorXd::Constant(1, 34.17), VectorXd::Constant(1, 36.255)};
  std::array<VectorXd, 2> r{VectorXd::Constant(1, 19.17), VectorXd::Constant(1, 19.17)};
  EXPECT_NEAR(freeflow_identify(0, x, r, 0).v, 0.5, 1e-12);
}

TEST(FreeflowIdentify, SecondCell) {
  std::array<VectorXd, 3> x{VectorXd(2), VectorXd(2), VectorXd(2)};
  x[0] << 30, 20;
  x[1] << 34.17, 25.17;
  x[2] << 36.255, 29.6315;
  VectorXd r(2);
  r << 19.17, 1.67;
  const auto e = freeflow_identify(1, x, {r, r}, 0.5);
  ASSERT_TRUE(e.beta.has_value());
  EXPECT_NEAR(*e.beta, 0.9, 1e-9);
  EXPECT_NEAR(e.v, 0.5, 1e-9);
}

TEST(FreeflowIdentify, ProportionalTrajectoryIsRankDeficient) {
  std::array<VectorXd, 3> x{VectorXd(2), VectorXd(2), VectorXd(2)};
  x[0] << 20, 10;
  x[1] << 30, 15;
  x[2] << 40, 20;
  VectorXd r = VectorXd::Zero(2);
  EXPECT_THROW(freeflow_identify(1, x, {r, r}, 0.5), RankDeficient);
}

TEST(FreeflowIdentify, CongestedReadingsRejected) {
  // A cell that grows with no inflow implies a negative speed.
  std::array<VectorXd, 3> x{VectorXd::Constant(1, 30.0), VectorXd::Constant(1, 40.0), VectorXd::Constant(1, 45.0)};
  std::array<VectorXd, 2> r{VectorXd::Zero(1), VectorXd::Zero(1)};
  EXPECT_THROW(freeflow_identify(0, x, r, 0), DomainError);
}

// Three free-flow readings of the four_cell network under u = lambda.
std::array<VectorXd, 3> freeflow_readings(const VectorXd& x0, std::array<VectorXd, 2>& inflow) {
  const auto p = four_cell();
  std::array<VectorXd, 3> x;
  VectorXd s(8);
  s << x0, VectorXd::Zero(4);
  for (int k = 0; k < 3; ++k) {
    x[k] = s.head(4);
    if (k < 2) {
      inflow[k] = base_demand();
      s = ctm::plant_step(p, s, base_demand(), base_demand());
    }
  }
  return x;
}

TEST(IdentifySweep, AllCellsExact) {
  VectorXd x0(4);
  x0 << 20, 25, 30, 35;
  std::array<VectorXd, 2> r;
  const auto x = freeflow_readings(x0, r);
  const auto s = full_identify_sweep(x, r, ArrayXb::Constant(4, true));
  ASSERT_TRUE(s.complete());
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(s.v[i], 0.5, 1e-9);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.beta[i], 0.9, 1e-9);
}

TEST(IdentifySweep, MissingCellThree) {
  VectorXd x0(4);
  x0 << 20, 25, 30, 35;
  std::array<VectorXd, 2> r;
  const auto x = freeflow_readings(x0, r);
  ArrayXb m = ArrayXb::Constant(4, true);
  m[2] = false;
  const auto s = full_identify_sweep(x, r, m);
  EXPECT_EQ(s.status[0], CellStatus::Identified);
  EXPECT_EQ(s.status[1], CellStatus::Identified);
  EXPECT_EQ(s.status[2], CellStatus::Unmeasured);
  EXPECT_EQ(s.status[3], CellStatus::UpstreamMissing);
  EXPECT_NEAR(s.v[1], 0.5, 1e-9);
  EXPECT_TRUE(std::isnan(s.v[3]));
  EXPECT_FALSE(s.complete());
}

TEST(IdentifySweep, EmptyCellDegenerate) {
  VectorXd x0(4);
  x0 << 20, 25, 30, 35;
  std::array<VectorXd, 2> r;
  auto x = freeflow_readings(x0, r);
  x[0][1] = 0;
  const auto s = full_identify_sweep(x, r, ArrayXb::Constant(4, true));
  EXPECT_EQ(s.status[0], CellStatus::Identified);
  EXPECT_EQ(s.status[1], CellStatus::Degenerate);
}

TEST(IdentifySweep, CollapseIntoBox) {
  auto box = uncertain_box();
  SweepResult s{VectorXd::Constant(4, 0.5), VectorXd::Constant(3, 0.9), std::vector<CellStatus>(4)};
  s.v[3] = 0.7;  // outside the box, left alone
  EXPECT_EQ(collapse_identified(box, s), 6);
  EXPECT_DOUBLE_EQ(box.upper.v[0], 0.5);
  EXPECT_DOUBLE_EQ(box.lower.beta[2], 0.9);
  EXPECT_DOUBLE_EQ(box.upper.v[3], 0.6);
}

struct Window {
  LiftedState<double> state0;
  std::vector<VectorXd> controls;
  std::vector<ctm::Observation<double>> obs;
  std::vector<DemandBounds<double>> demand;
};

Window simulate_window(const VectorXd& x0, int steps) {
  const auto p = four_cell();
  Window w{LiftedState<double>::point(x0), {}, {}, {}};
  VectorXd x = x0;
  for (int k = 0; k < steps; ++k) {
    const VectorXd u = VectorXd::Constant(4, 1.0);
    x = ctm::plant_step(p, x, u, base_demand());
    w.controls.push_back(u);
    w.obs.push_back(ctm::measure(x, OutputModel::full(4)));
    w.demand.push_back(DemandBounds<double>::point(base_demand()));
  }
  return w;
}

TEST(IntervalConsistency, TruthFeasibleWrongSpeedRefuted) {
  VectorXd x0(8);
  x0 << 30, 30, 30, 30, 5, 5, 5, 5;
  const auto w = simulate_window(x0, 2);
  const auto full = OutputModel::full(4);
  EXPECT_EQ(interval_consistency(ParamBounds<double>::point(four_cell()), w.state0, w.controls, w.obs, w.demand, full),
            Consistency::Feasible);
  auto fast = ParamBounds<double>::point(four_cell());
  fast.upper.v.setConstant(0.6);
  fast.lower.v.setConstant(0.55);
  EXPECT_EQ(interval_consistency(fast, w.state0, w.controls, w.obs, w.demand, full), Consistency::Infeasible);
  EXPECT_NE(interval_consistency(uncertain_box(), w.state0, w.controls, w.obs, w.demand, full),
            Consistency::Infeasible);
}

TEST(Estimator, ThetaBoxKeepsTruthAndShrinks) {
  const auto p = four_cell();
  const auto full = OutputModel::full(4);
  EstimatorConfig cfg;
  cfg.horizon = 2;
  cfg.identify = false;
  SetMembershipEstimator est(wide_prior(), DemandBounds<double>{base_demand() * 1.1, base_demand() * 0.9},
                             uncertain_box(), full, cfg);
  VectorXd x(8);
  x << 30, 30, 30, 120, 0, 0, 0, 0;
  const auto start = uncertain_box();
  for (int t = 0; t < 15; ++t) {
    est.update(ctm::measure(x, full));
    ASSERT_TRUE(est.theta().contains(p)) << t;
    ASSERT_TRUE(est.estimate().contains(x, 1e-9)) << t;
    const VectorXd u = VectorXd::Constant(4, 2.0).cwiseMin(VectorXd(x.tail(4)) + base_demand() * 0.9);
    est.predict(u);
    x = ctm::plant_step(p, x, u, base_demand());
    ASSERT_TRUE(est.predicted().contains(x, 1e-9)) << t;
  }
  const double width0 = (start.upper.v - start.lower.v).sum();
  EXPECT_LT((est.theta().upper.v - est.theta().lower.v).sum(), width0);
}

TEST(Estimator, PointBoxUnchanged) {
  const auto full = OutputModel::full(4);
  EstimatorConfig cfg;
  cfg.identify = false;
  const auto th = ParamBounds<double>::point(four_cell());
  SetMembershipEstimator est(wide_prior(), DemandBounds<double>::point(base_demand()), th, full, cfg);
  VectorXd x(8);
  x << 30, 30, 30, 120, 0, 0, 0, 0;
  for (int t = 0; t < 3; ++t) {
    est.update(ctm::measure(x, full));
    est.predict(base_demand());
    x = ctm::plant_step(four_cell(), x, base_demand(), base_demand());
  }
  EXPECT_TRUE(est.theta().is_point());
  EXPECT_EQ(est.theta().upper.v, th.upper.v);
}

TEST(Estimator, FreeFlowIdentificationCollapsesSpeedAndSplit) {
  const auto full = OutputModel::full(4);
  EstimatorConfig cfg;
  cfg.identify = true;
  cfg.prune_budget = 0;
  SetMembershipEstimator est(wide_prior(), DemandBounds<double>::point(base_demand()), uncertain_box(), full, cfg);
  VectorXd x(8);
  x << 20, 25, 30, 35, 0, 0, 0, 0;
  for (int t = 0; t < 3; ++t) {
    est.update(ctm::measure(x, full), true);
    est.predict(base_demand());
    x = ctm::plant_step(four_cell(), x, base_demand(), base_demand());
  }
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(est.theta().upper.v[i], 0.5, 1e-9);
    EXPECT_NEAR(est.theta().lower.v[i], 0.5, 1e-9);
  }
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(est.theta().upper.beta[i], 0.9, 1e-9);
}

}  // namespace
