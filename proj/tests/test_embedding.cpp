#include <gtest/gtest.h>

#include <random>

#include "ramp/embedding.hpp"

namespace {

using namespace ramp;
using embedding::DemandBounds;
using embedding::LiftedState;
using embedding::ParamBounds;
using ctm::FreewayParams;

FreewayParams<double> four_cell() { return FreewayParams<double>::homogeneous(4, 0.9, 0.5, 1.0 / 6, 160, 20, 0.9); }

VectorXd base_demand() {
  VectorXd l(4);
  l << 19.17, 1.67, 1.67, 1.67;
  return l;
}

ParamBounds<double> uncertain_box() {
  ParamBounds<double> b{FreewayParams<double>::homogeneous(4, 0.95, 0.6, 0.3, 160, 24, 0.9),
                        FreewayParams<double>::homogeneous(4, 0.7, 0.4, 0.1, 160, 16, 0.9)};
  return b;
}

TEST(TildeDemand, DiagonalAndHandValues) {
  const auto p = four_cell();
  EXPECT_DOUBLE_EQ(embedding::tilde_demand(p, p, 0, 30.0, 30.0), 15.0);
  EXPECT_DOUBLE_EQ(embedding::tilde_demand(p, p, 0, 30.0, 60.0), 15.0);
  EXPECT_DOUBLE_EQ(embedding::tilde_demand(p, p, 0, 50.0, 60.0), 18.0);
}

TEST(TildeSupply, AgreesWithSupplyAndClamps) {
  const auto p = four_cell();
  EXPECT_NEAR(embedding::tilde_supply(p, p, 1, 100.0), ctm::supply(p, 1, 100.0), 1e-12);
  EXPECT_DOUBLE_EQ(embedding::tilde_supply(p, p, 1, 160.0), 0.0);
  EXPECT_DOUBLE_EQ(embedding::tilde_supply(p, p, 1, 170.0), 0.0);
}

TEST(Decomposition, DiagonalEqualsCompactStep) {
  const auto p = four_cell();
  const VectorXd lam = base_demand();
  VectorXd x(8);
  x << 30, 30, 30, 120, 2, 2, 2, 2;
  const VectorXd u = VectorXd::Constant(4, 1.0);
  EXPECT_LT((embedding::decomposition_F(x, x, u, lam, lam, p, p) - ctm::compact_step(p, x, u, lam)).norm(), 1e-12);
}

TEST(Decomposition, UpperBracketsCompactAtEquilibrium) {
  const auto p = four_cell();
  const VectorXd lam = base_demand();
  VectorXd xu(8), zero = VectorXd::Zero(8);
  xu << ctm::equilibrium_uncongested(p, lam), VectorXd::Zero(4);
  const auto box = uncertain_box();
  const VectorXd up = embedding::decomposition_F(xu, zero, lam, lam, lam, box.upper, box.lower);
  const VectorXd truth = ctm::compact_step(p, xu, lam, lam);
  EXPECT_TRUE(((up - truth).array() >= -1e-12).all());
}

TEST(Decomposition, ZeroStateRampsGainDemand) {
  const auto p = four_cell();
  const VectorXd lam = base_demand(), z = VectorXd::Zero(8), u = VectorXd::Zero(4);
  const VectorXd next = embedding::decomposition_F(z, z, u, lam, lam, p, p);
  EXPECT_EQ(VectorXd(next.head(4)), VectorXd::Zero(4));
  EXPECT_EQ(VectorXd(next.tail(4)), lam);
}

TEST(LiftedStep, PointBoxMatchesCompactStep) {
  const auto p = four_cell();
  const VectorXd lam = base_demand();
  VectorXd x(8);
  x << 30, 30, 30, 120, 0, 0, 0, 0;
  const auto s = embedding::lifted_step(LiftedState<double>::point(x), lam, DemandBounds<double>::point(lam),
                                        ParamBounds<double>::point(p));
  const VectorXd c = ctm::compact_step(p, x, lam, lam);
  EXPECT_LT((s.upper - c).norm(), 1e-12);
  EXPECT_LT((s.lower - c).norm(), 1e-12);
}

TEST(LiftedStep, LowerComponentIsSwappedCall) {
  const auto box = uncertain_box();
  const VectorXd lam = base_demand();
  LiftedState<double> s{VectorXd(8), VectorXd(8)};
  s.upper << 50, 60, 70, 120, 5, 5, 5, 5;
  s.lower << 20, 30, 40, 100, 5, 5, 5, 5;
  const VectorXd u = VectorXd::Constant(4, 1.0);
  const DemandBounds<double> d{lam * 1.1, lam * 0.9};
  const auto next = embedding::lifted_step(s, u, d, box);
  const VectorXd up = embedding::decomposition_F(s.upper, s.lower, u, d.upper, d.lower, box.upper, box.lower);
  const VectorXd lo = embedding::decomposition_F(s.lower, s.upper, u, d.lower, d.upper, box.lower, box.upper);
  EXPECT_LT((next.upper - up).norm(), 1e-12);
  EXPECT_LT((next.lower - lo).norm(), 1e-12);
  EXPECT_TRUE(((next.upper - next.lower).array() >= 0).all());
}

TEST(LiftedStep, WiderBoxContainsNarrowerTube) {
  const VectorXd lam = base_demand();
  auto wide = uncertain_box();
  auto narrow = wide;
  narrow.upper.v.setConstant(0.55);
  narrow.lower.v.setConstant(0.45);
  LiftedState<double> s{VectorXd(8), VectorXd(8)};
  s.upper << 40, 40, 40, 120, 0, 0, 0, 0;
  s.lower << 30, 30, 30, 110, 0, 0, 0, 0;
  DemandBounds<double> d{lam * 1.1, lam * 0.9};
  auto a = s, b = s;
  for (int k = 0; k < 10; ++k) {
    const VectorXd u = VectorXd::Constant(4, 0.5);
    a = embedding::lifted_step(a, u, d, wide);
    b = embedding::lifted_step(b, u, d, narrow);
    EXPECT_TRUE(((a.upper - b.upper).array() >= -1e-9).all());
    EXPECT_TRUE(((b.lower - a.lower).array() >= -1e-9).all());
  }
}

TEST(SimulateLifted, IdentityOneStepAndPointComposition) {
  const auto p = four_cell();
  const VectorXd lam = base_demand();
  VectorXd x(8);
  x << 30, 30, 30, 120, 0, 0, 0, 0;
  const auto s0 = LiftedState<double>::point(x);
  const auto d = DemandBounds<double>::point(lam);
  const auto th = ParamBounds<double>::point(p);
  EXPECT_EQ(embedding::simulate_lifted(s0, std::vector<VectorXd>{}, d, th).back().upper, x);
  std::vector<VectorXd> u(5, lam);
  const auto traj = embedding::simulate_lifted(s0, u, d, th);
  EXPECT_LT((traj[1].upper - embedding::lifted_step(s0, lam, d, th).upper).norm(), 1e-12);
  VectorXd c = x;
  for (int k = 0; k < 5; ++k) c = ctm::compact_step(p, c, lam, lam);
  EXPECT_LT((traj[5].upper - c).norm(), 1e-9);
}

TEST(LiftedStep, SaturatingContainsPlantWhenRampCannotRelease) {
  const auto box = uncertain_box();
  auto truth = four_cell();
  const VectorXd lam = base_demand();
  VectorXd x(8);
  x << 30, 30, 30, 120, 0, 0, 0, 0;
  LiftedState<double> s{x, x};
  s.upper.head(4).array() += 5;
  const VectorXd u = VectorXd::Constant(4, 40);  // more than the ramps hold
  const auto next = embedding::lifted_step_saturating(s, u, DemandBounds<double>{lam * 1.1, lam * 0.9}, box);
  EXPECT_TRUE(next.contains(ctm::plant_step(truth, x, u, lam), 1e-9));
}

}  // namespace
