#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hjlab/effective.hpp"
#include "hjlab/error.hpp"
#include "oracles.hpp"

using namespace hjlab;

namespace {

HamiltonianModel free_model() {
  return HamiltonianModel::mechanical(1, [](std::span<const double>) { return 0.0; });
}

HamiltonianModel pendulum() {
  return HamiltonianModel::mechanical(1, [](std::span<const double> x) { return std::cos(kTwoPi * x[0]); });
}

LagrangianTable table_for(const HamiltonianModel& m, int x_res) {
  return legendre_dual(m, x_res, 28.0, 561, PSearch{40.0, 801, 1e-9});
}

LongtimeConfig quick() {
  LongtimeConfig c;
  c.cell_res = 128;
  c.T = 10.0;
  return c;
}

}  // namespace

TEST(BoxGrid, PointsAndBoundary) {
  const auto g = BoxGrid::uniform(2, -1.0, 1.0, 5);
  EXPECT_EQ(g.size(), 25);
  EXPECT_DOUBLE_EQ(g.step(0), 0.5);
  double p[2];
  g.point(7, p);
  EXPECT_DOUBLE_EQ(p[0], -0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.0);
  EXPECT_TRUE(g.on_boundary(0));
  EXPECT_FALSE(g.on_boundary(12));
}

TEST(Effective, FreeParticleLongtime) {
  const auto m = free_model();
  const auto t = table_for(m, 128);
  const auto forms = coordinate_forms(1);
  for (double P : {-1.5, 0.0, 1.0}) {
    const auto r = effective_longtime(m, t, {&P, 1}, forms, quick());
    EXPECT_NEAR(r.hbar, 0.5 * P * P, 1e-3) << P;
    EXPECT_LT(r.drift, 0.1);
    EXPECT_EQ(r.corrector.w.size(), 128u);
    EXPECT_DOUBLE_EQ(r.corrector.w[0], 0.0);
  }
}

TEST(Effective, PendulumFlatPieceAndOutside) {
  const auto m = pendulum();
  const auto t = table_for(m, 128);
  const auto forms = coordinate_forms(1);
  for (double P : {0.0, 0.6, 1.2, 2.0}) {
    const auto r = effective_longtime(m, t, {&P, 1}, forms, quick());
    EXPECT_NEAR(r.hbar, oracle::pendulum_hbar(P), 0.02) << P;
  }
}

TEST(Effective, InfSupBoundsAndAgreement) {
  const auto m = pendulum();
  const auto forms = coordinate_forms(1);
  for (double P : {0.0, 2.0}) {
    InfSupConfig cfg;
    cfg.x_res = 256;
    const auto r = effective_infsup(m, {&P, 1}, forms, 6, cfg);
    const double flat = 0.5 * P * P + 1.0;  // the phi = 0 value
    EXPECT_LE(r.value, flat + 1e-12);
    EXPECT_GE(r.value, oracle::pendulum_hbar(P) - 1e-3);
    EXPECT_NEAR(r.value, oracle::pendulum_hbar(P), 0.03) << P;
    EXPECT_EQ(r.theta.size(), 12u);
  }
}

TEST(Effective, CohomologousFormsGiveTheSameValue) {
  const auto m = pendulum();
  const auto t = table_for(m, 128);
  ClosedOneForm w{{1.0}, [](std::span<const double> x) { return 0.05 * std::sin(kTwoPi * x[0]); }};
  const double P = 1.8;
  const auto a = effective_longtime(m, t, {&P, 1}, coordinate_forms(1), quick());
  const auto b = effective_longtime(m, t, {&P, 1}, FormBasis{w}, quick());
  EXPECT_NEAR(a.hbar, b.hbar, 5e-3);
}

TEST(Effective, CorrectorResidual) {
  const auto m = pendulum();
  const auto t = table_for(m, 256);
  const auto forms = coordinate_forms(1);
  const double P = 0.0;
  auto r = effective_longtime(m, t, {&P, 1}, forms, LongtimeConfig{});
  corrector_residual(m, forms, 0.1, r.corrector);
  EXPECT_GE(r.corrector.residual_fraction, 0.9);
  const double x = 0.5;
  EXPECT_NEAR(r.corrector.value({&x, 1}), r.corrector.w[128], 1e-12);
}

TEST(Effective, ConvexityCertificate) {
  const auto g = BoxGrid::uniform(1, -1.0, 1.0, 5);
  const std::vector<double> convex{1.0, 0.25, 0.0, 0.25, 1.0};
  const std::vector<double> dent{1.0, 0.25, 0.5, 0.25, 1.0};
  EXPECT_LE(grid_convexity_violation(g, convex), 0.0);
  EXPECT_NEAR(grid_convexity_violation(g, dent), 0.5, 1e-15);
}

TEST(Effective, DualOfQuadraticTable) {
  EffectiveTable e;
  e.P_grid = BoxGrid::uniform(1, -3.0, 3.0, 601);
  for (std::int64_t i = 0; i < e.P_grid.size(); ++i) {
    double P;
    e.P_grid.point(i, {&P, 1});
    e.hbar.push_back(0.5 * P * P);
    e.method.push_back("exact");
  }
  const auto [lo, hi] = dual_velocity_range(e);
  EXPECT_LE(lo, -2.9);
  EXPECT_GE(hi, 2.9);
  const auto d = effective_lagrangian(e, BoxGrid::uniform(1, -2.0, 2.0, 41));
  EXPECT_TRUE(d.convex);
  for (double v : {-2.0, -0.7, 0.0, 1.3}) EXPECT_NEAR(d.lbar_at({&v, 1}), 0.5 * v * v, 1e-4);
  const double P = 0.55;
  EXPECT_NEAR(d.hbar_at({&P, 1}), 0.5 * P * P, 1e-4);
  const double far = 3.5;
  EXPECT_THROW(d.hbar_at({&far, 1}), Error);
  try {
    effective_lagrangian(e, BoxGrid::uniform(1, -4.0, 4.0, 9));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::DualRangeExceeded);
  }
  std::ostringstream os;
  write_lbar_csv(os, d);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "v,lbar");
  std::ostringstream hs;
  write_hbar_csv(hs, d);
  EXPECT_EQ(hs.str().substr(0, hs.str().find('\n')), "P,hbar,method");
}
