// Randomized invariants. Every generator is a fixed-seed mt19937 so failures
// reproduce exactly.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hjlab/cover.hpp"
#include "hjlab/effective.hpp"
#include "hjlab/expression.hpp"
#include "hjlab/hamiltonian.hpp"
#include "hjlab/lax_oleinik.hpp"
#include "oracles.hpp"

using namespace hjlab;

namespace {

// Random periodic potential: a few cosine and sine modes.
struct RandomPotential {
  std::vector<double> a, b;
  double operator()(double x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
      s += a[k] * std::cos(kTwoPi * (k + 1) * x) + b[k] * std::sin(kTwoPi * (k + 1) * x);
    return s;
  }
  double max() const {
    double m = -INFINITY;
    for (int i = 0; i < 4096; ++i) m = std::max(m, (*this)(i / 4096.0));
    return m;
  }
  double min() const {
    double m = INFINITY;
    for (int i = 0; i < 4096; ++i) m = std::min(m, (*this)(i / 4096.0));
    return m;
  }
};

RandomPotential random_potential(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::uniform_int_distribution<int> modes(1, 3);
  RandomPotential p;
  for (int k = modes(rng); k > 0; --k) {
    p.a.push_back(u(rng));
    p.b.push_back(u(rng));
  }
  return p;
}

HamiltonianModel mechanical(const RandomPotential& v) {
  return HamiltonianModel::mechanical(1, [v](std::span<const double> x) { return v(x[0]); });
}

ValueField random_field(std::mt19937& rng, double eps, int cr, std::int64_t half, double& lip) {
  const auto text = oracle::random_datum(rng, 0.5, lip);
  const auto e = Expression::parse(text, 1);
  return sample_field(eps, cr, IndexBox{{-half}, {half}}, half * eps / cr, [e](std::span<const double> y) { return e(y); });
}

}  // namespace

TEST(Property, YoungInequalityForRandomPotentials) {
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> up(-6.0, 6.0);
  for (int trial = 0; trial < 8; ++trial) {
    const auto V = random_potential(rng);
    const auto m = mechanical(V);
    const auto t = legendre_dual(m, 32, 5.0, 101);
    for (std::int64_t ix = 0; ix < t.x_count(); ++ix)
      for (std::int64_t iv = 0; iv < t.v_count(); iv += 5) {
        double x[1], v[1];
        t.position(ix, x);
        t.velocity(iv, v);
        // Mechanical duals are explicit: v^2/2 - V(x).
        EXPECT_NEAR(t.L(ix, iv), 0.5 * v[0] * v[0] - V(x[0]), 1e-9);
        const double p = up(rng);
        EXPECT_GE(t.L(ix, iv) + m(x, {&p, 1}), p * v[0] - 1e-9);
      }
  }
}

TEST(Property, ConstantsSatisfyTheirChain) {
  std::mt19937 rng(202);
  std::uniform_real_distribution<double> uk(0.2, 2.0);
  for (int trial = 0; trial < 6; ++trial) {
    const auto m = mechanical(random_potential(rng));
    const auto t = legendre_dual(m, 32, 28.0, 561, PSearch{40.0, 801, 1e-9});
    const double K = uk(rng);
    const auto c = derive_constants(m, t, K);
    EXPECT_GT(c.A, K);
    EXPECT_GT(c.b2, K);
    EXPECT_GE(c.Q, c.b2);
    EXPECT_GE(c.Q, c.c1);
    const auto a = audit_constants(c, t);
    EXPECT_TRUE(a.ok()) << (a.failures.empty() ? "" : a.failures.front());
  }
}

TEST(Property, LaxStepIsMonotoneAndCommutesWithConstants) {
  std::mt19937 rng(303);
  std::uniform_real_distribution<double> uc(-2.0, 2.0);
  const auto m = mechanical(random_potential(rng));
  const auto t = legendre_dual(m, 64, 28.0, 561, PSearch{40.0, 801, 1e-9});
  const auto c = derive_constants(m, t, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    double lip = 0.0, lip2 = 0.0;
    const auto f = random_field(rng, 0.25, 16, 160, lip);
    const auto text = oracle::random_nonnegative(rng, 0.5, lip2);
    const auto g = Expression::parse(text, 1);
    auto fg = f;
    for (std::int64_t i = 0; i < f.size(); ++i) {
      double y;
      f.point(i, {&y, 1});
      fg.values[i] += g({&y, 1});
    }
    const auto cfg = make_step_config(c, 0.25, 16, 1.0 / 64.0);
    const auto a = lax_step(f, cfg, t), b = lax_step(fg, cfg, t);
    for (std::size_t i = 0; i < a.values.size(); ++i) ASSERT_LE(a.values[i], b.values[i]);

    const double k = uc(rng);
    auto fk = f;
    for (auto& v : fk.values) v += k;
    const auto ak = lax_step(fk, cfg, t);
    for (std::size_t i = 0; i < a.values.size(); ++i) ASSERT_NEAR(ak.values[i] - a.values[i], k, 1e-12);
  }
}

// With H independent of x the Lipschitz constant of the data never grows.
TEST(Property, FreeParticleDoesNotIncreaseLipschitz) {
  std::mt19937 rng(404);
  const auto m = HamiltonianModel::mechanical(1, [](std::span<const double>) { return 0.0; });
  const auto t = legendre_dual(m, 8, 28.0, 561, PSearch{40.0, 801, 1e-9});
  const auto c = derive_constants(m, t, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    double lip = 0.0;
    const auto f = random_field(rng, 0.5, 16, 160, lip);
    const auto cfg = make_step_config(c, 0.5, 16, 1.0 / 32.0);
    const auto u = solve(f, 0.25, cfg, t);
    EXPECT_LE(space_lipschitz(u.back()), space_lipschitz(f) + 1e-9);
    EXPECT_LE(space_lipschitz(f), lip + 1e-9);
  }
}

TEST(Property, SymbolicLipschitzDominatesGeneratorBound) {
  std::mt19937 rng(505);
  for (int trial = 0; trial < 50; ++trial) {
    double lip = 0.0;
    const auto e = Expression::parse(oracle::random_datum(rng, 1.0, lip), 1);
    const auto b = e.lipschitz_bound();
    ASSERT_TRUE(b.has_value()) << e.text();
    EXPECT_LE(*b, lip + 1e-12) << e.text();
  }
}

TEST(Property, PeriodMapEquivarianceForRandomForms) {
  std::mt19937 rng(606);
  std::uniform_real_distribution<double> ux(-5.0, 5.0), uc(0.5, 2.0);
  std::uniform_int_distribution<int> shift(-4, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto V = random_potential(rng);
    const double c = uc(rng);
    const FormBasis f{ClosedOneForm{{c}, [V](std::span<const double> x) { return 0.1 * V(x[0]); }}};
    const double x = ux(rng), x0 = ux(rng);
    const int k = shift(rng);
    const double xs = x + k;
    const double d = period_map(f, {&xs, 1}, {&x0, 1})[0] - period_map(f, {&x, 1}, {&x0, 1})[0];
    EXPECT_NEAR(d, c * k, 1e-9);
  }
}

// max V <= hbar(P) <= P^2/2 + max V for mechanical H.
TEST(Property, EffectiveHamiltonianBounds) {
  std::mt19937 rng(707);
  std::uniform_real_distribution<double> uP(-2.0, 2.0);
  const auto forms = coordinate_forms(1);
  for (int trial = 0; trial < 4; ++trial) {
    const auto V = random_potential(rng);
    const auto m = mechanical(V);
    const auto t = legendre_dual(m, 64, 28.0, 561, PSearch{40.0, 801, 1e-9});
    LongtimeConfig lc;
    lc.cell_res = 64;
    lc.T = 10.0;
    const double P = uP(rng);
    const double hb = effective_longtime(m, t, {&P, 1}, forms, lc).hbar;
    EXPECT_GE(hb, V.max() - 0.02) << P;
    EXPECT_LE(hb, 0.5 * P * P + V.max() + 0.02) << P;
    EXPECT_GE(hb, 0.5 * P * P + V.min() - 0.02) << P;
  }
}
