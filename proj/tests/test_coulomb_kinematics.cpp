#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kepler_oracle.hpp"
#include "rydberg/coulomb_kinematics.hpp"
#include "rydberg/errors.hpp"

using namespace rydberg;
constexpr double kPi = std::numbers::pi;

TEST(Energy, KnownLevels) {
  EXPECT_DOUBLE_EQ(energy(1.0), -0.5);
  EXPECT_DOUBLE_EQ(energy(10.0), -0.005);
  EXPECT_DOUBLE_EQ(energy(50.0), -2.0e-4);
  EXPECT_THROW(energy(0.5), DomainError);
}

TEST(OrbitParams, RejectsInvalid) {
  EXPECT_THROW(OrbitParams::make(10, 11), DomainError);
  EXPECT_THROW(OrbitParams::make(10, 0), DomainError);
  EXPECT_THROW(OrbitParams::make(0.5, 0.2), DomainError);
  EXPECT_NEAR(OrbitParams::make(10, 9).eccentricity(), std::sqrt(0.19), 1e-15);
}

TEST(RadialMomentum, CircularOrbitIsZero) {
  EXPECT_EQ(radial_momentum(100.0, OrbitParams::make(10, 10)), 0.0);
}

TEST(RadialMomentum, HandEvaluation) {
  // 2E - l0^2/r^2 + 2/r = -0.01 - 0.0081 + 0.02 = 0.0019
  EXPECT_NEAR(radial_momentum(100.0, OrbitParams::make(10, 9)), std::sqrt(0.0019), 1e-15);
}

TEST(RadialMomentum, VanishesAtTurningPoints) {
  const auto o = OrbitParams::make(10, 9);
  const auto tp = turning_points(o);
  EXPECT_LE(radial_momentum(tp.r_minus, o), 1e-12);
  EXPECT_LE(radial_momentum(tp.r_plus, o), 1e-12);
}

TEST(RadialMomentum, OutsideOrbitReportsRadii) {
  const auto o = OrbitParams::make(10, 9);
  try {
    radial_momentum(200.0, o);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("200"), std::string::npos);
    EXPECT_NE(msg.find("143.58"), std::string::npos);
  }
}

TEST(TurningPoints, QuadraticRootOracle) {
  const auto o = OrbitParams::make(10, 9);
  const auto tp = turning_points(o);
  // 2 E r^2 + 2 r - l0^2 = 0 with E = -0.005
  const double A = 2.0 * -0.005, B = 2.0, C = -81.0;
  const double disc = std::sqrt(B * B - 4 * A * C);
  const double r1 = (-B + disc) / (2 * A), r2 = (-B - disc) / (2 * A);
  EXPECT_NEAR(tp.r_minus, std::min(r1, r2), 1e-10);
  EXPECT_NEAR(tp.r_plus, std::max(r1, r2), 1e-10);
  EXPECT_NEAR(tp.r_minus, 56.411, 5e-4);
  EXPECT_NEAR(tp.r_plus, 143.589, 5e-4);
}

TEST(TurningPoints, Circular) {
  const auto tp = turning_points(OrbitParams::make(10, 10));
  EXPECT_DOUBLE_EQ(tp.r_minus, 100.0);
  EXPECT_DOUBLE_EQ(tp.r_plus, 100.0);
}

TEST(Quadrature, EmptyIntegralAtInnerTurningPoint) {
  const auto o = OrbitParams::make(10, 9);
  const double rm = turning_points(o).r_minus;
  EXPECT_EQ(radial_action_quadrature(rm, o), 0.0);
  EXPECT_EQ(phi0_quadrature(rm, o), 0.0);
  EXPECT_EQ(t0_quadrature(rm, o), 0.0);
}

TEST(Quadrature, HalfCycleClosedForms) {
  const auto o = OrbitParams::make(10, 9);
  const double rp = turning_points(o).r_plus;
  EXPECT_NEAR(radial_action_quadrature(rp, o) / kPi, 1.0, 1e-12);
  EXPECT_NEAR(phi0_quadrature(rp, o), kPi, 1e-12);
  EXPECT_NEAR(t0_quadrature(rp, o) / (kPi * 1000.0), 1.0, 1e-12);
}

TEST(Quadrature, MatchesBruteForceAndClosedForm) {
  const auto o = OrbitParams::make(10, 9);
  const oracle::Orbit k(10, 9);
  const double r = 100.0;
  EXPECT_NEAR(radial_action_quadrature(r, o) / oracle::raw_S0(k, r), 1.0, 1e-9);
  EXPECT_NEAR(radial_action_quadrature(r, o) / k.S0(r), 1.0, 1e-12);
  EXPECT_NEAR(t0_quadrature(r, o) / oracle::raw_t0(k, r), 1.0, 1e-9);
  EXPECT_NEAR(t0_quadrature(r, o) / k.t0(r), 1.0, 1e-12);
  EXPECT_NEAR(phi0_quadrature(r, o) / oracle::raw_phi0(k, r), 1.0, 1e-9);
  EXPECT_NEAR(phi0_quadrature(r, o) / k.phi0(r), 1.0, 1e-12);
}

TEST(F0, MatchesDecoupledStencilAndChainRule) {
  const auto o = OrbitParams::make(10, 9);
  const double r = 100.0;
  const double f = f0_finite_difference(r, o).value;
  // Three-point stencil of the brute-force t0 at an unrelated step.
  const double h = 3.3e-8;
  const double E = o.E;
  const double stencil = (oracle::raw_t0(oracle::Orbit::at_energy(E + h, 9), r) -
                          oracle::raw_t0(oracle::Orbit::at_energy(E - h, 9), r)) /
                         (2 * h);
  EXPECT_NEAR(f / stencil, 1.0, 1e-4);
  EXPECT_NEAR(f / oracle::Orbit(10, 9).f0(r), 1.0, 1e-6);

  const RadialProfile prof(o);
  EXPECT_NEAR(prof.f0(r) / f, 1.0, 1e-7);
}

TEST(F0, SignNearInnerTurningPointIsPositive) {
  // Oracle answer: f0 > 0 near r_minus, < 0 near r_plus, one zero between.
  const auto o = OrbitParams::make(10, 9);
  const RadialProfile prof(o);
  const double span = prof.r_plus() - prof.r_minus();
  EXPECT_GT(prof.f0(prof.r_minus() + 0.01 * span), 0.0);
  EXPECT_GT(oracle::Orbit(10, 9).f0(prof.r_minus() + 0.01 * span), 0.0);
  EXPECT_LT(prof.f0(prof.r_minus() + 0.99 * span), 0.0);
}

TEST(F0, Continuity) {
  const RadialProfile prof(OrbitParams::make(10, 9));
  for (double frac : {0.2, 0.5, 0.8}) {
    const double r = prof.r_minus() + frac * (prof.r_plus() - prof.r_minus());
    const double f = prof.f0(r);
    double prev = std::abs(prof.f0(r + 1e-2) - f);
    for (double d : {1e-3, 1e-4, 1e-5, 1e-6}) {
      const double diff = std::abs(prof.f0(r + d) - f);
      EXPECT_LE(diff, prev * 0.2 + 1e-12 * std::abs(f));
      prev = diff;
    }
  }
}

TEST(Profile, HalfCycleTotals) {
  for (auto [n, l] : std::vector<std::pair<double, double>>{{10, 9}, {50, 49}, {100, 99}, {50.5, 50}}) {
    const RadialProfile prof(OrbitParams::make(n, l));
    EXPECT_NEAR(prof.S0_half() / (kPi * (n - l)), 1.0, 1e-8);
    EXPECT_NEAR(prof.phi0_half(), kPi, 1e-8);
    EXPECT_NEAR(prof.t0_half() / (kPi * n * n * n), 1.0, 1e-8);
    // d(pi n0^3)/dE = 3 pi n0^5
    EXPECT_NEAR(prof.f0_half() / (3 * kPi * std::pow(n, 5)), 1.0, 1e-6);
  }
}

TEST(Profile, ClampedDomain) {
  const RadialProfile prof(OrbitParams::make(10, 9));
  EXPECT_DOUBLE_EQ(prof.r_lo(), prof.r_minus() * (1 + 1e-6));
  EXPECT_DOUBLE_EQ(prof.r_hi(), prof.r_plus() * (1 - 1e-6));
  EXPECT_THROW(prof.radial_action(prof.r_minus()), DomainError);
  EXPECT_THROW(prof.t0(prof.r_plus() + 1), DomainError);
  EXPECT_EQ(prof.grid().size(), 2048u);
  for (std::size_t i = 1; i < prof.grid().size(); ++i) EXPECT_LT(prof.grid()[i - 1], prof.grid()[i]);
}

TEST(Profile, ContinuationAcrossHalfCycles) {
  const RadialProfile prof(OrbitParams::make(10, 9));
  const double r = 90.0;
  const auto out = prof.evaluate(r, 0), in = prof.evaluate(r, 1), out2 = prof.evaluate(r, 2);
  EXPECT_EQ(out.branch, 1);
  EXPECT_EQ(in.branch, -1);
  EXPECT_NEAR(in.S0, 2 * prof.S0_half() - out.S0, 1e-12);
  EXPECT_NEAR(in.phi0, 2 * prof.phi0_half() - out.phi0, 1e-12);
  EXPECT_NEAR(in.t0, 2 * prof.t0_half() - out.t0, 1e-9);
  EXPECT_NEAR(out2.t0, 2 * prof.t0_half() + out.t0, 1e-9);
  EXPECT_DOUBLE_EQ(in.dS0, -out.dS0);
  EXPECT_DOUBLE_EQ(in.dt0, -out.dt0);
}

TEST(Profile, CircularOrbit) {
  const RadialProfile prof(OrbitParams::make(10, 10));
  EXPECT_TRUE(prof.circular());
  EXPECT_TRUE(prof.contains(100.0));
  EXPECT_EQ(prof.radial_action(100.0), 0.0);
  EXPECT_EQ(prof.p0(100.0), 0.0);
}

// ---- invariants over random orbits (fixed seed) ----------------------------

class RandomOrbits : public ::testing::Test {
 protected:
  std::vector<OrbitParams> orbits() {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> n(5.0, 120.0), frac(0.3, 0.995);
    std::vector<OrbitParams> v;
    for (int i = 0; i < 6; ++i) {
      const double n0 = n(rng);
      v.push_back(OrbitParams::make(n0, frac(rng) * n0));
    }
    return v;
  }
};

TEST_F(RandomOrbits, RadialActionClosedForm) {
  for (const auto& o : orbits()) {
    const RadialProfile prof(o);
    EXPECT_NEAR(prof.S0_half() / (kPi * (o.n0 - o.l0)), 1.0, 1e-8) << o.n0 << " " << o.l0;
  }
}

TEST_F(RandomOrbits, MonotoneOnGridPairs) {
  for (const auto& o : orbits()) {
    const RadialProfile prof(o);
    const auto& g = prof.grid();
    const std::size_t stride = g.size() / 1000;
    for (std::size_t i = stride; i < g.size(); i += stride) {
      const double a = g[i - stride], b = g[i];
      ASSERT_LT(prof.radial_action(a), prof.radial_action(b));
      ASSERT_LT(prof.phi0(a), prof.phi0(b));
      ASSERT_LT(prof.t0(a), prof.t0(b));
    }
  }
}

TEST_F(RandomOrbits, ActionDerivativeIsRadialMomentum) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  for (const auto& o : orbits()) {
    const RadialProfile prof(o);
    const double span = prof.r_plus() - prof.r_minus();
    for (int i = 0; i < 20; ++i) {
      const double r = prof.r_minus() + frac(rng) * span;
      const double h = 1e-4 * span;
      const double d1 = (prof.radial_action(r + h) - prof.radial_action(r - h)) / (2 * h);
      const double d2 = (prof.radial_action(r + h / 2) - prof.radial_action(r - h / 2)) / h;
      const double fd = (4 * d2 - d1) / 3;
      EXPECT_NEAR(fd / radial_momentum(r, o), 1.0, 1e-7);
    }
  }
}

TEST_F(RandomOrbits, InterpolantWithinBudget) {
  std::mt19937_64 rng(99);
  for (const auto& o : orbits()) {
    const RadialProfile prof(o);
    std::uniform_real_distribution<double> rr(prof.r_lo(), prof.r_hi());
    const double budget = prof.options().err_budget;
    for (int i = 0; i < 100; ++i) {
      const double r = rr(rng);
      EXPECT_NEAR(prof.radial_action(r), radial_action_quadrature(r, o), budget * prof.S0_half());
      EXPECT_NEAR(prof.phi0(r), phi0_quadrature(r, o), budget * prof.phi0_half());
      EXPECT_NEAR(prof.t0(r), t0_quadrature(r, o), budget * prof.t0_half());
    }
  }
}
