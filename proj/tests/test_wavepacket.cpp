#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "kepler_oracle.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/wavepacket.hpp"

using namespace rydberg;
constexpr double kPi = std::numbers::pi;

namespace {

struct Fixture {
  OrbitParams orbit;
  RadialProfile profile;
  PacketParams params;
  Fixture(double n0, double l0, double delta = 0.95)
      : orbit(OrbitParams::make(n0, l0)), profile(orbit), params(PacketParams::make(orbit, delta)) {}
};

double wrap(double x) { return std::remainder(x, 2.0 * kPi); }

}  // namespace

TEST(PacketParams, DefaultsAndValidation) {
  const auto p = PacketParams::make(OrbitParams::make(10, 9));
  EXPECT_DOUBLE_EQ(p.sigma2, 729.0);
  EXPECT_DOUBLE_EQ(p.delta, 0.95);
  EXPECT_EQ(p.winding_truncation, 3);
  EXPECT_DOUBLE_EQ(p.spread_a(), 1.0 / 1458.0);
  EXPECT_THROW(PacketParams::make(OrbitParams::make(10, 9), 0.0), DomainError);
  EXPECT_THROW(PacketParams::make(OrbitParams::make(10, 9), 1.1), DomainError);
  EXPECT_THROW(PacketParams::make(OrbitParams::make(10, 9), 0.9, 0.0, -1), DomainError);
}

TEST(PhaseTerms, PacketCentreHasZeroAandLambda) {
  Fixture f(10, 9);
  for (double frac : {0.1, 0.5, 0.9}) {
    const auto c = packet_center(f.profile, frac);
    const auto pt = phase_terms(c, f.params, f.profile);
    EXPECT_EQ(pt.A, 0.0);
    EXPECT_EQ(pt.lambda, 0.0);
    EXPECT_GT(pt.a, 0.0);
  }
}

TEST(PhaseTerms, AtTimeZeroBIsTwiceF0) {
  Fixture f(10, 9);
  const double r = radius_at_fraction(f.profile, 0.6);
  const auto pt = phase_terms({r, kPi / 2, 1.0, 0.0}, f.params, f.profile);
  EXPECT_DOUBLE_EQ(pt.b, 2.0 * f.profile.f0(r));
}

TEST(PhaseTerms, ReconstructionIsBitExact) {
  Fixture f(10, 9);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> frac(0.05, 0.95), off(-1, 1);
  for (int i = 0; i < 50; ++i) {
    const double r = radius_at_fraction(f.profile, frac(rng));
    const FieldPoint p{r, kPi / 2, f.profile.phi0(r) + off(rng), f.profile.t0(r) + 50 * off(rng)};
    const auto pt = phase_terms(p, f.params, f.profile);
    const auto again = complete_phase_terms(pt.A, pt.a, pt.b, f.params.delta);
    EXPECT_EQ(again.gamma, pt.gamma);
    EXPECT_EQ(again.lambda, pt.lambda);
  }
}

TEST(PhaseTerms, DualImplementation) {
  Fixture f(10, 9);
  const oracle::Orbit k(10, 9);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> frac(0.05, 0.95), off(-1, 1);
  for (int i = 0; i < 50; ++i) {
    const double r = radius_at_fraction(f.profile, frac(rng));
    const double phi = f.profile.phi0(r) + off(rng);
    const double t = f.profile.t0(r) + 100 * off(rng);
    const auto pt = phase_terms({r, kPi / 2, phi, t}, f.params, f.profile);

    // Independent transcription using the profile's radial values.
    const double l0 = 9, d = 0.95, a = 1.0 / (2 * 729.0);
    const double A = d * (phi - f.profile.phi0(r)) - (t - f.profile.t0(r)) / (l0 * l0 * l0);
    const double b = 3 * t / std::pow(l0, 4) + 2 * f.profile.f0(r);
    const double gamma = 2 * kPi * kPi * b * d * d / (a * a + b * b);
    const double lambda = kPi * d * A / (a * a + b * b);
    EXPECT_NEAR(pt.A, A, 1e-12 * std::max(1.0, std::abs(A)));
    EXPECT_NEAR(pt.b / b, 1.0, 1e-12);
    EXPECT_NEAR(pt.gamma / gamma, 1.0, 1e-12);
    EXPECT_NEAR(pt.lambda, lambda, 1e-12 * std::abs(lambda) + 1e-300);

    // And against closed-form radial quantities.
    const double b_cf = 3 * t / std::pow(l0, 4) + 2 * k.f0(r);
    EXPECT_NEAR(pt.b / b_cf, 1.0, 1e-6);
  }
}

TEST(Phase, CentreReducesToClassicalPlusSpread) {
  Fixture f(10, 9);
  const auto c = packet_center(f.profile, 0.4);
  const auto pt = phase_terms(c, f.params, f.profile);
  const double expect = f.profile.radial_action(c.r) + 0.95 * 9 * c.phi + 0.5 * std::atan(pt.b / pt.a);
  EXPECT_NEAR(phase(c, f.params, f.profile), expect, 1e-12 * std::abs(expect));
}

TEST(Phase, SingularWhenGammaZeroAndLambdaNonzero) {
  // b = 0 needs t = -2 f0 l0^4 / 3 at some r; choose r in the f0 > 0 region.
  Fixture f(10, 9);
  const double r = radius_at_fraction(f.profile, 0.05);
  ASSERT_GT(f.profile.f0(r), 0.0);
  const double t = -2.0 * f.profile.f0(r) * std::pow(9.0, 4) / 3.0;
  const auto pt = phase_terms({r, kPi / 2, 0.0, t}, f.params, f.profile);
  ASSERT_NEAR(pt.b, 0.0, 1e-9 * std::abs(f.profile.f0(r)));
  if (pt.b == 0.0) {
    EXPECT_THROW(phase({r, kPi / 2, 0.0, t}, f.params, f.profile), SingularConfiguration);
  } else {
    EXPECT_GT(std::abs(phase_parts({r, kPi / 2, 0.0, t}, f.params, f.profile).winding), 1e3);
  }
}

TEST(Phase, MatchesArgumentOfWavefunction) {
  Fixture f(50.5, 50);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> frac(0.05, 0.95), u(-1, 1);
  int tested = 0;
  while (tested < 100) {
    const double r = radius_at_fraction(f.profile, frac(rng));
    const FieldPoint p{r, kPi / 2 + 0.2 * u(rng), f.profile.phi0(r) + 2.5 * u(rng),
                       f.profile.t0(r) + 2000 * u(rng)};
    if (envelope(p, f.params, f.profile) <= 1e-6) continue;
    ++tested;
    const auto w = wavefunction(p, f.params, f.profile);
    ASSERT_TRUE(w.in_domain);
    EXPECT_LT(std::abs(wrap(phase(p, f.params, f.profile) - std::arg(w.psi))), 1e-6);
  }
}

TEST(Phase, WindingNeighboursBoundTheGapAtSmallL0) {
  // With l0 (1 - delta^2) ~ 1 the mu = +-1 terms overlap the mu = 0 term, so
  // arg(psi) departs from the single-term phase by at most the summed
  // neighbour magnitude ratio.
  Fixture f(10, 9);
  const double l0 = 9, d = 0.95, a = f.params.spread_a();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> frac(0.05, 0.95), u(-1, 1);
  double worst = 0;
  int tested = 0;
  while (tested < 100) {
    const double r = radius_at_fraction(f.profile, frac(rng));
    const double dphi = 1.5 * u(rng);
    const double trel = 200 * u(rng);
    const FieldPoint p{r, kPi / 2 + 0.2 * u(rng), f.profile.phi0(r) + dphi, f.profile.t0(r) + trel};
    if (envelope(p, f.params, f.profile) <= 1e-6) continue;
    ++tested;
    const double b = 3 * p.t / std::pow(l0, 4) + 2 * f.profile.f0(r);
    auto log_mag = [&](double x) {
      const double A = d * x - trel / (l0 * l0 * l0);
      return -x * x * l0 * (1 - d * d) / 2 - A * A * a / (2 * (a * a + b * b));
    };
    double ratio = 0;
    for (int mu : {-3, -2, -1, 1, 2, 3}) ratio += std::exp(log_mag(dphi + 2 * kPi * mu) - log_mag(dphi));
    const double gap = std::abs(wrap(phase(p, f.params, f.profile) - std::arg(wavefunction(p, f.params, f.profile).psi)));
    EXPECT_LE(gap, 1.01 * ratio + 1e-9);
    worst = std::max(worst, gap);
  }
  RecordProperty("max_gap_l0_9", std::to_string(worst));
}

TEST(Wavefunction, ThetaGaussianWidth) {
  Fixture f(10, 9);
  const auto c = packet_center(f.profile, 0.5);
  const double w = std::sqrt(2.0 / (0.95 * 9));
  const double base = std::abs(wavefunction(c, f.params, f.profile).psi);
  for (double s : {+1.0, -1.0}) {
    FieldPoint q = c;
    q.theta = kPi / 2 + s * w;
    EXPECT_NEAR(std::abs(wavefunction(q, f.params, f.profile).psi) / base, std::exp(-1.0), 1e-12);
    EXPECT_NEAR(envelope(q, f.params, f.profile), std::exp(-1.0), 1e-12);
  }
}

TEST(Wavefunction, ThetaReflectionSymmetry) {
  Fixture f(20, 19);
  const auto c = packet_center(f.profile, 0.3);
  for (double w : {0.01, 0.1, 0.4}) {
    FieldPoint up = c, down = c;
    up.theta = kPi / 2 + w;
    down.theta = kPi / 2 - w;
    EXPECT_DOUBLE_EQ(std::abs(wavefunction(up, f.params, f.profile).psi),
                     std::abs(wavefunction(down, f.params, f.profile).psi));
  }
}

TEST(Wavefunction, WindingPeriodicity) {
  Fixture f(10, 9);
  auto c = packet_center(f.profile, 0.5);
  c.phi += 0.3;
  FieldPoint next = c;
  next.phi += 2 * kPi;
  const auto w0 = wavefunction(c, f.params, f.profile);
  const auto w1 = wavefunction(next, f.params, f.profile);
  // The winding neighbour of phi0 + 2 pi is phi0 itself (the mu = -1 term).
  EXPECT_NEAR(std::abs(w1.psi - w0.psi), 0.0, 1e-12 * std::abs(w0.psi));
  EXPECT_DOUBLE_EQ(envelope(next, f.params, f.profile), envelope(c, f.params, f.profile));
  // The unwrapped azimuthal phase keeps the full delta l0 * 2 pi advance.
  EXPECT_NEAR(phase_parts(next, f.params, f.profile).azimuthal - phase_parts(c, f.params, f.profile).azimuthal,
              2 * kPi * 0.95 * 9, 1e-12);
  EXPECT_FALSE(w0.truncation_warning);
}

TEST(Wavefunction, TruncationAtLargerMIsNegligible) {
  Fixture f(10, 9);
  PacketParams more = f.params;
  more.winding_truncation = 4;
  const auto c = packet_center(f.profile, 0.5);
  for (double off : {-3.0, -1.0, 0.0, 2.0, 3.1}) {
    FieldPoint p = c;
    p.phi += off;
    const auto a = wavefunction(p, f.params, f.profile).psi;
    const auto b = wavefunction(p, more, f.profile).psi;
    EXPECT_LE(std::abs(a - b), 1e-15 * std::abs(wavefunction(c, f.params, f.profile).psi));
  }
}

TEST(Wavefunction, OutsideDomainFlagged) {
  Fixture f(10, 9);
  const auto w = wavefunction({f.profile.r_plus() * 1.1, kPi / 2, 0, 0}, f.params, f.profile);
  EXPECT_FALSE(w.in_domain);
  EXPECT_EQ(w.psi, std::complex<double>(0.0, 0.0));
}

TEST(Wavefunction, NormDriftOverOutgoingHalfCycle) {
  // |psi|^2 integrated over r and phi (theta factor separates) at several
  // times while the packet sits on the outgoing branch.
  Fixture f(20, 19);
  const int nr = 400, nphi = 240;
  const double rlo = f.profile.r_lo(), rhi = f.profile.r_hi();
  auto norm = [&](double t) {
    double total = 0;
    for (int i = 0; i < nr; ++i) {
      // midpoint rule in the eccentric anomaly keeps the 1/p0 endpoints tame
      const double ulo = f.profile.map().u_of_r(rlo), uhi = f.profile.map().u_of_r(rhi);
      const double u = ulo + (i + 0.5) * (uhi - ulo) / nr;
      const double r = f.profile.map().r(u);
      const double dr = f.profile.map().dr_du(u) * (uhi - ulo) / nr;
      const double phi0 = f.profile.phi0(r);
      for (int j = 0; j < nphi; ++j) {
        const double phi = phi0 - kPi + (j + 0.5) * 2 * kPi / nphi;
        const double m = std::norm(wavefunction({r, kPi / 2, phi, t}, f.params, f.profile).psi);
        total += m * r * r * dr * (2 * kPi / nphi);
      }
    }
    return total;
  };
  const double T = f.profile.t0_half();
  const double n0 = norm(0.1 * T);
  for (double frac : {0.3, 0.5, 0.7, 0.9}) EXPECT_NEAR(norm(frac * T) / n0, 1.0, 0.02) << frac;
}

TEST(QuantumPotential, RichardsonConsistencyAtCentre) {
  for (double l0 : {20.0, 50.0}) {
    Fixture f(1.01 * l0, l0);
    const auto c = packet_center(f.profile, 0.5);
    const double q1 = quantum_potential(c, f.params, f.profile);
    const double q2 = quantum_potential(c, f.params, f.profile, {.step_scale = 0.5});
    EXPECT_NEAR(q2 / q1, 1.0, 0.01) << l0;
  }
}

TEST(QuantumPotential, FarTailUnderflows) {
  Fixture f(50.5, 50);
  auto c = packet_center(f.profile, 0.5);
  c.theta = 0.25;  // theta factor exp(-1.32^2 * 47.5 / 2) ~ 1e-18
  EXPECT_THROW(quantum_potential(c, f.params, f.profile), AmplitudeUnderflow);
}

TEST(Helpers, RadiusAtFractionClamps) {
  Fixture f(10, 9);
  EXPECT_DOUBLE_EQ(radius_at_fraction(f.profile, 0.0), f.profile.r_lo());
  EXPECT_DOUBLE_EQ(radius_at_fraction(f.profile, 1.0), f.profile.r_hi());
  EXPECT_NEAR(radius_at_fraction(f.profile, 0.5), 100.0, 1e-12);
}

TEST(Circular, PhaseIsClassical) {
  const auto orbit = OrbitParams::make(50, 50);
  const RadialProfile prof(orbit);
  const auto params = PacketParams::make(orbit, 1.0);
  const FieldPoint p{2500, kPi / 2, 0.7, 123.0};
  const auto pt = phase_terms(p, params, prof);
  EXPECT_TRUE(std::isinf(pt.b));
  EXPECT_EQ(pt.gamma, 0.0);
  EXPECT_EQ(pt.lambda, 0.0);
  EXPECT_DOUBLE_EQ(phase(p, params, prof), 50 * 0.7);
  const auto g = phase_gradient(p, params, prof);
  EXPECT_EQ(g.dr, 0.0);
  EXPECT_EQ(g.dphi, 50.0);
}
