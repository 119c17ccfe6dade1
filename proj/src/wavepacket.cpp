#include "rydberg/wavepacket.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "rydberg/errors.hpp"

namespace rydberg {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Derivs {
  double r = 0.0, phi = 0.0, t = 0.0;
};

// lambda^2/(4 gamma) with gamma = 2 pi^2 b delta^2 / D and lambda = pi delta A / D
// (D = a^2 + b^2):
//
//   lambda^2 / (4 gamma) = (pi^2 delta^2 A^2 / D^2) * D / (8 pi^2 b delta^2)
//                        = A^2 / (8 b D).
//
// delta and pi cancel, so the quotient is evaluated in this form. It has a
// simple pole at b = 0 unless A = 0; on the line A = 0 the term vanishes
// identically and that limit is used at (A, b) = (0, 0).
double winding_term(double A, double b, double D) {
  if (b == 0.0) {
    if (A == 0.0) return 0.0;
    std::ostringstream os;
    os.precision(17);
    os << "lambda^2/(4 gamma) is singular: gamma = 0 (b = 0) with lambda != 0 (A = " << A << ")";
    throw SingularConfiguration(os.str());
  }
  return A * A / (8.0 * b * D);
}

void winding_sum_term(double phi_shifted, double phi0, double t_rel, const PacketParams& pp,
                                      std::complex<double> alpha, double& log_mag, double& arg) {
  const double l0 = pp.orbit.l0;
  const double dphi = phi_shifted - phi0;
  const double A = pp.delta * dphi - t_rel / (l0 * l0 * l0);
  const std::complex<double> q = A * A / (2.0 * alpha);
  log_mag = -dphi * dphi * l0 * (1.0 - pp.delta * pp.delta) / 2.0 - q.real();
  arg = pp.delta * l0 * phi_shifted - q.imag();
}

}  // namespace

PacketParams PacketParams::make(const OrbitParams& orbit, double delta, double sigma2, int winding_truncation) {
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("PacketParams: delta must lie in (0, 1]");
  if (winding_truncation < 0) throw DomainError("PacketParams: winding_truncation must be >= 0");
  if (sigma2 <= 0.0) sigma2 = orbit.l0 * orbit.l0 * orbit.l0;
  if (!std::isfinite(sigma2)) throw DomainError("PacketParams: sigma2 must be finite");
  return PacketParams{orbit, delta, sigma2, winding_truncation};
}

PhaseTerms complete_phase_terms(double A, double a, double b, double delta) {
  const double D = a * a + b * b;
  PhaseTerms pt;
  pt.A = A;
  pt.a = a;
  pt.b = b;
  if (std::isinf(b)) return pt;  // circular limit: gamma = lambda = 0
  pt.gamma = 2.0 * kPi * kPi * b * delta * delta / D;
  pt.lambda = kPi * delta * A / D;
  return pt;
}

PhaseTerms phase_terms(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile,
                       int half_cycle) {
  const auto v = profile.evaluate(p.r, half_cycle);
  const double l0 = params.orbit.l0;
  const double l03 = l0 * l0 * l0;
  const double A = params.delta * (p.phi - v.phi0) - (p.t - v.t0) / l03;
  if (profile.circular()) return complete_phase_terms(A, params.spread_a(), kInf, params.delta);
  const double b = 3.0 * p.t / (l03 * l0) + 2.0 * v.f0;
  return complete_phase_terms(A, params.spread_a(), b, params.delta);
}

PhaseParts phase_parts(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile,
                       int half_cycle) {
  const auto v = profile.evaluate(p.r, half_cycle);
  const double l0 = params.orbit.l0;
  const double l03 = l0 * l0 * l0;
  const double A = params.delta * (p.phi - v.phi0) - (p.t - v.t0) / l03;
  const double a = params.spread_a();
  const double b = 3.0 * p.t / (l03 * l0) + 2.0 * v.f0;
  const double D = a * a + b * b;

  PhaseParts s;
  s.radial = v.S0;
  s.azimuthal = params.delta * l0 * p.phi;
  if (profile.circular()) return s;
  // atan(b/a) = sign(b) pi/2 - atan(a/b) for b != 0.
  if (std::abs(b) > a) {
    s.spread_branch = std::copysign(kPi / 4.0, b);
    s.spread_rest = -0.5 * std::atan(a / b);
  } else {
    s.spread_rest = 0.5 * std::atan(b / a);
  }
  s.winding = winding_term(A, b, D);
  s.chirp = -A * A * b / (2.0 * D);
  return s;
}

double phase(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile, int half_cycle) {
  return phase_parts(p, params, profile, half_cycle).total();
}

PhaseGradient phase_gradient(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile,
                             int half_cycle) {
  const auto v = profile.evaluate(p.r, half_cycle);
  const double l0 = params.orbit.l0;
  const double l03 = l0 * l0 * l0;
  const double delta = params.delta;
  const double A = delta * (p.phi - v.phi0) - (p.t - v.t0) / l03;
  const double a = params.spread_a();
  const double b = 3.0 * p.t / (l03 * l0) + 2.0 * v.f0;
  const double D = a * a + b * b;

  Derivs dA, db;
  if (!profile.circular()) dA.r = -delta * v.dphi0 + v.dt0 / l03;
  dA.phi = delta;
  dA.t = -1.0 / l03;
  db.r = 2.0 * v.df0;
  db.t = 3.0 / (l03 * l0);

  // d[(1/2) atan(b/a)] = a db / (2 D)
  // d[A^2/(8 b D)]     = A dA / (4 b D) - A^2 (a^2 + 3 b^2) db / (8 b^2 D^2)
  // d[-A^2 b/(2 D)]    = -A b dA / D - A^2 (a^2 - b^2) db / (2 D^2)
  auto correction = [&](double dAx, double dbx) {
    double c = 0.5 * a * dbx / D;
    if (b != 0.0) {
      c += A * dAx / (4.0 * b * D) - A * A * (a * a + 3.0 * b * b) * dbx / (8.0 * b * b * D * D);
    } else if (A != 0.0) {
      (void)winding_term(A, b, D);  // throws
    }
    c += -A * b * dAx / D - A * A * (a * a - b * b) * dbx / (2.0 * D * D);
    return c;
  };

  PhaseGradient g;
  g.p0 = v.p0;
  g.branch = v.branch;
  if (profile.circular()) {
    g.dphi = delta * l0;
    return g;
  }
  g.corr_r = correction(dA.r, db.r);
  g.corr_phi = correction(dA.phi, 0.0);
  g.dr = v.dS0 + g.corr_r;
  g.dphi = delta * l0 + g.corr_phi;
  g.dtheta = 0.0;
  g.dt = correction(dA.t, db.t);
  return g;
}

WaveSample wavefunction(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile) {
  WaveSample out;
  if (profile.circular() || !profile.contains(p.r)) return out;
  const double p0 = profile.p0(p.r);
  if (!(p0 > 0.0)) return out;
  out.in_domain = true;

  const OrbitParams& orb = params.orbit;
  const double l0 = orb.l0;
  const double delta = params.delta;
  const double omega0 = 1.0 / (orb.n0 * orb.n0 * orb.n0);
  const double phi0 = profile.phi0(p.r);
  const double t_rel = p.t - profile.t0(p.r);
  const double b = 3.0 * p.t / (l0 * l0 * l0 * l0) + 2.0 * profile.f0(p.r);
  const std::complex<double> alpha{params.spread_a(), -b};

  const double radial_amp = std::sqrt(2.0 * omega0 / (kPi * p0));
  const double S0 = profile.radial_action(p.r);
  const double dth = p.theta - kPi / 2.0;
  const double theta_amp = std::pow(delta * l0 / kPi, 0.25) * std::exp(-dth * dth * delta * l0 / 2.0);

  // Winding sum over |mu| <= M around the winding closest to phi0.
  const double phi_red = p.phi - 2.0 * kPi * std::round((p.phi - phi0) / (2.0 * kPi));
  const int M = params.winding_truncation;
  std::vector<double> log_mag(2 * M + 3), arg(2 * M + 3);
  for (int mu = -M - 1; mu <= M + 1; ++mu) {
    const std::size_t i = static_cast<std::size_t>(mu + M + 1);
    winding_sum_term(phi_red + 2.0 * kPi * mu, phi0, t_rel, params, alpha, log_mag[i], arg[i]);
  }
  const std::size_t centre = static_cast<std::size_t>(M + 1);
  double peak = log_mag[centre];
  for (std::size_t i = 1; i + 1 < log_mag.size(); ++i) peak = std::max(peak, log_mag[i]);
  std::complex<double> sum{0.0, 0.0};
  for (std::size_t i = 1; i + 1 < log_mag.size(); ++i) sum += std::polar(std::exp(log_mag[i] - peak), arg[i]);

  const double edge = std::max(log_mag[1], log_mag[log_mag.size() - 2]);
  const double dropped = std::max(log_mag.front(), log_mag.back());
  out.truncation_warning = (M > 0 && edge - log_mag[centre] > std::log(1e-15)) ||
                           dropped - peak > std::log(1e-15);

  const std::complex<double> spread = 1.0 / std::sqrt(2.0 * kPi * alpha);
  out.psi = radial_amp * std::polar(1.0, S0) * theta_amp * spread * std::exp(peak) * sum;
  return out;
}

double envelope(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile) {
  if (profile.circular() || !profile.contains(p.r)) return 0.0;
  const double l0 = params.orbit.l0;
  const double delta = params.delta;
  const double phi0 = profile.phi0(p.r);
  const double dphi = p.phi - phi0 - 2.0 * kPi * std::round((p.phi - phi0) / (2.0 * kPi));
  const double A = delta * dphi - (p.t - profile.t0(p.r)) / (l0 * l0 * l0);
  const double a = params.spread_a();
  const double b = 3.0 * p.t / (l0 * l0 * l0 * l0) + 2.0 * profile.f0(p.r);
  const double dth = p.theta - kPi / 2.0;
  const double expo = -dth * dth * delta * l0 / 2.0 - dphi * dphi * l0 * (1.0 - delta * delta) / 2.0 -
                      A * A * a / (2.0 * (a * a + b * b));
  return std::exp(expo);
}

double quantum_potential(const FieldPoint& p, const PacketParams& params, const RadialProfile& profile,
                         QuantumPotentialOptions options) {
  if (profile.circular() || !profile.contains(p.r)) {
    throw DomainError("quantum_potential: point outside the WKB radial domain");
  }
  if (!(p.theta > 0.0 && p.theta < kPi)) throw DomainError("quantum_potential: theta must lie in (0, pi)");
  if (envelope(p, params, profile) < options.amplitude_threshold) {
    throw AmplitudeUnderflow("quantum_potential: amplitude below threshold, Q is 0/0 here");
  }
  auto R = [&](double r, double th, double ph) {
    const auto w = wavefunction({r, th, ph, p.t}, params, profile);
    if (!w.in_domain) throw DomainError("quantum_potential: stencil left the radial domain");
    return std::abs(w.psi);
  };
  const double R0 = R(p.r, p.theta, p.phi);
  if (!(R0 > 0.0)) throw AmplitudeUnderflow("quantum_potential: |psi| underflowed to zero");

  const double p0 = profile.p0(p.r);
  double hr = 1e-3 * (2.0 * kPi / p0) * options.step_scale;
  hr = std::min(hr, 0.25 * std::min(p.r - profile.r_lo(), profile.r_hi() - p.r));
  const double ha = 1e-3 * options.step_scale;
  if (!(hr > 0.0)) throw DomainError("quantum_potential: no room for the radial stencil");

  const double rp = R(p.r + hr, p.theta, p.phi), rm = R(p.r - hr, p.theta, p.phi);
  const double tp = R(p.r, p.theta + ha, p.phi), tm = R(p.r, p.theta - ha, p.phi);
  const double fp = R(p.r, p.theta, p.phi + ha), fm = R(p.r, p.theta, p.phi - ha);

  const double r = p.r;
  const double st = std::sin(p.theta);
  const double R_rr = (rp - 2.0 * R0 + rm) / (hr * hr);
  const double R_r = (rp - rm) / (2.0 * hr);
  const double R_tt = (tp - 2.0 * R0 + tm) / (ha * ha);
  const double R_t = (tp - tm) / (2.0 * ha);
  const double R_pp = (fp - 2.0 * R0 + fm) / (ha * ha);
  const double lap = R_rr + 2.0 * R_r / r + (R_tt + std::cos(p.theta) / st * R_t) / (r * r) +
                     R_pp / (r * r * st * st);
  return -0.5 * lap / R0;
}

double radius_at_fraction(const RadialProfile& profile, double fraction) {
  if (profile.circular()) return profile.r_lo();
  const double r = profile.r_minus() + fraction * (profile.r_plus() - profile.r_minus());
  return std::clamp(r, profile.r_lo(), profile.r_hi());
}

FieldPoint packet_center(const RadialProfile& profile, double fraction) {
  const double r = radius_at_fraction(profile, fraction);
  return {r, kPi / 2.0, profile.phi0(r), profile.t0(r)};
}

}  // namespace rydberg
