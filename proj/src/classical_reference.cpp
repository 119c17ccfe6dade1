#include "rydberg/classical_reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rydberg/errors.hpp"

namespace rydberg {
namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double KeplerOrbit::period() const { return kTwoPi * std::pow(-2.0 * E, -1.5); }

double KeplerOrbit::radius_at(double phi) const { return p_latus / (1.0 + e * std::cos(phi - phi_p)); }

KeplerOrbit kepler_orbit(double E, double L, double phi_p, double t_peri) {
  if (!(E < 0.0)) throw DomainError("kepler_orbit: E must be negative (bound orbit)");
  if (!(L > 0.0)) throw DomainError("kepler_orbit: L must be positive");
  const double disc = 1.0 + 2.0 * E * L * L;
  if (disc < -1e-14) {
    std::ostringstream os;
    os.precision(17);
    os << "kepler_orbit: 1 + 2 E L^2 = " << disc << " < 0 (imaginary eccentricity)";
    throw DomainError(os.str());
  }
  KeplerOrbit k;
  k.E = E;
  k.L = L;
  k.e = disc > 0.0 ? std::sqrt(disc) : 0.0;
  k.p_latus = L * L;
  k.phi_p = phi_p;
  k.t_peri = t_peri;
  return k;
}

double solve_kepler(double M, double e) {
  // Reduce to [-pi, pi]; the bracket [M - e, M + e] always holds the root.
  const double turns = std::round(M / kTwoPi);
  const double m = M - turns * kTwoPi;
  double lo = m - e, hi = m + e;
  double u = e < 0.8 ? m + e * std::sin(m) : (m >= 0 ? std::numbers::pi : -std::numbers::pi);
  u = std::clamp(u, lo, hi);
  for (int it = 0; it < 100; ++it) {
    const double f = u - e * std::sin(u) - m;
    if (f > 0) hi = u; else lo = u;
    const double fp = 1.0 - e * std::cos(u);
    double next = u - f / fp;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) <= 1e-13 * std::max(1.0, std::abs(u)) || hi - lo <= 1e-15) {
      return next + turns * kTwoPi;
    }
    u = next;
  }
  throw ConvergenceError("solve_kepler: Newton iteration did not converge");
}

std::vector<KeplerSample> propagate_kepler(const KeplerOrbit& orbit, const std::vector<double>& t_samples) {
  for (std::size_t i = 1; i < t_samples.size(); ++i) {
    if (t_samples[i] < t_samples[i - 1]) throw DomainError("propagate_kepler: t_samples must be sorted");
  }
  const double a = orbit.semi_major();
  const double n = kTwoPi / orbit.period();
  const double e = orbit.e;
  const double s = std::sqrt((1.0 + e) / (1.0 - e));
  std::vector<KeplerSample> out;
  out.reserve(t_samples.size());
  for (double t : t_samples) {
    const double M = n * (t - orbit.t_peri);
    const double u = solve_kepler(M, e);
    // True anomaly, unwrapped consistently with u.
    const double turns = std::round(u / kTwoPi);
    const double ur = u - turns * kTwoPi;
    const double nu = 2.0 * std::atan(s * std::tan(0.5 * ur)) + turns * kTwoPi;
    KeplerSample k;
    k.t = t;
    k.r = a * (1.0 - e * std::cos(u));
    k.phi = orbit.phi_p + nu;
    k.v_r = std::sqrt(a) * e * std::sin(u) / k.r;  // n a^2 e sin u / r with n = a^(-3/2)
    k.v_phi = orbit.L / k.r;
    out.push_back(k);
  }
  return out;
}

ReferenceCandidates reference_candidates(const OrbitParams& orbit, double delta, double phi_p) {
  return {kepler_orbit(orbit.E, orbit.l0, phi_p), kepler_orbit(orbit.E, delta * orbit.l0, phi_p)};
}

}  // namespace rydberg
