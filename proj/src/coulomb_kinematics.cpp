#include "rydberg/coulomb_kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rydberg/errors.hpp"

namespace rydberg {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kQuadTol = 1e-13;
constexpr unsigned kQuadDepth = 20;

// Integrals are mapped onto [0, 1] first: the Gauss-Kronrod error estimate
// carries an absolute floor that short intervals can never get under.
template <class F>
double integrate_adaptive(F&& f, double lo, double hi) {
  if (hi <= lo) return 0.0;
  const double w = hi - lo;
  auto g = [&](double s) { return f(lo + w * s); };
  return w * boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, 0.0, 1.0, kQuadDepth, kQuadTol);
}

template <class F>
double integrate_panel(F&& f, double lo, double hi) {
  const double w = hi - lo;
  auto g = [&](double s) { return f(lo + w * s); };
  return w * boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, 0.0, 1.0, 0, kQuadTol);
}

std::string fmt_domain(double r, const TurningPoints& tp) {
  std::ostringstream os;
  os.precision(17);
  os << "r = " << r << " outside [r_minus, r_plus] = [" << tp.r_minus << ", " << tp.r_plus << "]";
  return os.str();
}

// The three radial integrands in the eccentric anomaly.
struct Integrands {
  const EccentricAnomalyMap& m;
  double l0;
  double action(double u) const { return m.p0(u) * m.dr_du(u); }
  double angle(double u) const {
    const double r = m.r(u);
    return l0 * m.dr_du(u) / (r * r * m.p0(u));
  }
  double time(double u) const { return m.dr_du(u) / m.p0(u); }
};

// Smallest u where the integrands are still evaluated as 0/0-free ratios.
double safe_u(double u) { return std::max(u, 1e-300); }

double upper_anomaly(double r, const OrbitParams& orbit) {
  const auto tp = turning_points(orbit);
  const double tol = 1e-12 * tp.r_plus;
  if (r < tp.r_minus - tol || r > tp.r_plus + tol) throw DomainError(fmt_domain(r, tp));
  return EccentricAnomalyMap(orbit).u_of_r(std::clamp(r, tp.r_minus, tp.r_plus));
}

double half_period_quadrature(const OrbitParams& orbit) {
  EccentricAnomalyMap m(orbit);
  Integrands in{m, orbit.l0};
  return integrate_adaptive([&](double u) { return in.time(safe_u(u)); }, 0.0, kPi);
}

}  // namespace

double energy(double n0) {
  if (!(n0 >= 1.0)) {
    std::ostringstream os;
    os << "energy: n0 = " << n0 << " must be >= 1";
    throw DomainError(os.str());
  }
  return -1.0 / (2.0 * n0 * n0);
}

OrbitParams OrbitParams::make(double n0, double l0) {
  if (!(n0 >= 1.0)) throw DomainError("OrbitParams: n0 must be >= 1");
  if (!(l0 > 0.0)) throw DomainError("OrbitParams: l0 must be > 0");
  if (!(l0 <= n0)) throw DomainError("OrbitParams: l0 <= n0 violated (1 + 2 E l0^2 < 0)");
  return OrbitParams{n0, l0, energy(n0)};
}

OrbitParams OrbitParams::from_energy(double E, double l0) {
  if (!(E < 0.0)) throw DomainError("OrbitParams::from_energy: unbound orbit (E >= 0)");
  const double n0 = 1.0 / std::sqrt(-2.0 * E);
  if (!(l0 > 0.0) || !(l0 <= n0)) throw DomainError("OrbitParams::from_energy: 1 + 2 E l0^2 < 0");
  return OrbitParams{n0, l0, E};
}

double OrbitParams::eccentricity() const {
  const double e2 = (n0 - l0) * (n0 + l0) / (n0 * n0);
  if (e2 < 0.0) throw DomainError("eccentricity: 1 + 2 E l0^2 < 0");
  return std::sqrt(e2);
}

TurningPoints turning_points(const OrbitParams& orbit) {
  if (!(orbit.E < 0.0)) throw DomainError("turning_points: unbound orbit");
  const double e = orbit.eccentricity();
  const double a = orbit.semi_major();
  return {a * (1.0 - e), a * (1.0 + e)};
}

double radial_momentum(double r, const OrbitParams& orbit) {
  const auto tp = turning_points(orbit);
  // 2E - l0^2/r^2 + 2/r = -2E (r - r_minus)(r_plus - r) / r^2
  const double radicand = -2.0 * orbit.E * (r - tp.r_minus) * (tp.r_plus - r) / (r * r);
  if (radicand < 0.0) {
    if (radicand < -1e-12) throw DomainError("radial_momentum: " + fmt_domain(r, tp));
    return 0.0;
  }
  return std::sqrt(radicand);
}

EccentricAnomalyMap::EccentricAnomalyMap(const OrbitParams& orbit)
    : a_(orbit.semi_major()),
      ae_(orbit.semi_major() * orbit.eccentricity()),
      sqrt_m2E_(std::sqrt(-2.0 * orbit.E)) {
  const auto tp = turning_points(orbit);
  r_minus_ = tp.r_minus;
  r_plus_ = tp.r_plus;
}

double EccentricAnomalyMap::r(double u) const { return a_ - ae_ * std::cos(u); }
double EccentricAnomalyMap::dr_du(double u) const { return ae_ * std::sin(u); }
double EccentricAnomalyMap::p0(double u) const { return sqrt_m2E_ * ae_ * std::sin(u) / r(u); }

double EccentricAnomalyMap::u_of_r(double r) const {
  if (ae_ == 0.0) return 0.0;
  if (r <= a_) {
    const double s = std::clamp((r - r_minus_) / (2.0 * ae_), 0.0, 1.0);
    return 2.0 * std::asin(std::sqrt(s));
  }
  const double s = std::clamp((r_plus_ - r) / (2.0 * ae_), 0.0, 1.0);
  return kPi - 2.0 * std::asin(std::sqrt(s));
}

double radial_action_quadrature(double r, const OrbitParams& orbit) {
  const double u = upper_anomaly(r, orbit);
  EccentricAnomalyMap m(orbit);
  Integrands in{m, orbit.l0};
  return integrate_adaptive([&](double x) { return in.action(safe_u(x)); }, 0.0, u);
}

double phi0_quadrature(double r, const OrbitParams& orbit) {
  const double u = upper_anomaly(r, orbit);
  EccentricAnomalyMap m(orbit);
  Integrands in{m, orbit.l0};
  return integrate_adaptive([&](double x) { return in.angle(safe_u(x)); }, 0.0, u);
}

double t0_quadrature(double r, const OrbitParams& orbit) {
  const double u = upper_anomaly(r, orbit);
  EccentricAnomalyMap m(orbit);
  Integrands in{m, orbit.l0};
  return integrate_adaptive([&](double x) { return in.time(safe_u(x)); }, 0.0, u);
}

EnergyDerivative f0_finite_difference(double r, const OrbitParams& orbit, double step_scale) {
  const auto tp = turning_points(orbit);
  if (!(r > tp.r_minus && r < tp.r_plus)) {
    throw DomainError("f0: needs r strictly inside the orbit, " + fmt_domain(r, tp));
  }
  const double E = orbit.E;
  const double e = orbit.eccentricity();
  const double a = orbit.semi_major();
  // d r_pm / dE with a = -1/(2E), e = sqrt(1 + 2 E l0^2).
  const double a_E = 1.0 / (2.0 * E * E);
  const double e_E = orbit.l0 * orbit.l0 / e;
  const double drm = std::abs(a_E * (1.0 - e) - a * e_E);
  const double drp = std::abs(a_E * (1.0 + e) + a * e_E);

  double h = std::max(std::abs(E) * 1e-5, 1e-12) * step_scale;
  h = std::min({h, 1e-3 * (r - tp.r_minus) / drm, 1e-3 * (tp.r_plus - r) / drp});

  auto central = [&](double s) {
    const double up = t0_quadrature(r, OrbitParams::from_energy(E + s, orbit.l0));
    const double dn = t0_quadrature(r, OrbitParams::from_energy(E - s, orbit.l0));
    return (up - dn) / (2.0 * s);
  };
  const double d1 = central(h);
  const double d2 = central(0.5 * h);
  const double rich = (4.0 * d2 - d1) / 3.0;

  const double t_scale = kPi * orbit.n0 * orbit.n0 * orbit.n0;
  const double noise = 1e-13 * t_scale / h;
  if (std::abs(d1 - rich) > 1e-4 * std::abs(rich) + noise) {
    std::ostringstream os;
    os.precision(17);
    os << "f0 at r = " << r << ": central difference " << d1 << " vs Richardson " << rich
       << " (step " << h << ")";
    throw LossOfSignificance(os.str());
  }
  return {rich, d1, d2, h};
}

double half_period_energy_derivative(const OrbitParams& orbit, double step_scale) {
  const double E = orbit.E;
  const double h = std::max(std::abs(E) * 1e-5, 1e-12) * step_scale;
  auto central = [&](double s) {
    return (half_period_quadrature(OrbitParams::from_energy(E + s, orbit.l0)) -
            half_period_quadrature(OrbitParams::from_energy(E - s, orbit.l0))) /
           (2.0 * s);
  };
  const double d1 = central(h);
  const double d2 = central(0.5 * h);
  return (4.0 * d2 - d1) / 3.0;
}

// ---------------------------------------------------------------------------

RadialProfile::RadialProfile(const OrbitParams& orbit, ProfileOptions options)
    : orbit_(orbit), options_(options), tp_(turning_points(orbit)), map_(orbit) {
  if (options_.grid_points < 8) throw DomainError("RadialProfile: grid_points must be >= 8");
  if (!(options_.eps_dom > 0.0 && options_.eps_dom < 0.5)) {
    throw DomainError("RadialProfile: eps_dom must lie in (0, 0.5)");
  }
  r_lo_ = tp_.r_minus * (1.0 + options_.eps_dom);
  r_hi_ = tp_.r_plus * (1.0 - options_.eps_dom);
  const double e = orbit_.eccentricity();
  if (e == 0.0 || r_lo_ >= r_hi_) {
    circular_ = true;
    r_lo_ = r_hi_ = orbit_.semi_major();
    grid_r_ = {r_lo_};
    return;
  }
  p0_max_ = e / orbit_.l0;

  Integrands in{map_, orbit_.l0};
  const int n = options_.grid_points;
  const double u_lo = map_.u_of_r(r_lo_);
  const double u_hi = map_.u_of_r(r_hi_);
  const double du = (u_hi - u_lo) / (n - 1);

  std::vector<double> s(n), ds(n), ph(n), dph(n), tt(n), dtt(n), g(n);
  auto fa = [&](double u) { return in.action(safe_u(u)); };
  auto fp = [&](double u) { return in.angle(safe_u(u)); };
  auto ft = [&](double u) { return in.time(safe_u(u)); };
  s[0] = integrate_adaptive(fa, 0.0, u_lo);
  ph[0] = integrate_adaptive(fp, 0.0, u_lo);
  tt[0] = integrate_adaptive(ft, 0.0, u_lo);
  grid_r_.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = u_lo + i * du;
    if (i > 0) {
      const double up = u - du;
      s[i] = s[i - 1] + integrate_panel(fa, up, u);
      ph[i] = ph[i - 1] + integrate_panel(fp, up, u);
      tt[i] = tt[i - 1] + integrate_panel(ft, up, u);
    }
    ds[i] = fa(u);
    dph[i] = fp(u);
    dtt[i] = ft(u);
    // r(u(r)) can round just outside the domain; pin the ends.
    grid_r_[i] = i == 0 ? r_lo_ : i == n - 1 ? r_hi_ : std::clamp(map_.r(u), r_lo_, r_hi_);
    g[i] = f0_finite_difference(grid_r_[i], orbit_, options_.f0_step_scale).value * std::sin(u);
  }
  S0_ = UniformHermite(u_lo, du, std::move(s), std::move(ds));
  phi0_ = UniformHermite(u_lo, du, std::move(ph), std::move(dph));
  t0_ = UniformHermite(u_lo, du, std::move(tt), std::move(dtt));
  auto dg = uniform_slopes(g, du);
  f0_sin_ = UniformHermite(u_lo, du, std::move(g), std::move(dg));

  S0_half_ = integrate_adaptive(fa, 0.0, kPi);
  phi0_half_ = integrate_adaptive(fp, 0.0, kPi);
  t0_half_ = integrate_adaptive(ft, 0.0, kPi);
  f0_half_ = half_period_energy_derivative(orbit_, options_.f0_step_scale);
}

bool RadialProfile::contains(double r) const {
  if (circular_) return std::abs(r - r_lo_) <= 1e-12 * r_lo_;
  return r >= r_lo_ && r <= r_hi_;
}

void RadialProfile::require_inside(double r, const char* what) const {
  if (contains(r)) return;
  std::ostringstream os;
  os.precision(17);
  os << what << ": r = " << r << " outside clamped domain [" << r_lo_ << ", " << r_hi_
     << "] (turning radii " << tp_.r_minus << ", " << tp_.r_plus << ")";
  throw DomainError(os.str());
}

double RadialProfile::radial_action(double r) const {
  require_inside(r, "radial_action");
  return circular_ ? 0.0 : S0_(map_.u_of_r(r));
}

double RadialProfile::phi0(double r) const {
  require_inside(r, "phi0");
  return circular_ ? 0.0 : phi0_(map_.u_of_r(r));
}

double RadialProfile::t0(double r) const {
  require_inside(r, "t0");
  return circular_ ? 0.0 : t0_(map_.u_of_r(r));
}

double RadialProfile::f0(double r) const {
  require_inside(r, "f0");
  if (circular_) return 0.0;
  const double u = map_.u_of_r(r);
  return f0_sin_(u) / std::sin(u);
}

double RadialProfile::p0(double r) const {
  require_inside(r, "p0");
  return circular_ ? 0.0 : radial_momentum(r, orbit_);
}

RadialValues RadialProfile::evaluate(double r, int half_cycle) const {
  require_inside(r, "evaluate");
  if (half_cycle < 0) throw DomainError("evaluate: negative half-cycle index");
  const bool outgoing = half_cycle % 2 == 0;
  const int sign = outgoing ? 1 : -1;
  if (circular_) return {0, 0, 0, 0, 0, 0, 0, 0, 0, sign};

  const double u = map_.u_of_r(r);
  const double su = std::sin(u);
  const double cu = std::cos(u);
  const double p = radial_momentum(r, orbit_);
  const double g = f0_sin_(u);
  const double dg = f0_sin_.derivative(u);
  const double f = g / su;
  const double df = (dg * su - g * cu) / (su * su) / map_.dr_du(u);

  const double mult = outgoing ? half_cycle : half_cycle + 1;
  RadialValues v{};
  v.S0 = mult * S0_half_ + sign * S0_(u);
  v.phi0 = mult * phi0_half_ + sign * phi0_(u);
  v.t0 = mult * t0_half_ + sign * t0_(u);
  v.f0 = mult * f0_half_ + sign * f;
  v.p0 = p;
  v.dS0 = sign * p;
  v.dphi0 = sign * orbit_.l0 / (r * r * p);
  v.dt0 = sign / p;
  v.df0 = sign * df;
  v.branch = sign;
  return v;
}

}  // namespace rydberg
