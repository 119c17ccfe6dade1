#pragma once

// Classical radial kinematics of the Coulomb problem in atomic units
// (hbar = m = e = 1): the radial momentum p0, the radial action S0 and its
// parameter derivatives phi0 = -dS0/dl0, t0 = dS0/dE and f0 = d^2 S0/dE^2.
//
// All radial integrals are anchored at the inner turning point r_minus and
// evaluated in the eccentric-anomaly variable u, r = a (1 - e cos u), which
// turns the (r - r_pm)^(-1/2) endpoint behaviour of 1/p0 into smooth
// integrands on [0, pi].

#include <utility>
#include <vector>

#include "rydberg/interpolation.hpp"

namespace rydberg {

/// E_n = -1/(2 n^2) in hartree. Throws DomainError for n0 < 1.
double energy(double n0);

struct OrbitParams {
  double n0 = 1.0;  ///< principal quantum number (real, >= 1)
  double l0 = 1.0;  ///< mean angular momentum, 0 < l0 <= n0
  double E = -0.5;  ///< derived: energy(n0)

  /// Validating constructor.
  static OrbitParams make(double n0, double l0);
  /// Orbit with the same l0 at energy E (n0 = (-2E)^(-1/2)); used for
  /// finite differences in the energy.
  static OrbitParams from_energy(double E, double l0);

  double semi_major() const { return n0 * n0; }
  /// e = sqrt(1 + 2 E l0^2), evaluated as sqrt((n0-l0)(n0+l0))/n0.
  double eccentricity() const;

  friend bool operator==(const OrbitParams&, const OrbitParams&) = default;
};

struct TurningPoints {
  double r_minus;
  double r_plus;
};

/// r_pm = n0^2 (1 pm e), the roots of 2 E r^2 + 2 r - l0^2 = 0.
TurningPoints turning_points(const OrbitParams& orbit);

/// p0(r) = sqrt(2E - l0^2/r^2 + 2/r) >= 0. Radicands down to -1e-12 are
/// clamped to zero; anything more negative is a DomainError.
double radial_momentum(double r, const OrbitParams& orbit);

/// The substitution r = a (1 - e cos u) for one orbit.
class EccentricAnomalyMap {
 public:
  explicit EccentricAnomalyMap(const OrbitParams& orbit);

  double r(double u) const;
  double dr_du(double u) const;
  /// p0 written in u: sqrt(-2E) a e sin u / r(u), exact at the turning points.
  double p0(double u) const;
  /// Inverse map on [r_minus, r_plus], well conditioned near both ends.
  double u_of_r(double r) const;

  double a() const { return a_; }
  double ae() const { return ae_; }

 private:
  double a_;
  double ae_;
  double sqrt_m2E_;
  double r_minus_;
  double r_plus_;
};

// Direct adaptive quadratures (no memoization), lower limit r_minus.
double radial_action_quadrature(double r, const OrbitParams& orbit);
double phi0_quadrature(double r, const OrbitParams& orbit);
double t0_quadrature(double r, const OrbitParams& orbit);

struct EnergyDerivative {
  double value;       ///< Richardson-combined estimate
  double two_sided;   ///< plain central difference at step h
  double half_step;   ///< central difference at step h/2
  double step;        ///< h actually used
};

/// f0(r) = d t0(r; E)/dE at fixed r and l0, by central differences of
/// t0_quadrature with the E-dependent lower limit r_minus(E). Nominal step
/// h = max(|E| 1e-5, 1e-12) * step_scale, shrunk near the turning points so
/// that r stays well inside both perturbed orbits. Throws LossOfSignificance
/// when the h and h/2 estimates disagree beyond 1e-4 relative (plus a
/// rounding floor).
EnergyDerivative f0_finite_difference(double r, const OrbitParams& orbit, double step_scale = 1.0);

/// d t0(r_plus; E)/dE, the energy derivative of the half radial period.
double half_period_energy_derivative(const OrbitParams& orbit, double step_scale = 1.0);

struct ProfileOptions {
  int grid_points = 2048;
  double eps_dom = 1e-6;      ///< relative clamp away from each turning point
  double err_budget = 1e-9;   ///< relative interpolation tolerance
  double f0_step_scale = 1.0;

  friend bool operator==(const ProfileOptions&, const ProfileOptions&) = default;
};

/// Radial quantities at one radius, optionally continued over k completed
/// half cycles. For even k (outgoing) X = k X_half + X(r); for odd k
/// (incoming) X = (k+1) X_half - X(r). Derivatives carry the branch sign.
struct RadialValues {
  double S0, phi0, t0, f0;
  double p0;                        ///< always >= 0
  double dS0, dphi0, dt0, df0;      ///< d/dr of the continued quantities
  int branch;                       ///< +1 outgoing, -1 incoming
};

/// Memoized S0, phi0, t0, f0 on the clamped domain
/// [r_minus (1 + eps), r_plus (1 - eps)]. Immutable after construction.
class RadialProfile {
 public:
  explicit RadialProfile(const OrbitParams& orbit, ProfileOptions options = {});

  const OrbitParams& orbit() const { return orbit_; }
  const ProfileOptions& options() const { return options_; }

  double r_minus() const { return tp_.r_minus; }
  double r_plus() const { return tp_.r_plus; }
  /// Clamped domain bounds.
  double r_lo() const { return r_lo_; }
  double r_hi() const { return r_hi_; }
  /// e == 0 (or a clamped domain too narrow to hold a grid): the domain is the
  /// single radius a and the evaluators return zero. f0 really diverges in
  /// this limit; the wavepacket treats it as infinite.
  bool circular() const { return circular_; }
  bool contains(double r) const;

  double radial_action(double r) const;
  double phi0(double r) const;
  double t0(double r) const;
  double f0(double r) const;
  double p0(double r) const;
  double p0_max() const { return p0_max_; }

  RadialValues evaluate(double r, int half_cycle = 0) const;

  // Half-cycle totals (r_minus -> r_plus).
  double S0_half() const { return S0_half_; }
  double phi0_half() const { return phi0_half_; }
  double t0_half() const { return t0_half_; }
  double f0_half() const { return f0_half_; }

  /// Sample radii of the memoization grid (strictly increasing).
  const std::vector<double>& grid() const { return grid_r_; }
  const EccentricAnomalyMap& map() const { return map_; }

 private:
  void require_inside(double r, const char* what) const;

  OrbitParams orbit_;
  ProfileOptions options_;
  TurningPoints tp_;
  EccentricAnomalyMap map_;
  bool circular_ = false;
  double r_lo_ = 0.0, r_hi_ = 0.0;
  double p0_max_ = 0.0;
  double S0_half_ = 0.0, phi0_half_ = 0.0, t0_half_ = 0.0, f0_half_ = 0.0;
  std::vector<double> grid_r_;
  UniformHermite S0_, phi0_, t0_;
  UniformHermite f0_sin_;  ///< f0(u) sin(u), smooth where f0 itself diverges
};

// Free-function spellings of the profile evaluators.
inline double radial_action(double r, const RadialProfile& p) { return p.radial_action(r); }
inline double phi0(double r, const RadialProfile& p) { return p.phi0(r); }
inline double t0(double r, const RadialProfile& p) { return p.t0(r); }
inline double f0(double r, const RadialProfile& p) { return p.f0(r); }

}  // namespace rydberg
