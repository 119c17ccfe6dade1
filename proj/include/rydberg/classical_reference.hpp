#pragma once

// Classical Kepler ellipses used as the reference for Bohmian trajectories.

#include <vector>

#include "rydberg/coulomb_kinematics.hpp"

namespace rydberg {

struct KeplerOrbit {
  double E = 0.0;        ///< hartree, < 0
  double L = 0.0;        ///< angular momentum, > 0
  double e = 0.0;        ///< sqrt(1 + 2 E L^2)
  double p_latus = 0.0;  ///< L^2
  double phi_p = 0.0;    ///< perihelion angle
  double t_peri = 0.0;   ///< a time of perihelion passage

  double semi_major() const { return -1.0 / (2.0 * E); }
  double r_min() const { return p_latus / (1.0 + e); }
  double r_max() const { return p_latus / (1.0 - e); }
  double period() const;
  /// r(phi) = p / (1 + e cos(phi - phi_p)).
  double radius_at(double phi) const;
};

/// Throws DomainError unless E < 0, L > 0 and 1 + 2 E L^2 >= 0 (values down
/// to -1e-14 count as circular).
KeplerOrbit kepler_orbit(double E, double L, double phi_p = 0.0, double t_peri = 0.0);

struct KeplerSample {
  double t = 0.0;
  double r = 0.0;
  double phi = 0.0;  ///< unwrapped, increasing
  double v_r = 0.0;
  double v_phi = 0.0;  ///< tangential velocity L / r
};

/// Solves M = u - e sin u by safeguarded Newton to 1e-13.
double solve_kepler(double mean_anomaly, double e);

/// Time-parametrized ellipse at the (sorted) sample times. Throws
/// ConvergenceError if Kepler's equation fails to converge.
std::vector<KeplerSample> propagate_kepler(const KeplerOrbit& orbit, const std::vector<double>& t_samples);

/// The two reference ellipses a Bohmian orbit can be compared with: angular
/// momentum l0 (carried by p0) or delta l0 (carried by the azimuthal phase).
struct ReferenceCandidates {
  KeplerOrbit by_l0;
  KeplerOrbit by_delta_l0;
};

ReferenceCandidates reference_candidates(const OrbitParams& orbit, double delta, double phi_p = 0.0);

}  // namespace rydberg
