#pragma once

// Quantitative comparisons: conic fits of trajectories, the l0 scaling of
// the guidance corrections and the Hamilton-Jacobi residual.

#include <string>
#include <vector>

#include "rydberg/bohm_dynamics.hpp"
#include "rydberg/classical_reference.hpp"

namespace rydberg {

struct ConicFit {
  double e_fit = 0.0;
  double p_fit = 0.0;
  double phi_p_fit = 0.0;     ///< in (-pi, pi]
  double rms_residual = 0.0;  ///< RMS of p/r - 1 - e cos(phi - phi_p)
  std::size_t n_samples = 0;
  int iterations = 0;
};

struct PolarPoint {
  double r = 0.0;
  double phi = 0.0;
};

/// Levenberg-Marquardt fit of 1/r = (1 + e cos(phi - phi_p))/p, started
/// from the r_min/r_max estimates. Converged when the scaled step falls
/// below 1e-12; throws ConvergenceError after 200 iterations.
ConicFit fit_conic(const std::vector<PolarPoint>& points);

/// Fit over all trajectory samples. Throws InsufficientArc when the samples
/// span less than one Kepler period.
ConicFit fit_conic(const Trajectory& traj);

/// Relative distance |e_fit - e_ref| / max(e_ref, tiny) to a reference ellipse.
double eccentricity_distance(const ConicFit& fit, const KeplerOrbit& ref);

// ---- correction scaling ----------------------------------------------------

/// Probe points: r at fixed fractions of (r_plus - r_minus) above r_minus,
/// theta = pi/2 + theta offset, t = t0(r), phi = phi0(r) + phase offset.
struct ProbeSpec {
  std::vector<double> radial_fractions{0.1, 0.5, 0.7, 0.9};
  std::vector<double> phase_offsets{-0.25, 0.1, 0.25};
  std::vector<double> theta_offsets{0.0};
  double margin = 0.05;  ///< fractions must lie in [margin, 1 - margin]
};

struct ScalingTemplate {
  double n0_over_l0 = 1.01;
  double delta = 0.95;
  double sigma2_power = 3.0;  ///< sigma^2 = l0^power
  int winding_truncation = 3;
  double fd_step_scale = 1.0;  ///< scale of the finite-difference route steps
};

struct ProbeDeviation {
  double l0 = 0.0;
  double fraction = 0.0;
  double phase_offset = 0.0;
  double theta_offset = 0.0;
  FieldPoint point;
  double p0 = 0.0;
  double corr_r = 0.0;      ///< dS/dr - branch p0 (analytic)
  double corr_phi = 0.0;    ///< dS/dphi - delta l0 (analytic)
  double dtheta = 0.0;      ///< dS/dtheta
  double corr_r_fd = 0.0;   ///< same, by differences of the correction part of the phase
  double corr_phi_fd = 0.0;
};

struct ScalingReport {
  std::vector<double> l0_values;
  std::vector<double> n0_values;
  std::vector<double> delta_r;      ///< max |dS/dr - branch p0|
  std::vector<double> delta_phi;    ///< max |dS/dphi - delta l0|
  std::vector<double> delta_theta;  ///< max |dS/dtheta|
  std::vector<double> delta_r_fd;
  std::vector<double> delta_phi_fd;
  std::vector<double> delta_r_rel;    ///< delta_r / max p0 on the probe set
  std::vector<double> delta_phi_rel;  ///< delta_phi / (delta l0)
  double slope_r = 0.0, slope_r_stderr = 0.0;
  double slope_phi = 0.0, slope_phi_stderr = 0.0;
  double slope_r_rel = 0.0, slope_phi_rel = 0.0;
  double max_route_disagreement = 0.0;  ///< max relative analytic vs finite-difference gap
  std::vector<ProbeDeviation> probes;
};

struct LogLogFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

/// Least squares of log(y) on log(x); y must be positive.
LogLogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Requires >= 4 l0 values spanning a factor >= 5.
ScalingReport correction_scaling(const std::vector<double>& l0_values, const ScalingTemplate& tmpl = {},
                                 const ProbeSpec& probes = {}, unsigned workers = 1);

/// Packet parameters of the scaling template at one l0.
PacketParams scaling_params(double l0, const ScalingTemplate& tmpl);

/// Probe points for one profile. Throws DomainError when a probe falls
/// outside the margin or the clamped domain.
std::vector<FieldPoint> probe_points(const RadialProfile& profile, double delta, const ProbeSpec& probe_set);

// ---- Hamilton-Jacobi residual ----------------------------------------------

struct HjOptions {
  /// The printed phase carries no -E t term; the residual is formed with it
  /// restored so that a stationary classical orbit has zero residual.
  bool restore_energy_phase = true;
  /// Q = 0 and S = S0 + delta l0 phi only (closed form (delta^2-1) l0^2/(2 r^2)
  /// at theta = pi/2).
  bool classical_limit = false;
  double step_scale = 1.0;
  int half_cycle = 0;
};

struct HjResidual {
  FieldPoint point;
  double dS_dt = 0.0;
  double kinetic = 0.0;  ///< |grad S|^2 / 2
  double Q = 0.0;
  double residual = 0.0;
  double normalized = 0.0;  ///< residual / |E|
  std::string error;        ///< error kind when the point could not be evaluated
};

/// residual = dS/dt + |grad S|^2/2 + Q - 1/r, with every derivative of S
/// taken by Richardson-extrapolated central differences. Per-point failures
/// are recorded in-band.
std::vector<HjResidual> hj_residual_scan(const std::vector<FieldPoint>& points, const PacketParams& params,
                                         const RadialProfile& profile, const HjOptions& options = {});

}  // namespace rydberg
