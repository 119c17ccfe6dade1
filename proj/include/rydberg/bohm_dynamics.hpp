#pragma once

// Guidance-condition velocity field of the wavepacket phase and the
// trajectories it generates.

#include <string>
#include <vector>

#include "rydberg/wavepacket.hpp"

namespace rydberg {

enum class GuidanceMode {
  raw_single_branch,  ///< outgoing e^{+i S0} branch only; cannot turn at r_plus
  two_branch,         ///< radial continuation reflected at each turning point
};

const char* to_string(GuidanceMode mode);
GuidanceMode guidance_mode_from_string(const std::string& text);

struct BohmState {
  double t = 0.0;
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;  ///< unwrapped
  int branch = 1;    ///< sign of the radial WKB branch
  int half_cycle = 0;

  FieldPoint point() const { return {r, theta, phi, t}; }
};

struct VelocitySample {
  double v_r = 0.0;
  double v_theta = 0.0;
  double v_phi = 0.0;
};

struct VelocityOptions {
  double guard_fraction = 1e-3;  ///< p_min = guard_fraction * max p0
  bool cross_check = true;
  double cross_check_tol = 1e-6;  ///< relative
};

/// Outcome of the finite-difference cross-check of one gradient evaluation.
enum class CrossCheck { passed, skipped };

struct VelocityResult {
  VelocitySample v;
  PhaseGradient gradient;
  CrossCheck check = CrossCheck::skipped;
};

/// v_r = dS/dr, v_theta = (1/r) dS/dtheta, v_phi = dS/dphi / (r sin theta),
/// from the analytic chain-rule gradient. When enabled, the result is checked
/// against Richardson-extrapolated central differences of phase(); a
/// converged disagreement beyond the tolerance throws CrossCheckError, an
/// unconverged or singular stencil skips the check. Throws WkbGuardError
/// when p0 < p_min.
VelocityResult velocity_detail(const BohmState& s, const PacketParams& params, const RadialProfile& profile,
                               GuidanceMode mode, const VelocityOptions& options = {});

VelocitySample velocity(const BohmState& s, const PacketParams& params, const RadialProfile& profile,
                        GuidanceMode mode, const VelocityOptions& options = {});

enum class Termination { completed, wkb_guard, step_failure };
const char* to_string(Termination t);

struct TrajectorySample {
  BohmState state;
  VelocitySample velocity;
  bool event = false;  ///< turning-point event (recorded before and after the flip)
};

struct TrajectoryStats {
  int turning_events = 0;
  std::vector<double> event_phis;   ///< phi at each apsidal crossing (after the flip)
  double winding_count = 0.0;       ///< (phi_end - phi_start) / 2 pi
  int accepted_steps = 0;
  int rejected_steps = 0;
  double accumulated_error = 0.0;   ///< sum of accepted local error estimates (max norm, state units)
};

struct Trajectory {
  PacketParams params;
  GuidanceMode mode = GuidanceMode::two_branch;
  std::vector<TrajectorySample> samples;
  Termination termination = Termination::completed;
  std::string termination_detail;
  TrajectoryStats stats;
};

struct IntegratorOptions {
  double max_step_periods = 1.0 / 200.0;   ///< max step in Kepler periods
  double output_interval_periods = 1.0 / 256.0;
  VelocityOptions velocity;
};

/// Kepler period 2 pi n0^3.
double kepler_period(const OrbitParams& orbit);

/// Integrates dr/dt = v_r, dtheta/dt = v_theta / r, dphi/dt = v_phi / (r sin theta)
/// with an adaptive Dormand-Prince 5(4) pair (PI step control, rtol = atol = tol).
/// In two_branch mode, reaching the clamped radial boundary is a turning event:
/// the crossing is located by bisection to 1e-10 relative, the classical transit
/// of the clamped cap is applied, and the branch flips.
Trajectory integrate_trajectory(const BohmState& initial, double duration, double tol, GuidanceMode mode,
                                const PacketParams& params, const RadialProfile& profile,
                                const IntegratorOptions& options = {});

struct GridSpec {
  std::vector<double> r;
  std::vector<double> theta;
  std::vector<double> phi;
  double t = 0.0;
  int half_cycle = 0;
};

struct GridVelocity {
  FieldPoint point;
  VelocitySample v;
  std::string error;  ///< empty when the evaluation succeeded, otherwise the error kind
};

/// Row-major (r outermost, phi innermost) table of velocities. Per-point
/// errors are recorded in-band. Output is independent of the worker count.
std::vector<GridVelocity> velocity_field_grid(const GridSpec& grid, const PacketParams& params,
                                              const RadialProfile& profile, GuidanceMode mode,
                                              unsigned workers = 1, const VelocityOptions& options = {});

}  // namespace rydberg
