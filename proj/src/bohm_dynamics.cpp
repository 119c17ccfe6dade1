#include "rydberg/bohm_dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "rydberg/errors.hpp"
#include "rydberg/parallel.hpp"

namespace rydberg {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

struct FdEstimate {
  double value = 0.0;
  double spread = 0.0;  ///< |Richardson - half-step|, the truncation estimate
  double scale = 0.0;   ///< largest |S| on the stencil, for the rounding floor
  double step = 0.0;
};

template <class Phase>
std::optional<FdEstimate> richardson(Phase&& S, double h) {
  try {
    const double sp = S(h), sm = S(-h), hp = S(0.5 * h), hm = S(-0.5 * h);
    const double d1 = (sp - sm) / (2.0 * h);
    const double d2 = (hp - hm) / h;
    const double rich = (4.0 * d2 - d1) / 3.0;
    const double scale = std::max({std::abs(sp), std::abs(sm), std::abs(hp), std::abs(hm)});
    return FdEstimate{rich, std::abs(rich - d2), scale, h};
  } catch (const SingularConfiguration&) {
    return std::nullopt;
  }
}

// Returns true when the comparison was conclusive (and passed).
bool compare(const char* what, double analytic, const std::optional<FdEstimate>& fd, double rel_tol) {
  if (!fd) return false;
  const double floor = 64.0 * kEps * (fd->scale + 1.0) / fd->step;
  const double allowed = rel_tol * std::abs(analytic) + floor;
  if (fd->spread > allowed) return false;  // differences not converged here
  if (std::abs(analytic - fd->value) > allowed + fd->spread) {
    std::ostringstream os;
    os.precision(17);
    os << "gradient cross-check failed for " << what << ": analytic " << analytic << ", finite difference "
       << fd->value << " (allowed " << allowed + fd->spread << ")";
    throw CrossCheckError(os.str());
  }
  return true;
}

using Vec = std::array<double, 3>;

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct StepResult {
  Vec y{};
  Vec k7{};
  double err = 0.0;      ///< scaled RMS error norm
  double err_max = 0.0;  ///< unscaled max-norm error
  bool boundary = false;
  bool singular = false;
};

class Integrator {
 public:
  Integrator(const PacketParams& params, const RadialProfile& profile, GuidanceMode mode, double tol,
             const IntegratorOptions& options)
      : params_(params), profile_(profile), mode_(mode), tol_(tol), options_(options) {}

  Vec rhs(double t, const Vec& y, int half_cycle, int branch) const {
    BohmState s{t, y[0], y[1], y[2], branch, half_cycle};
    const auto v = velocity(s, params_, profile_, mode_, options_.velocity);
    return {v.v_r, v.v_theta / y[0], v.v_phi / (y[0] * std::sin(y[1]))};
  }

  StepResult step(double t, const Vec& y, const Vec& k1, double h, int half_cycle, int branch) const {
    StepResult out;
    auto at = [&](std::initializer_list<std::pair<double, const Vec*>> terms) {
      Vec z = y;
      for (auto [coef, k] : terms) {
        for (int i = 0; i < 3; ++i) z[i] += h * coef * (*k)[i];
      }
      return z;
    };
    try {
      const Vec k2 = rhs(t + c2 * h, at({{a21, &k1}}), half_cycle, branch);
      const Vec k3 = rhs(t + c3 * h, at({{a31, &k1}, {a32, &k2}}), half_cycle, branch);
      const Vec k4 = rhs(t + c4 * h, at({{a41, &k1}, {a42, &k2}, {a43, &k3}}), half_cycle, branch);
      const Vec k5 = rhs(t + c5 * h, at({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}), half_cycle, branch);
      const Vec k6 =
          rhs(t + h, at({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}), half_cycle, branch);
      out.y = at({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
      if (!profile_.contains(out.y[0])) {
        out.boundary = true;
        return out;
      }
      out.k7 = rhs(t + h, out.y, half_cycle, branch);
      double acc = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double e =
            h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * out.k7[i]);
        const double sc = tol_ + tol_ * std::max(std::abs(y[i]), std::abs(out.y[i]));
        acc += (e / sc) * (e / sc);
        out.err_max = std::max(out.err_max, std::abs(e));
      }
      out.err = std::sqrt(acc / 3.0);
    } catch (const DomainError&) {
      out.boundary = true;
    } catch (const WkbGuardError&) {
      out.boundary = true;
    } catch (const SingularConfiguration&) {
      out.singular = true;
    }
    return out;
  }

 private:
  const PacketParams& params_;
  const RadialProfile& profile_;
  GuidanceMode mode_;
  double tol_;
  const IntegratorOptions& options_;
};

}  // namespace

const char* to_string(GuidanceMode mode) {
  return mode == GuidanceMode::raw_single_branch ? "raw" : "two_branch";
}

GuidanceMode guidance_mode_from_string(const std::string& text) {
  if (text == "raw" || text == "raw_single_branch") return GuidanceMode::raw_single_branch;
  if (text == "two_branch") return GuidanceMode::two_branch;
  throw DomainError("unknown guidance mode '" + text + "' (expected raw or two_branch)");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::wkb_guard: return "wkb_guard";
    case Termination::step_failure: return "step_failure";
  }
  return "unknown";
}

double kepler_period(const OrbitParams& orbit) { return 2.0 * kPi * orbit.n0 * orbit.n0 * orbit.n0; }

VelocityResult velocity_detail(const BohmState& s, const PacketParams& params, const RadialProfile& profile,
                               GuidanceMode mode, const VelocityOptions& options) {
  const int k = mode == GuidanceMode::raw_single_branch ? 0 : s.half_cycle;
  if (!(s.theta > 0.0 && s.theta < kPi)) throw DomainError("velocity: theta must lie in (0, pi)");
  if (!profile.contains(s.r)) {
    std::ostringstream os;
    os.precision(17);
    os << "velocity: r = " << s.r << " outside clamped domain [" << profile.r_lo() << ", " << profile.r_hi()
       << "]";
    throw DomainError(os.str());
  }
  if (!profile.circular()) {
    const double p0 = profile.p0(s.r);
    const double p_min = options.guard_fraction * profile.p0_max();
    if (p0 < p_min) {
      std::ostringstream os;
      os.precision(17);
      os << "WKB guard: p0(" << s.r << ") = " << p0 << " below p_min = " << p_min;
      throw WkbGuardError(os.str());
    }
  }

  const FieldPoint pt = s.point();
  VelocityResult res;
  res.gradient = phase_gradient(pt, params, profile, k);
  const double st = std::sin(s.theta);
  res.v.v_r = res.gradient.dr;
  res.v.v_theta = res.gradient.dtheta / s.r;
  res.v.v_phi = res.gradient.dphi / (s.r * st);
  if (!std::isfinite(res.v.v_r) || !std::isfinite(res.v.v_theta) || !std::isfinite(res.v.v_phi)) {
    throw SingularConfiguration("velocity: non-finite guidance velocity");
  }

  if (options.cross_check) {
    const double tol = options.cross_check_tol;
    bool r_ok = false;
    if (!profile.circular()) {
      const double h0 = 1e-3 * (profile.r_plus() - profile.r_minus());
      const double room = std::min(s.r - profile.r_lo(), profile.r_hi() - s.r);
      const double h = std::min(h0, 0.5 * room);
      if (h >= 1e-3 * h0) {
        auto S = [&](double d) { return phase({pt.r + d, pt.theta, pt.phi, pt.t}, params, profile, k); };
        r_ok = compare("dS/dr", res.gradient.dr, richardson(S, h), tol);
      }
    }
    auto Sphi = [&](double d) { return phase({pt.r, pt.theta, pt.phi + d, pt.t}, params, profile, k); };
    const bool phi_ok = compare("dS/dphi", res.gradient.dphi, richardson(Sphi, 1e-3), tol);
    if (s.theta > 2e-3 && s.theta < kPi - 2e-3) {
      auto Sth = [&](double d) { return phase({pt.r, pt.theta + d, pt.phi, pt.t}, params, profile, k); };
      compare("dS/dtheta", res.gradient.dtheta, richardson(Sth, 1e-3), tol);
    }
    res.check = (r_ok || profile.circular()) && phi_ok ? CrossCheck::passed : CrossCheck::skipped;
  }
  return res;
}

VelocitySample velocity(const BohmState& s, const PacketParams& params, const RadialProfile& profile,
                        GuidanceMode mode, const VelocityOptions& options) {
  return velocity_detail(s, params, profile, mode, options).v;
}

Trajectory integrate_trajectory(const BohmState& initial, double duration, double tol, GuidanceMode mode,
                                const PacketParams& params, const RadialProfile& profile,
                                const IntegratorOptions& options) {
  if (!(duration > 0.0)) throw DomainError("integrate_trajectory: duration must be > 0");
  if (!(tol >= 1e-12 && tol <= 1e-3)) throw DomainError("integrate_trajectory: tol must lie in [1e-12, 1e-3]");
  if (!profile.contains(initial.r)) throw DomainError("integrate_trajectory: initial r outside clamped domain");
  if (!(initial.theta > 0.0 && initial.theta < kPi)) {
    throw DomainError("integrate_trajectory: initial theta must lie in (0, pi)");
  }

  Trajectory traj;
  traj.params = params;
  traj.mode = mode;

  const double period = kepler_period(params.orbit);
  const double max_step = options.max_step_periods * period;
  const double dt_out = options.output_interval_periods * period;
  const double t_start = initial.t;
  const double t_end = t_start + duration;
  const double h_min = 16.0 * kEps * std::max(std::abs(t_end), period);

  int half_cycle = mode == GuidanceMode::raw_single_branch ? 0 : initial.half_cycle;
  int branch = half_cycle % 2 == 0 ? 1 : -1;
  double t = t_start;
  Vec y{initial.r, initial.theta, initial.phi};

  auto record = [&](bool event) {
    BohmState s{t, y[0], y[1], y[2], branch, half_cycle};
    traj.samples.push_back({s, velocity(s, params, profile, mode, options.velocity), event});
  };
  auto next_output_after = [&](double time) {
    const double j = std::floor((time - t_start) / dt_out + 1e-9) + 1.0;
    return t_start + j * dt_out;
  };

  Integrator integ(params, profile, mode, tol, options);
  record(false);
  Vec k1 = integ.rhs(t, y, half_cycle, branch);
  double h = std::min(max_step, 1e-3 * period);
  double err_old = 1e-4;
  double next_out = next_output_after(t);
  const double phi_start = y[2];

  constexpr double beta = 0.04, alpha = 0.2 - 0.75 * beta, safety = 0.9;
  long guard_steps = 0;

  auto flip_branch = [&]() {
    // Classical transit of the clamped cap between the boundary and the true
    // turning point and back.
    const double r = y[0];
    const bool upper = branch > 0;
    const double dt = upper ? 2.0 * (profile.t0_half() - profile.t0(r)) : 2.0 * profile.t0(r);
    const double dphi0 = upper ? 2.0 * (profile.phi0_half() - profile.phi0(r)) : 2.0 * profile.phi0(r);
    record(true);
    t += dt;
    y[2] += params.delta * dphi0;
    ++half_cycle;
    branch = -branch;
    ++traj.stats.turning_events;
    traj.stats.event_phis.push_back(y[2]);
    record(true);
    k1 = integ.rhs(t, y, half_cycle, branch);
    next_out = next_output_after(t);
  };

  while (t < t_end) {
    if (++guard_steps > 10'000'000) {
      traj.termination = Termination::step_failure;
      traj.termination_detail = "step budget exhausted";
      break;
    }
    const double h_prop = std::min(h, max_step);
    double h_try = std::min({h_prop, t_end - t, next_out - t});
    if (h_try <= 0.0) {
      // next_out coincides with t: emit and move on.
      record(false);
      next_out = next_output_after(t);
      continue;
    }
    StepResult res = integ.step(t, y, k1, h_try, half_cycle, branch);

    if (res.singular) {
      ++traj.stats.rejected_steps;
      h = 0.5 * h_try;
      if (h < h_min) {
        traj.termination = Termination::step_failure;
        traj.termination_detail = "step size underflow at a singular phase configuration";
        break;
      }
      continue;
    }

    if (res.boundary) {
      // Locate the boundary crossing: largest s in (0, h_try) whose step stays inside.
      double lo = 0.0, hi = h_try;
      std::optional<StepResult> best;
      while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        StepResult trial = integ.step(t, y, k1, mid, half_cycle, branch);
        if (!trial.boundary && !trial.singular) {
          lo = mid;
          best = trial;
        } else {
          hi = mid;
        }
      }
      if (best && best->err > 1.0) {
        ++traj.stats.rejected_steps;
        h = lo * std::max(0.2, safety * std::pow(best->err, -0.2));
        continue;
      }
      if (best) {
        t += lo;
        y = best->y;
        ++traj.stats.accepted_steps;
        traj.stats.accumulated_error += best->err_max;
      }
      if (mode == GuidanceMode::raw_single_branch || profile.circular()) {
        record(false);
        traj.termination = Termination::wkb_guard;
        std::ostringstream os;
        os.precision(17);
        os << "reached the clamped radial boundary at r = " << y[0] << ", t = " << t
           << " (outgoing branch cannot turn)";
        traj.termination_detail = os.str();
        traj.stats.winding_count = (y[2] - phi_start) / (2.0 * kPi);
        return traj;
      }
      flip_branch();
      h = std::max(h_prop, h_min);
      continue;
    }

    if (res.err <= 1.0) {
      t = (h_try == next_out - t) ? next_out : t + h_try;
      y = res.y;
      k1 = res.k7;
      ++traj.stats.accepted_steps;
      traj.stats.accumulated_error += res.err_max;
      const double err = std::max(res.err, 1e-4);
      double fac = std::pow(err, alpha) / std::pow(err_old, beta) / safety;
      fac = std::clamp(fac, 0.1, 5.0);
      const double h_new = h_try / fac;
      h = (h_try < h_prop) ? std::max(h_new, h_prop) : h_new;
      err_old = err;
      if (t >= next_out) {
        record(false);
        next_out = next_output_after(t);
      }
    } else {
      ++traj.stats.rejected_steps;
      const double fac = std::min(5.0, std::pow(res.err, alpha) / safety);
      h = h_try / fac;
    }
    if (h < h_min) {
      traj.termination = Termination::step_failure;
      std::ostringstream os;
      os.precision(17);
      os << "step size underflow (h = " << h << ") at t = " << t << ", r = " << y[0];
      traj.termination_detail = os.str();
      break;
    }
  }
  if (traj.samples.back().state.t != t) record(false);
  traj.stats.winding_count = (y[2] - phi_start) / (2.0 * kPi);
  return traj;
}

std::vector<GridVelocity> velocity_field_grid(const GridSpec& grid, const PacketParams& params,
                                              const RadialProfile& profile, GuidanceMode mode, unsigned workers,
                                              const VelocityOptions& options) {
  const std::size_t nt = grid.theta.size(), np = grid.phi.size();
  const std::size_t n = grid.r.size() * nt * np;
  std::vector<GridVelocity> out(n);
  parallel_for(n, workers, [&](std::size_t idx) {
    const std::size_t ir = idx / (nt * np), it = (idx / np) % nt, ip = idx % np;
    GridVelocity& row = out[idx];
    row.point = {grid.r[ir], grid.theta[it], grid.phi[ip], grid.t};
    BohmState s{grid.t, grid.r[ir], grid.theta[it], grid.phi[ip], grid.half_cycle % 2 == 0 ? 1 : -1,
                grid.half_cycle};
    try {
      row.v = velocity(s, params, profile, mode, options);
    } catch (const Error& e) {
      row.error = e.kind();
    }
  });
  return out;
}

}  // namespace rydberg
