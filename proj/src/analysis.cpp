#include "rydberg/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "rydberg/errors.hpp"
#include "rydberg/parallel.hpp"

namespace rydberg {
namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double x) {
  x = std::remainder(x, 2.0 * kPi);
  return x <= -kPi ? x + 2.0 * kPi : x;
}

double conic_cost(const std::vector<PolarPoint>& pts, const Eigen::Vector3d& x) {
  double c = 0.0;
  for (const auto& q : pts) {
    const double res = x[1] / q.r - 1.0 - x[0] * std::cos(q.phi - x[2]);
    c += res * res;
  }
  return c;
}

// Central difference at h and h/2 combined by Richardson extrapolation.
template <class F>
double richardson(F&& f, double h) {
  const double d1 = (f(h) - f(-h)) / (2.0 * h);
  const double d2 = (f(0.5 * h) - f(-0.5 * h)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

double radial_step(const RadialProfile& profile, double r, double scale) {
  const double room = std::min(r - profile.r_lo(), profile.r_hi() - r);
  const double h = std::min(1e-3 * (profile.r_plus() - profile.r_minus()) * scale, 0.25 * room);
  if (!(h > 0.0)) throw DomainError("no room for a radial difference stencil");
  return h;
}

}  // namespace

ConicFit fit_conic(const std::vector<PolarPoint>& points) {
  if (points.size() < 3) throw InsufficientArc("fit_conic: need at least three samples");
  auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                      [](const PolarPoint& a, const PolarPoint& b) { return a.r < b.r; });
  const double rmin = lo->r, rmax = hi->r;
  Eigen::Vector3d x((rmax - rmin) / (rmax + rmin), 2.0 * rmin * rmax / (rmin + rmax), lo->phi);

  const std::size_t n = points.size();
  double cost = conic_cost(points, x);
  double lambda = 1e-3;
  ConicFit fit;
  bool converged = false;
  for (int it = 1; it <= 200 && !converged; ++it) {
    fit.iterations = it;
    Eigen::Matrix3d JtJ = Eigen::Matrix3d::Zero();
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (const auto& q : points) {
      const double c = std::cos(q.phi - x[2]), s = std::sin(q.phi - x[2]);
      const Eigen::Vector3d J(-c, 1.0 / q.r, -x[0] * s);
      const double res = x[1] / q.r - 1.0 - x[0] * c;
      JtJ += J * J.transpose();
      g += J * res;
    }
    const double dmax = JtJ.diagonal().maxCoeff();
    Eigen::Matrix3d damp = Eigen::Matrix3d::Zero();
    for (int j = 0; j < 3; ++j) damp(j, j) = std::max(JtJ(j, j), 1e-14 * dmax);

    // Inner loop: raise the damping until the cost does not increase.
    while (true) {
      const Eigen::Vector3d step = (JtJ + lambda * damp).ldlt().solve(-g);
      const double scaled = std::max({std::abs(step[0]), std::abs(step[1]) / std::abs(x[1]),
                                      std::abs(x[0] * step[2])});
      const Eigen::Vector3d trial = x + step;
      const double trial_cost = conic_cost(points, trial);
      if (trial_cost <= cost) {
        x = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-12);
        if (scaled < 1e-12) converged = true;
        break;
      }
      if (scaled < 1e-12 || lambda > 1e16) {
        converged = true;  // at the minimum to rounding
        break;
      }
      lambda *= 10.0;
    }
  }
  if (!converged) throw ConvergenceError("fit_conic: no convergence after 200 iterations");
  if (x[0] < 0.0) {
    x[0] = -x[0];
    x[2] += kPi;
  }
  fit.e_fit = x[0];
  fit.p_fit = x[1];
  fit.phi_p_fit = wrap_angle(x[2]);
  fit.rms_residual = std::sqrt(cost / static_cast<double>(n));
  fit.n_samples = n;
  return fit;
}

ConicFit fit_conic(const Trajectory& traj) {
  if (traj.samples.size() < 2) throw InsufficientArc("fit_conic: trajectory has fewer than two samples");
  const double span = traj.samples.back().state.t - traj.samples.front().state.t;
  const double period = kepler_period(traj.params.orbit);
  if (span < period * (1.0 - 1e-9)) {
    std::ostringstream os;
    os.precision(6);
    os << "fit_conic: samples span " << span / period << " radial periods (< 1)";
    throw InsufficientArc(os.str());
  }
  std::vector<PolarPoint> pts;
  pts.reserve(traj.samples.size());
  for (const auto& s : traj.samples) pts.push_back({s.state.r, s.state.phi});
  return fit_conic(pts);
}

double eccentricity_distance(const ConicFit& fit, const KeplerOrbit& ref) {
  return std::abs(fit.e_fit - ref.e) / std::max(ref.e, 1e-300);
}

LogLogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_fit: need matching samples (>= 2)");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
              std::numeric_limits<double>::quiet_NaN()};
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  LogLogFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = ly[i] - (f.intercept + f.slope * lx[i]);
      ssr += d * d;
    }
    f.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  }
  return f;
}

PacketParams scaling_params(double l0, const ScalingTemplate& tmpl) {
  const OrbitParams orbit = OrbitParams::make(tmpl.n0_over_l0 * l0, l0);
  return PacketParams::make(orbit, tmpl.delta, std::pow(l0, tmpl.sigma2_power), tmpl.winding_truncation);
}

std::vector<FieldPoint> probe_points(const RadialProfile& profile, double delta, const ProbeSpec& probe_set) {
  if (profile.circular()) throw DomainError("probe_points: circular orbit has no radial probe range");
  std::vector<FieldPoint> out;
  for (double f : probe_set.radial_fractions) {
    if (f < probe_set.margin || f > 1.0 - probe_set.margin) {
      std::ostringstream os;
      os << "probe fraction " << f << " lies inside the " << probe_set.margin << " turning-point margin";
      throw DomainError(os.str());
    }
    const double r = profile.r_minus() + f * (profile.r_plus() - profile.r_minus());
    if (!profile.contains(r)) throw DomainError("probe point outside the clamped radial domain");
    for (double th : probe_set.theta_offsets) {
      for (double off : probe_set.phase_offsets) {
        out.push_back({r, kPi / 2.0 + th, profile.phi0(r) + off, profile.t0(r)});
      }
    }
    (void)delta;
  }
  return out;
}

ScalingReport correction_scaling(const std::vector<double>& l0_values, const ScalingTemplate& tmpl,
                                 const ProbeSpec& probe_set, unsigned workers) {
  if (l0_values.size() < 4) throw DomainError("correction_scaling: need at least 4 l0 values");
  const auto [mn, mx] = std::minmax_element(l0_values.begin(), l0_values.end());
  if (!(*mn > 0.0) || *mx / *mn < 5.0) throw DomainError("correction_scaling: l0 values must span a factor >= 5");

  const std::size_t nl = l0_values.size();
  std::vector<PacketParams> params(nl);
  std::vector<std::unique_ptr<RadialProfile>> profiles(nl);
  parallel_for(nl, workers, [&](std::size_t i) {
    params[i] = scaling_params(l0_values[i], tmpl);
    profiles[i] = std::make_unique<RadialProfile>(params[i].orbit);
  });

  struct Job {
    std::size_t level;
    std::size_t probe;
    FieldPoint point;
  };
  std::vector<Job> jobs;
  const std::size_t per_theta = probe_set.phase_offsets.size();
  const std::size_t per_fraction = probe_set.theta_offsets.size() * per_theta;
  for (std::size_t i = 0; i < nl; ++i) {
    const auto pts = probe_points(*profiles[i], params[i].delta, probe_set);
    for (std::size_t j = 0; j < pts.size(); ++j) jobs.push_back({i, j, pts[j]});
  }

  ScalingReport rep;
  rep.probes.resize(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t k) {
    const Job& job = jobs[k];
    const PacketParams& pp = params[job.level];
    const RadialProfile& prof = *profiles[job.level];
    const FieldPoint& pt = job.point;
    const PhaseGradient g = phase_gradient(pt, pp, prof, 0);

    ProbeDeviation d;
    d.l0 = pp.orbit.l0;
    d.fraction = probe_set.radial_fractions[job.probe / per_fraction];
    d.theta_offset = probe_set.theta_offsets[(job.probe / per_theta) % probe_set.theta_offsets.size()];
    d.phase_offset = probe_set.phase_offsets[job.probe % per_theta];
    d.point = pt;
    d.p0 = g.p0;
    d.corr_r = g.corr_r;
    d.corr_phi = g.corr_phi;
    d.dtheta = g.dtheta;

    auto corr = [&](const FieldPoint& q) { return phase_parts(q, pp, prof, 0).correction(); };
    const double hr = radial_step(prof, pt.r, tmpl.fd_step_scale);
    d.corr_r_fd = richardson([&](double s) { return corr({pt.r + s, pt.theta, pt.phi, pt.t}); }, hr);
    d.corr_phi_fd =
        richardson([&](double s) { return corr({pt.r, pt.theta, pt.phi + s, pt.t}); }, 1e-3 * tmpl.fd_step_scale);
    rep.probes[k] = d;
  });

  rep.l0_values = l0_values;
  for (std::size_t i = 0; i < nl; ++i) {
    double dr = 0.0, dphi = 0.0, dth = 0.0, dr_fd = 0.0, dphi_fd = 0.0, p0max = 0.0;
    for (const auto& d : rep.probes) {
      if (d.l0 != params[i].orbit.l0) continue;
      dr = std::max(dr, std::abs(d.corr_r));
      dphi = std::max(dphi, std::abs(d.corr_phi));
      dth = std::max(dth, std::abs(d.dtheta));
      dr_fd = std::max(dr_fd, std::abs(d.corr_r_fd));
      dphi_fd = std::max(dphi_fd, std::abs(d.corr_phi_fd));
      p0max = std::max(p0max, d.p0);
      auto gap = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), 1e-300); };
      rep.max_route_disagreement =
          std::max({rep.max_route_disagreement, gap(d.corr_r, d.corr_r_fd), gap(d.corr_phi, d.corr_phi_fd)});
    }
    rep.n0_values.push_back(params[i].orbit.n0);
    rep.delta_r.push_back(dr);
    rep.delta_phi.push_back(dphi);
    rep.delta_theta.push_back(dth);
    rep.delta_r_fd.push_back(dr_fd);
    rep.delta_phi_fd.push_back(dphi_fd);
    rep.delta_r_rel.push_back(dr / p0max);
    rep.delta_phi_rel.push_back(dphi / params[i].azimuthal_momentum());
  }
  const LogLogFit fr = loglog_fit(rep.l0_values, rep.delta_r);
  const LogLogFit fp = loglog_fit(rep.l0_values, rep.delta_phi);
  rep.slope_r = fr.slope;
  rep.slope_r_stderr = fr.slope_stderr;
  rep.slope_phi = fp.slope;
  rep.slope_phi_stderr = fp.slope_stderr;
  rep.slope_r_rel = loglog_fit(rep.l0_values, rep.delta_r_rel).slope;
  rep.slope_phi_rel = loglog_fit(rep.l0_values, rep.delta_phi_rel).slope;
  return rep;
}

std::vector<HjResidual> hj_residual_scan(const std::vector<FieldPoint>& points, const PacketParams& params,
                                         const RadialProfile& profile, const HjOptions& options) {
  const double E = params.orbit.E;
  const double period = kepler_period(params.orbit);
  const int k = options.half_cycle;
  auto S = [&](double r, double th, double ph, double t) {
    double s;
    if (options.classical_limit) {
      s = profile.evaluate(r, k).S0 + params.azimuthal_momentum() * ph;
    } else {
      s = phase({r, th, ph, t}, params, profile, k);
    }
    return options.restore_energy_phase ? s - E * t : s;
  };

  std::vector<HjResidual> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const FieldPoint& p = points[i];
    HjResidual& row = out[i];
    row.point = p;
    try {
      if (!profile.contains(p.r) || profile.circular()) throw DomainError("hj_residual_scan: point outside domain");
      if (!(p.theta > 0.0 && p.theta < kPi)) throw DomainError("hj_residual_scan: theta outside (0, pi)");
      const double ha = 1e-3 * options.step_scale;
      const double hr = radial_step(profile, p.r, options.step_scale);
      const double ht = 1e-4 * period * options.step_scale;
      const double dr = richardson([&](double s) { return S(p.r + s, p.theta, p.phi, p.t); }, hr);
      const double dth = richardson([&](double s) { return S(p.r, p.theta + s, p.phi, p.t); }, ha);
      const double dph = richardson([&](double s) { return S(p.r, p.theta, p.phi + s, p.t); }, ha);
      row.dS_dt = richardson([&](double s) { return S(p.r, p.theta, p.phi, p.t + s); }, ht);
      const double st = std::sin(p.theta);
      row.kinetic = 0.5 * (dr * dr + (dth / p.r) * (dth / p.r) + (dph / (p.r * st)) * (dph / (p.r * st)));
      row.Q = options.classical_limit ? 0.0
                                      : quantum_potential(p, params, profile, {options.step_scale, 1e-12});
      row.residual = row.dS_dt + row.kinetic + row.Q - 1.0 / p.r;
      row.normalized = row.residual / std::abs(E);
    } catch (const Error& e) {
      row.error = e.kind();
    }
  }
  return out;
}

}  // namespace rydberg
