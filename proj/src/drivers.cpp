#include "rydberg/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>

#include "rydberg/errors.hpp"
#include "rydberg/output.hpp"
#include "rydberg/parallel.hpp"

namespace rydberg {
namespace {

namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

fs::path prepare_dir(const RunConfig& cfg) {
  fs::path dir(cfg.output.directory);
  fs::create_directories(dir);
  return dir;
}

void write_packet(JsonWriter& w, const PacketParams& p) {
  w.key("packet").begin_object();
  w.field("n0", p.orbit.n0).field("l0", p.orbit.l0).field("E", p.orbit.E);
  w.field("eccentricity", p.orbit.eccentricity()).field("delta", p.delta).field("sigma2", p.sigma2);
  w.field("winding_truncation", p.winding_truncation);
  w.end_object();
}

void write_claimed_orders(JsonWriter& w) {
  w.key("claimed_orders").begin_object();
  w.field("dS_dr_minus_p0_order", -7);
  w.field("dS_dphi_minus_delta_l0_order", -5);
  w.field("dS_dtheta", 0);
  w.end_object();
}

std::string cell(double v) { return format_double(v); }

struct TrajectoryRun {
  PacketParams params;
  std::unique_ptr<RadialProfile> profile;
  Trajectory traj;
};

TrajectoryRun simulate_trajectory(const RunConfig& cfg) {
  TrajectoryRun run;
  run.params = cfg.packet();
  run.profile = std::make_unique<RadialProfile>(run.params.orbit);
  const RadialProfile& prof = *run.profile;
  const auto& s = cfg.simulate;
  const double r = radius_at_fraction(prof, s.r_fraction);
  BohmState init{prof.t0(r), r, s.theta, prof.phi0(r) + s.phi_offset, 1, 0};
  IntegratorOptions opts;
  opts.output_interval_periods = cfg.output.sample_interval_periods;
  const double T = kepler_period(run.params.orbit);
  run.traj = integrate_trajectory(init, s.duration_periods * T, s.tol, s.mode, run.params, prof, opts);
  return run;
}

struct TrajectoryMetrics {
  double planarity = 0.0;       ///< max |theta - pi/2|
  double momentum_band = 0.0;   ///< max |r sin(theta) v_phi - delta l0|
  double r_min = 0.0, r_max = 0.0;
};

TrajectoryMetrics metrics(const Trajectory& tr) {
  TrajectoryMetrics m;
  m.r_min = m.r_max = tr.samples.front().state.r;
  const double dl0 = tr.params.azimuthal_momentum();
  for (const auto& s : tr.samples) {
    m.planarity = std::max(m.planarity, std::abs(s.state.theta - kPi / 2.0));
    m.momentum_band =
        std::max(m.momentum_band, std::abs(s.state.r * std::sin(s.state.theta) * s.velocity.v_phi - dl0));
    m.r_min = std::min(m.r_min, s.state.r);
    m.r_max = std::max(m.r_max, s.state.r);
  }
  return m;
}

void write_trajectory_csv(const fs::path& path, const TrajectoryRun& run, bool include_q, unsigned workers) {
  const auto& samples = run.traj.samples;
  std::vector<std::vector<std::string>> rows(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    const auto& st = samples[i].state;
    const auto& v = samples[i].velocity;
    const int k = run.traj.mode == GuidanceMode::raw_single_branch ? 0 : st.half_cycle;
    std::string S, Q;
    try {
      S = cell(phase(st.point(), run.params, *run.profile, k));
    } catch (const Error&) {
    }
    if (include_q && k == 0) {
      try {
        Q = cell(quantum_potential(st.point(), run.params, *run.profile));
      } catch (const Error&) {
      }
    }
    const double sth = std::sin(st.theta);
    rows[i] = {cell(st.t), cell(st.r), cell(st.theta), cell(st.phi), cell(st.r * sth * std::cos(st.phi)),
               cell(st.r * sth * std::sin(st.phi)), cell(st.r * std::cos(st.theta)), cell(v.v_r),
               cell(v.v_theta), cell(v.v_phi), std::to_string(st.branch), S, Q};
  });
  CsvTable csv({"t", "r", "theta", "phi", "x", "y", "z", "v_r", "v_theta", "v_phi", "branch", "S", "Q_optional"});
  for (auto& r : rows) csv.add_row(std::move(r));
  write_text_file(path, csv.str());
}

void write_fit(JsonWriter& w, const Trajectory& tr, std::optional<ConicFit>& fit_out) {
  w.key("conic_fit").begin_object();
  try {
    const ConicFit f = fit_conic(tr);
    fit_out = f;
    w.field("e_fit", f.e_fit).field("p_fit", f.p_fit).field("phi_p_fit", f.phi_p_fit);
    w.field("rms_residual", f.rms_residual).field("rms_over_p", f.rms_residual / f.p_fit);
    w.field("n_samples", f.n_samples).field("iterations", f.iterations);
  } catch (const Error& e) {
    w.field("error", std::string_view(e.kind())).field("message", std::string_view(e.what()));
  }
  w.end_object();
}

// Largest |r_bohm(t) - r_kepler(t)| / a over the samples.
double radial_track_deviation(const Trajectory& tr, const KeplerOrbit& ref) {
  std::vector<double> ts;
  ts.reserve(tr.samples.size());
  for (const auto& s : tr.samples) ts.push_back(s.state.t);
  const auto kep = propagate_kepler(ref, ts);
  double dev = 0.0;
  for (std::size_t i = 0; i < kep.size(); ++i) dev = std::max(dev, std::abs(tr.samples[i].state.r - kep[i].r));
  return dev / ref.semi_major();
}

void write_candidate(JsonWriter& w, const char* name, const KeplerOrbit& k, const std::optional<ConicFit>& fit,
                     const Trajectory& tr) {
  w.key(name).begin_object();
  w.field("L", k.L).field("e", k.e).field("p_latus", k.p_latus).field("r_min", k.r_min()).field("r_max", k.r_max());
  if (fit) {
    w.field("eccentricity_distance", eccentricity_distance(*fit, k));
    w.field("p_distance", std::abs(fit->p_fit - k.p_latus) / k.p_latus);
  } else {
    w.key("eccentricity_distance").null();
    w.key("p_distance").null();
  }
  w.field("max_radial_track_deviation", radial_track_deviation(tr, k));
  w.end_object();
}

std::string console_line(const std::string& what, const fs::path& p) { return what + ": " + p.string() + "\n"; }

}  // namespace

DriverResult run_simulate(const RunConfig& cfg, unsigned workers) {
  const fs::path dir = prepare_dir(cfg);
  const TrajectoryRun run = simulate_trajectory(cfg);
  const Trajectory& tr = run.traj;
  DriverResult res;

  const fs::path csv = dir / "trajectory.csv";
  write_trajectory_csv(csv, run, cfg.output.include_q, workers);

  const TrajectoryMetrics m = metrics(tr);
  JsonWriter w;
  w.begin_object();
  w.field("subcommand", "simulate");
  write_packet(w, run.params);
  w.key("settings").begin_object();
  w.field("mode", to_string(tr.mode)).field("tol", cfg.simulate.tol);
  w.field("duration_periods", cfg.simulate.duration_periods).field("r_fraction", cfg.simulate.r_fraction);
  w.field("theta", cfg.simulate.theta).field("phi_offset", cfg.simulate.phi_offset);
  w.field("sample_interval_periods", cfg.output.sample_interval_periods);
  w.end_object();
  w.field("termination", to_string(tr.termination));
  w.field("termination_detail", std::string_view(tr.termination_detail));
  w.key("stats").begin_object();
  w.field("samples", tr.samples.size()).field("turning_events", tr.stats.turning_events);
  w.field("winding_count", tr.stats.winding_count).field("accepted_steps", tr.stats.accepted_steps);
  w.field("rejected_steps", tr.stats.rejected_steps).field("accumulated_error", tr.stats.accumulated_error);
  w.field("event_phis", tr.stats.event_phis);
  w.end_object();
  w.key("metrics").begin_object();
  w.field("max_theta_deviation", m.planarity).field("max_angular_momentum_deviation", m.momentum_band);
  w.field("r_min", m.r_min).field("r_max", m.r_max);
  w.end_object();
  std::optional<ConicFit> fit;
  write_fit(w, tr, fit);
  write_claimed_orders(w);
  w.end_object();
  const fs::path summary = dir / "simulate_summary.json";
  write_text_file(summary, w.str());

  res.files = {csv, summary};
  std::ostringstream os;
  os << "simulate: " << to_string(tr.termination) << ", " << tr.samples.size() << " samples, "
     << tr.stats.turning_events << " turning events";
  if (fit) os << ", e_fit = " << format_double(fit->e_fit);
  os << "\n" << console_line("trajectory", csv) << console_line("summary", summary);
  res.console = os.str();
  return res;
}

DriverResult run_compare_classical(const RunConfig& cfg, unsigned workers) {
  (void)workers;
  const fs::path dir = prepare_dir(cfg);
  const TrajectoryRun run = simulate_trajectory(cfg);
  const Trajectory& tr = run.traj;
  const ReferenceCandidates cand = reference_candidates(run.params.orbit, run.params.delta, cfg.simulate.phi_offset);

  JsonWriter w;
  w.begin_object();
  w.field("subcommand", "compare-classical");
  write_packet(w, run.params);
  w.field("mode", to_string(tr.mode)).field("termination", to_string(tr.termination));
  w.field("samples", tr.samples.size());
  std::optional<ConicFit> fit;
  write_fit(w, tr, fit);
  w.key("references").begin_object();
  write_candidate(w, "L_equals_l0", cand.by_l0, fit, tr);
  write_candidate(w, "L_equals_delta_l0", cand.by_delta_l0, fit, tr);
  w.end_object();
  if (fit) {
    const bool l0_wins = eccentricity_distance(*fit, cand.by_l0) <= eccentricity_distance(*fit, cand.by_delta_l0);
    w.field("nearer_reference", l0_wins ? "L_equals_l0" : "L_equals_delta_l0");
  } else {
    w.key("nearer_reference").null();
  }
  write_claimed_orders(w);
  w.end_object();
  const fs::path out = dir / "compare_classical.json";
  write_text_file(out, w.str());

  DriverResult res;
  res.files = {out};
  res.console = console_line("compare-classical", out);
  return res;
}

DriverResult run_scaling(const RunConfig& cfg, unsigned workers) {
  const fs::path dir = prepare_dir(cfg);
  ScalingTemplate tmpl;
  tmpl.n0_over_l0 = cfg.scaling.n0_over_l0;
  tmpl.delta = cfg.delta;
  tmpl.sigma2_power = cfg.scaling.sigma2_power;
  tmpl.winding_truncation = cfg.winding_truncation;
  ProbeSpec probe_set;
  probe_set.radial_fractions = cfg.scaling.radial_fractions;
  probe_set.phase_offsets = cfg.scaling.phase_offsets;
  probe_set.theta_offsets = cfg.scaling.theta_offsets;
  probe_set.margin = cfg.scaling.margin;
  const ScalingReport rep = correction_scaling(cfg.scaling.l0_values, tmpl, probe_set, workers);

  JsonWriter w;
  w.begin_object();
  w.field("subcommand", "scaling-study");
  w.key("template").begin_object();
  w.field("n0_over_l0", tmpl.n0_over_l0).field("delta", tmpl.delta).field("sigma2_power", tmpl.sigma2_power);
  w.field("winding_truncation", tmpl.winding_truncation);
  w.end_object();
  w.key("probe_spec").begin_object();
  w.field("radial_fractions", probe_set.radial_fractions).field("phase_offsets", probe_set.phase_offsets);
  w.field("theta_offsets", probe_set.theta_offsets).field("margin", probe_set.margin);
  w.end_object();
  w.field("l0_values", rep.l0_values).field("n0_values", rep.n0_values);
  w.field("delta_r", rep.delta_r).field("delta_phi", rep.delta_phi).field("delta_theta", rep.delta_theta);
  w.field("delta_r_fd", rep.delta_r_fd).field("delta_phi_fd", rep.delta_phi_fd);
  w.field("delta_r_rel", rep.delta_r_rel).field("delta_phi_rel", rep.delta_phi_rel);
  w.key("slopes").begin_object();
  w.field("slope_r", rep.slope_r).field("slope_r_stderr", rep.slope_r_stderr);
  w.field("slope_phi", rep.slope_phi).field("slope_phi_stderr", rep.slope_phi_stderr);
  w.field("slope_r_rel", rep.slope_r_rel).field("slope_phi_rel", rep.slope_phi_rel);
  w.end_object();
  w.field("max_route_disagreement", rep.max_route_disagreement);
  write_claimed_orders(w);
  w.end_object();
  const fs::path report = dir / "scaling_report.json";
  write_text_file(report, w.str());

  CsvTable csv({"l0", "n0", "fraction", "phase_offset", "theta_offset", "r", "theta", "phi", "t", "p0", "corr_r",
                "corr_phi", "dS_dtheta", "corr_r_fd", "corr_phi_fd"});
  for (const auto& d : rep.probes) {
    csv.add_row({cell(d.l0), cell(d.l0 * tmpl.n0_over_l0), cell(d.fraction), cell(d.phase_offset),
                 cell(d.theta_offset), cell(d.point.r), cell(d.point.theta), cell(d.point.phi), cell(d.point.t),
                 cell(d.p0), cell(d.corr_r), cell(d.corr_phi), cell(d.dtheta), cell(d.corr_r_fd),
                 cell(d.corr_phi_fd)});
  }
  const fs::path dev = dir / "scaling_deviations.csv";
  write_text_file(dev, csv.str());

  DriverResult res;
  res.files = {report, dev};
  std::ostringstream os;
  os << "scaling-study: slope_r = " << format_double(rep.slope_r) << " +- " << format_double(rep.slope_r_stderr)
     << ", slope_phi = " << format_double(rep.slope_phi) << " +- " << format_double(rep.slope_phi_stderr) << "\n"
     << console_line("report", report) << console_line("deviations", dev);
  res.console = os.str();
  return res;
}

DriverResult run_field_dump(const RunConfig& cfg, unsigned workers) {
  const fs::path dir = prepare_dir(cfg);
  const PacketParams params = cfg.packet();
  const RadialProfile prof(params.orbit);
  const auto& f = cfg.field_dump;

  const RadialValues ref = prof.evaluate(radius_at_fraction(prof, f.reference_fraction), f.half_cycle);
  GridSpec grid;
  for (int i = 0; i < f.r_count; ++i) {
    const double frac = f.r_count == 1 ? f.r_fraction_min
                                       : f.r_fraction_min + (f.r_fraction_max - f.r_fraction_min) * i / (f.r_count - 1);
    grid.r.push_back(radius_at_fraction(prof, frac));
  }
  grid.theta = f.theta_values;
  for (double off : f.phi_offsets) grid.phi.push_back(ref.phi0 + off);
  grid.t = ref.t0;
  grid.half_cycle = f.half_cycle;
  const auto vel = velocity_field_grid(grid, params, prof, GuidanceMode::two_branch, workers);

  std::vector<std::vector<std::string>> rows(vel.size());
  parallel_for(vel.size(), workers, [&](std::size_t i) {
    const FieldPoint& p = vel[i].point;
    std::string R, S, Q, status;
    auto note = [&](const std::string& what, const std::string& kind) {
      if (!status.empty()) status += ';';
      status += what + ":" + kind;
    };
    try {
      S = cell(phase(p, params, prof, f.half_cycle));
    } catch (const Error& e) {
      note("S", e.kind());
    }
    if (f.half_cycle == 0) {
      const WaveSample ws = wavefunction(p, params, prof);
      if (ws.in_domain) {
        R = cell(std::abs(ws.psi));
        if (ws.truncation_warning) note("R", "truncation_warning");
      } else {
        note("R", "outside_domain");
      }
      try {
        Q = cell(quantum_potential(p, params, prof));
      } catch (const Error& e) {
        note("Q", e.kind());
      }
    }
    std::string vr, vt, vp;
    if (vel[i].error.empty()) {
      vr = cell(vel[i].v.v_r);
      vt = cell(vel[i].v.v_theta);
      vp = cell(vel[i].v.v_phi);
    } else {
      note("v", vel[i].error);
    }
    rows[i] = {cell(p.r), cell(p.theta), cell(p.phi), R, S, Q, vr, vt, vp, status.empty() ? "ok" : status};
  });
  CsvTable csv({"r", "theta", "phi", "R", "S", "Q", "v_r", "v_theta", "v_phi", "status"});
  for (auto& r : rows) csv.add_row(std::move(r));
  const fs::path out = dir / "field_dump.csv";
  write_text_file(out, csv.str());

  DriverResult res;
  res.files = {out};
  res.console = "field-dump: " + std::to_string(csv.rows()) + " grid points\n" + console_line("grid", out);
  return res;
}

std::string error_json(const std::string& subcommand, const std::string& kind, const std::string& message) {
  JsonWriter w;
  w.begin_object();
  w.key("error").begin_object();
  w.field("subcommand", std::string_view(subcommand)).field("kind", std::string_view(kind));
  w.field("message", std::string_view(message));
  w.end_object();
  w.end_object();
  return w.str();
}

}  // namespace rydberg
