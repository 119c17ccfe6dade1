// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: acceptance WORK_DIR

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rydberg/analysis.hpp"
#include "rydberg/drivers.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/parallel.hpp"

using namespace rydberg;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

const std::vector<std::pair<double, double>> kPairs{{10, 9}, {50, 49}, {100, 99}, {50.5, 50}};

Outcome radial_action_identity() {
  double worst = 0;
  for (auto [n, l] : kPairs) {
    const auto o = OrbitParams::make(n, l);
    const double S = radial_action_quadrature(turning_points(o).r_plus, o);
    worst = std::max(worst, std::abs(S / (kPi * (n - l)) - 1));
  }
  return {worst < 1e-8, fmt("max relative error %.3e (tol 1e-8)", worst)};
}

Outcome apsidal_identities() {
  double wphi = 0, wt = 0;
  for (auto [n, l] : kPairs) {
    const auto o = OrbitParams::make(n, l);
    const double rp = turning_points(o).r_plus;
    wphi = std::max(wphi, std::abs(phi0_quadrature(rp, o) - kPi));
    wt = std::max(wt, std::abs(t0_quadrature(rp, o) / (kPi * n * n * n) - 1));
  }
  return {wphi < 1e-8 && wt < 1e-8, fmt("phi0 error %.3e, t0 relative error %.3e (tol 1e-8)", wphi, wt)};
}

Outcome leading_orders() {
  const auto orbit = OrbitParams::make(50.5, 50);
  const RadialProfile prof(orbit);
  const auto params = PacketParams::make(orbit, 0.95);
  double dth = 0, dphi = 0, dr = 0;
  for (const auto& p : probe_points(prof, 0.95, ProbeSpec{})) {
    const BohmState s{p.t, p.r, p.theta, p.phi, 1, 0};
    const auto res = velocity_detail(s, params, prof, GuidanceMode::two_branch);
    dth = std::max(dth, std::abs(res.gradient.dtheta));
    dphi = std::max(dphi, std::abs(res.gradient.dphi - 47.5));
    dr = std::max(dr, std::abs(res.gradient.dr - res.gradient.branch * res.gradient.p0));
  }
  return {dth < 1e-10 && dphi < 1e-4 && dr < 1e-5,
          fmt("max|dS/dtheta| %.3e, max|dS/dphi - delta l0| %.3e, max|dS/dr - p0| %.3e", dth, dphi, dr)};
}

Outcome scaling_exponents() {
  const auto rep = correction_scaling({10, 20, 50, 100}, {}, {}, worker_count());
  return {rep.slope_phi <= -4 && rep.slope_r <= -6,
          fmt("slope_phi %.3f +- %.3f (<= -4), slope_r %.3f +- %.3f (<= -6)", rep.slope_phi, rep.slope_phi_stderr,
              rep.slope_r, rep.slope_r_stderr)};
}

Outcome ellipse_correspondence() {
  const auto orbit = OrbitParams::make(50.5, 50);
  const RadialProfile prof(orbit);
  const auto params = PacketParams::make(orbit, 0.99);
  const double r = radius_at_fraction(prof, 0.05);
  const auto tr = integrate_trajectory({prof.t0(r), r, kPi / 2, prof.phi0(r), 1, 0}, 3 * kepler_period(orbit),
                                       1e-9, GuidanceMode::two_branch, params, prof);
  if (tr.termination != Termination::completed) return {false, "trajectory ended early: " + tr.termination_detail};
  const auto fit = fit_conic(tr);
  const auto cand = reference_candidates(orbit, 0.99);
  const double d1 = eccentricity_distance(fit, cand.by_l0), d2 = eccentricity_distance(fit, cand.by_delta_l0);
  double planar = 0;
  for (const auto& s : tr.samples) planar = std::max(planar, std::abs(s.state.theta - kPi / 2));
  const double rel = fit.rms_residual / fit.p_fit;
  return {rel < 1e-2 && std::min(d1, d2) < 0.01 && planar < 1e-9,
          fmt("rms/p %.3e, e distance %.3e (L = l0) / %.3e (L = delta l0), max|theta - pi/2| %.3e", rel, d1, d2,
              planar)};
}

Outcome circular_degeneracy() {
  const auto orbit = OrbitParams::make(50, 50);
  const RadialProfile prof(orbit);
  const auto params = PacketParams::make(orbit, 1.0);
  const auto tr = integrate_trajectory({0.0, 2500.0, kPi / 2, 0.0, 1, 0}, kepler_period(orbit), 1e-9,
                                       GuidanceMode::two_branch, params, prof);
  if (tr.termination != Termination::completed) return {false, "trajectory ended early: " + tr.termination_detail};
  double drift = 0;
  for (const auto& s : tr.samples) drift = std::max(drift, std::abs(s.state.r / 2500.0 - 1));
  const auto fit = fit_conic(tr);
  return {drift < 1e-6 && fit.e_fit < 1e-8, fmt("max relative r drift %.3e, e_fit %.3e", drift, fit.e_fit)};
}

Outcome phase_polar_consistency() {
  const auto orbit = OrbitParams::make(50.5, 50);
  const RadialProfile prof(orbit);
  const auto params = PacketParams::make(orbit, 0.95);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> frac(0.05, 0.95), u(-1, 1);
  double worst = 0;
  int n = 0, drawn = 0;
  while (n < 100) {
    ++drawn;
    const double r = radius_at_fraction(prof, frac(rng));
    const FieldPoint p{r, kPi / 2 + 0.2 * u(rng), prof.phi0(r) + 2.5 * u(rng), prof.t0(r) + 2000 * u(rng)};
    if (envelope(p, params, prof) <= 1e-6) continue;
    ++n;
    const double d = std::remainder(phase(p, params, prof) - std::arg(wavefunction(p, params, prof).psi), 2 * kPi);
    worst = std::max(worst, std::abs(d));
  }
  return {worst < 1e-6, fmt("max |phase - arg psi| mod 2pi %.3e over 100 points (%g drawn)", worst, drawn)};
}

Outcome hj_trend() {
  std::vector<double> v;
  for (double l0 : {20.0, 50.0, 100.0}) {
    const auto orbit = OrbitParams::make(1.01 * l0, l0);
    const RadialProfile prof(orbit);
    const auto params = PacketParams::make(orbit, 0.95);
    const auto rows = hj_residual_scan({packet_center(prof, 0.5)}, params, prof);
    if (!rows[0].error.empty()) return {false, "residual failed at l0 = " + std::to_string(l0) + ": " + rows[0].error};
    v.push_back(rows[0].normalized);
  }
  const bool ok = std::abs(v[0]) > std::abs(v[1]) && std::abs(v[1]) > std::abs(v[2]);
  return {ok, fmt("normalized residual %.4e, %.4e, %.4e at l0 = 20, 50, 100 (magnitude)", v[0], v[1], v[2])};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism(const fs::path& work) {
  using Driver = std::function<DriverResult(const RunConfig&, unsigned)>;
  const std::vector<std::pair<std::string, Driver>> drivers{
      {"simulate", run_simulate},
      {"scaling-study", run_scaling},
      {"field-dump", run_field_dump},
      {"compare-classical", run_compare_classical}};
  const RunConfig base = parse_config(R"({"n0": 20.2, "l0": 20, "simulate": {"duration_periods": 1.5}})");
  int files = 0;
  for (const auto& [name, run] : drivers) {
    std::vector<std::vector<std::string>> outputs;
    for (auto [tag, workers] : std::vector<std::pair<std::string, unsigned>>{{"a", 1}, {"b", 1}, {"c", 4}}) {
      RunConfig cfg = base;
      cfg.output.directory = (work / name / tag).string();
      fs::remove_all(cfg.output.directory);
      const auto res = run(cfg, workers);
      std::vector<std::string> bytes;
      for (const auto& f : res.files) bytes.push_back(f.filename().string() + "\n" + slurp(f));
      outputs.push_back(bytes);
    }
    if (outputs[0].empty()) return {false, name + " wrote no files"};
    if (outputs[0] != outputs[1]) return {false, name + " differs between two runs"};
    if (outputs[0] != outputs[2]) return {false, name + " differs between 1 and 4 workers"};
    files += static_cast<int>(outputs[0].size());
  }
  return {true, fmt("%g output files byte-identical across two runs and 1 vs 4 workers", files)};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "rydberg_acceptance";
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"radial-action identity", radial_action_identity},
      {"apsidal identities", apsidal_identities},
      {"guidance leading orders at l0 = 50", leading_orders},
      {"correction scaling exponents", scaling_exponents},
      {"ellipse correspondence", ellipse_correspondence},
      {"circular degeneracy", circular_degeneracy},
      {"phase/polar consistency", phase_polar_consistency},
      {"Hamilton-Jacobi residual trend", hj_trend},
      {"determinism", [&] { return determinism(work); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s %zu %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
