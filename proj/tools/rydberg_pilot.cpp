// Command-line front end: simulate | scaling-study | field-dump | compare-classical.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rydberg/drivers.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/parallel.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  double tol = 0.0;
  std::string mode;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw rydberg::Error("io_error", "cannot read config file '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "JSON run configuration")->required();
  sub->add_option("--out", o.out, "output directory (overrides output.directory)");
  sub->add_option("--tol", o.tol, "integrator tolerance (overrides simulate.tol)");
  sub->add_option("--mode", o.mode, "guidance mode: raw | two_branch")
      ->check(CLI::IsMember({"raw", "two_branch"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohmian trajectories of large-l Rydberg coherent states"};
  app.require_subcommand(1);
  Options opts;
  using Driver = rydberg::DriverResult (*)(const rydberg::RunConfig&, unsigned);
  const std::vector<std::tuple<std::string, std::string, Driver>> commands = {
      {"simulate", "integrate one trajectory and fit its conic", &rydberg::run_simulate},
      {"scaling-study", "l0 scaling of the guidance corrections", &rydberg::run_scaling},
      {"field-dump", "R, S, Q and velocity on a grid", &rydberg::run_field_dump},
      {"compare-classical", "conic fit against both Kepler reference orbits", &rydberg::run_compare_classical},
  };
  for (const auto& [name, help, fn] : commands) add_common(app.add_subcommand(name, help), opts);
  CLI11_PARSE(app, argc, argv);

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    rydberg::RunConfig cfg = rydberg::parse_config(read_file(opts.config));
    if (!opts.out.empty()) cfg.output.directory = opts.out;
    if (chosen->count("--tol")) cfg.simulate.tol = opts.tol;
    if (!opts.mode.empty()) cfg.simulate.mode = rydberg::guidance_mode_from_string(opts.mode);
    rydberg::validate_config(cfg);

    Driver fn = nullptr;
    for (const auto& [n, h, f] : commands) {
      if (n == name) fn = f;
    }
    const auto start = std::chrono::steady_clock::now();
    const rydberg::DriverResult res = fn(cfg, rydberg::worker_count());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << res.console << "runtime: " << secs << " s\n";
    return 0;
  } catch (const rydberg::Error& e) {
    std::cout << rydberg::error_json(name, e.kind(), e.what());
  } catch (const std::exception& e) {
    std::cout << rydberg::error_json(name, "internal_error", e.what());
  }
  return 2;
}
