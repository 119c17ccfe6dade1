#pragma once

// The four batch subcommands. Each writes its files into
// config.output.directory and returns the paths plus a short console summary.
// Output bytes depend only on the config, never on the worker count.

#include <filesystem>
#include <string>
#include <vector>

#include "rydberg/config.hpp"

namespace rydberg {

struct DriverResult {
  std::vector<std::filesystem::path> files;
  std::string console;
};

DriverResult run_simulate(const RunConfig& cfg, unsigned workers = 1);
DriverResult run_scaling(const RunConfig& cfg, unsigned workers = 1);
DriverResult run_field_dump(const RunConfig& cfg, unsigned workers = 1);
DriverResult run_compare_classical(const RunConfig& cfg, unsigned workers = 1);

/// {"error": {"subcommand": ..., "kind": ..., "message": ...}}
std::string error_json(const std::string& subcommand, const std::string& kind, const std::string& message);

}  // namespace rydberg
