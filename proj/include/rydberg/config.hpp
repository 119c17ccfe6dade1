#pragma once

// Run configuration: a single JSON document, parsed and fully validated.

#include <string>
#include <vector>

#include "rydberg/analysis.hpp"

namespace rydberg {

struct SimulateConfig {
  double r_fraction = 0.05;  ///< start radius as a fraction of (r_plus - r_minus) above r_minus
  double theta = 1.5707963267948966;
  double phi_offset = 0.0;   ///< start at phi0(r) + phi_offset, t = t0(r)
  double duration_periods = 3.0;
  double tol = 1e-9;
  GuidanceMode mode = GuidanceMode::two_branch;

  friend bool operator==(const SimulateConfig&, const SimulateConfig&) = default;
};

struct ScalingConfig {
  std::vector<double> l0_values{10.0, 20.0, 50.0, 100.0};
  double n0_over_l0 = 1.01;
  double sigma2_power = 3.0;
  std::vector<double> radial_fractions{0.1, 0.5, 0.7, 0.9};
  std::vector<double> phase_offsets{-0.25, 0.1, 0.25};
  std::vector<double> theta_offsets{0.0};
  double margin = 0.05;

  friend bool operator==(const ScalingConfig&, const ScalingConfig&) = default;
};

struct FieldDumpConfig {
  double r_fraction_min = 0.1;
  double r_fraction_max = 0.9;
  int r_count = 9;
  std::vector<double> theta_values{1.5207963267948966, 1.5707963267948966, 1.6207963267948966};
  std::vector<double> phi_offsets{-0.1, 0.0, 0.1};  ///< relative to phi0 at reference_fraction
  double reference_fraction = 0.5;                   ///< t = t0(r) at this fraction
  int half_cycle = 0;

  friend bool operator==(const FieldDumpConfig&, const FieldDumpConfig&) = default;
};

struct OutputConfig {
  std::string directory = "out";
  double sample_interval_periods = 1.0 / 256.0;
  bool include_q = false;  ///< fill the Q_optional trajectory column

  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
  double n0 = 0.0;
  double l0 = 0.0;
  double delta = 0.95;
  double sigma2 = 0.0;  ///< filled with l0^3 when absent
  int winding_truncation = 3;
  SimulateConfig simulate;
  ScalingConfig scaling;
  FieldDumpConfig field_dump;
  OutputConfig output;

  PacketParams packet() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Throws ParseError (with line and column) on malformed JSON and
/// ValidationError naming the field and violated invariant otherwise.
RunConfig parse_config(const std::string& text);

/// Re-validates a programmatically built config.
void validate_config(const RunConfig& cfg);

/// Complete JSON rendering; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& cfg);

}  // namespace rydberg
