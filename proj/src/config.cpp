#include "rydberg/config.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "rydberg/errors.hpp"
#include "rydberg/output.hpp"

namespace rydberg {
namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const std::string& text, const json& obj, std::string path)
      : text_(text), obj_(obj), path_(std::move(path)) {}

  void allow(std::initializer_list<const char*> keys) const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
        fail(it.key(), "unknown key");
      }
    }
  }

  bool has(const char* k) const { return obj_.contains(k); }

  void number(const char* k, double& out) const {
    if (!has(k)) return;
    const json& v = obj_.at(k);
    if (!v.is_number()) fail(k, "must be a number");
    out = v.get<double>();
    if (!std::isfinite(out)) fail(k, "must be finite");
  }

  void integer(const char* k, int& out) const {
    if (!has(k)) return;
    const json& v = obj_.at(k);
    if (!v.is_number_integer()) fail(k, "must be an integer");
    out = v.get<int>();
  }

  void boolean(const char* k, bool& out) const {
    if (!has(k)) return;
    const json& v = obj_.at(k);
    if (!v.is_boolean()) fail(k, "must be true or false");
    out = v.get<bool>();
  }

  void string(const char* k, std::string& out) const {
    if (!has(k)) return;
    const json& v = obj_.at(k);
    if (!v.is_string()) fail(k, "must be a string");
    out = v.get<std::string>();
  }

  void numbers(const char* k, std::vector<double>& out) const {
    if (!has(k)) return;
    const json& v = obj_.at(k);
    if (!v.is_array()) fail(k, "must be an array of numbers");
    out.clear();
    for (const auto& x : v) {
      if (!x.is_number()) fail(k, "must be an array of numbers");
      out.push_back(x.get<double>());
    }
  }

  Reader section(const char* k) const {
    static const json empty = json::object();
    if (!has(k)) return Reader(text_, empty, field(k));
    const json& v = obj_.at(k);
    if (!v.is_object()) fail(k, "must be an object");
    return Reader(text_, v, field(k));
  }

  [[noreturn]] void fail(const std::string& k, const std::string& what) const {
    throw ValidationError("field '" + field(k) + "' " + what + locate(k));
  }

  std::string field(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

 private:
  // Best-effort source line of the first occurrence of a key.
  std::string locate(const std::string& k) const {
    const auto pos = text_.find("\"" + k + "\"");
    if (pos == std::string::npos) return "";
    return " (line " + std::to_string(1 + std::count(text_.begin(), text_.begin() + static_cast<long>(pos), '\n')) +
           ")";
  }

  const std::string& text_;
  const json& obj_;
  std::string path_;
};

[[noreturn]] void invalid(const std::string& field, const std::string& invariant, const std::string& detail = "") {
  std::string msg = "field '" + field + "' violates " + invariant;
  if (!detail.empty()) msg += " (" + detail + ")";
  throw ValidationError(msg);
}

std::string show(double v) { return format_double(v); }

void check_fraction_list(const std::string& field, const std::vector<double>& v, double lo, double hi) {
  if (v.empty()) invalid(field, "non-empty list");
  for (double x : v) {
    if (!(x >= lo && x <= hi)) invalid(field, show(lo) + " ≤ value ≤ " + show(hi), "value " + show(x));
  }
}

}  // namespace

PacketParams RunConfig::packet() const {
  return PacketParams::make(OrbitParams::make(n0, l0), delta, sigma2, winding_truncation);
}

void validate_config(const RunConfig& c) {
  constexpr double kPi = std::numbers::pi;
  if (!(c.n0 >= 1.0)) invalid("n0", "n0 ≥ 1", "n0 = " + show(c.n0));
  if (!(c.l0 > 0.0)) invalid("l0", "l0 > 0", "l0 = " + show(c.l0));
  if (!(c.l0 <= c.n0)) invalid("l0", "l0 ≤ n0", "l0 = " + show(c.l0) + ", n0 = " + show(c.n0));
  if (!(c.delta > 0.0 && c.delta <= 1.0)) invalid("delta", "0 < delta ≤ 1", "delta = " + show(c.delta));
  if (!(c.sigma2 > 0.0)) invalid("sigma2", "sigma2 > 0", "sigma2 = " + show(c.sigma2));
  if (c.winding_truncation < 0) invalid("winding_truncation", "winding_truncation ≥ 0");

  const auto& s = c.simulate;
  if (!(s.r_fraction >= 0.0 && s.r_fraction <= 1.0)) invalid("simulate.r_fraction", "0 ≤ r_fraction ≤ 1");
  if (!(s.theta > 0.0 && s.theta < kPi)) invalid("simulate.theta", "0 < theta < pi");
  if (!(s.duration_periods > 0.0)) invalid("simulate.duration_periods", "duration_periods > 0");
  if (!(s.tol >= 1e-12 && s.tol <= 1e-3)) invalid("simulate.tol", "1e-12 ≤ tol ≤ 1e-3", "tol = " + show(s.tol));

  const auto& g = c.scaling;
  if (g.l0_values.size() < 4) invalid("scaling.l0_values", "at least 4 values");
  const auto [mn, mx] = std::minmax_element(g.l0_values.begin(), g.l0_values.end());
  if (!(*mn > 0.0)) invalid("scaling.l0_values", "l0 > 0");
  if (!(*mx / *mn >= 5.0)) invalid("scaling.l0_values", "span of at least a factor 5");
  if (!(g.n0_over_l0 >= 1.0)) invalid("scaling.n0_over_l0", "n0_over_l0 ≥ 1");
  if (!(g.margin >= 0.0 && g.margin < 0.5)) invalid("scaling.margin", "0 ≤ margin < 0.5");
  check_fraction_list("scaling.radial_fractions", g.radial_fractions, g.margin, 1.0 - g.margin);
  if (g.phase_offsets.empty()) invalid("scaling.phase_offsets", "non-empty list");
  if (g.theta_offsets.empty()) invalid("scaling.theta_offsets", "non-empty list");
  for (double th : g.theta_offsets) {
    if (!(std::abs(th) < kPi / 2.0)) invalid("scaling.theta_offsets", "|theta offset| < pi/2");
  }

  const auto& f = c.field_dump;
  if (!(f.r_fraction_min >= 0.0 && f.r_fraction_min <= f.r_fraction_max && f.r_fraction_max <= 1.0)) {
    invalid("field_dump.r_fraction_min", "0 ≤ r_fraction_min ≤ r_fraction_max ≤ 1");
  }
  if (f.r_count < 1) invalid("field_dump.r_count", "r_count ≥ 1");
  if (f.theta_values.empty()) invalid("field_dump.theta_values", "non-empty list");
  for (double th : f.theta_values) {
    if (!(th > 0.0 && th < kPi)) invalid("field_dump.theta_values", "0 < theta < pi", "theta = " + show(th));
  }
  if (f.phi_offsets.empty()) invalid("field_dump.phi_offsets", "non-empty list");
  if (!(f.reference_fraction >= 0.0 && f.reference_fraction <= 1.0)) {
    invalid("field_dump.reference_fraction", "0 ≤ reference_fraction ≤ 1");
  }
  if (f.half_cycle < 0) invalid("field_dump.half_cycle", "half_cycle ≥ 0");

  if (c.output.directory.empty()) invalid("output.directory", "non-empty path");
  if (!(c.output.sample_interval_periods > 0.0 && c.output.sample_interval_periods <= 1.0)) {
    invalid("output.sample_interval_periods", "0 < sample_interval_periods ≤ 1");
  }
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto nl = std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n');
    const auto last = text.rfind('\n', byte == 0 ? 0 : byte - 1);
    const std::size_t col = last == std::string::npos || byte == 0 ? byte + 1 : byte - last;
    std::ostringstream os;
    os << "config parse error at line " << nl + 1 << ", column " << col << ": " << e.what();
    throw ParseError(os.str());
  }
  if (!doc.is_object()) throw ParseError("config parse error at line 1, column 1: top level must be an object");

  RunConfig c;
  const Reader top(text, doc, "");
  top.allow({"n0", "l0", "delta", "sigma2", "winding_truncation", "simulate", "scaling", "field_dump", "output"});
  if (!top.has("n0")) invalid("n0", "required field present");
  if (!top.has("l0")) invalid("l0", "required field present");
  top.number("n0", c.n0);
  top.number("l0", c.l0);
  top.number("delta", c.delta);
  top.number("sigma2", c.sigma2);
  top.integer("winding_truncation", c.winding_truncation);
  if (!top.has("sigma2")) c.sigma2 = c.l0 * c.l0 * c.l0;

  const Reader sim = top.section("simulate");
  sim.allow({"r_fraction", "theta", "phi_offset", "duration_periods", "tol", "mode"});
  sim.number("r_fraction", c.simulate.r_fraction);
  sim.number("theta", c.simulate.theta);
  sim.number("phi_offset", c.simulate.phi_offset);
  sim.number("duration_periods", c.simulate.duration_periods);
  sim.number("tol", c.simulate.tol);
  if (sim.has("mode")) {
    std::string m;
    sim.string("mode", m);
    try {
      c.simulate.mode = guidance_mode_from_string(m);
    } catch (const DomainError&) {
      sim.fail("mode", "must be \"raw\" or \"two_branch\"");
    }
  }

  const Reader sc = top.section("scaling");
  sc.allow({"l0_values", "n0_over_l0", "sigma2_power", "radial_fractions", "phase_offsets", "theta_offsets",
            "margin"});
  sc.numbers("l0_values", c.scaling.l0_values);
  sc.number("n0_over_l0", c.scaling.n0_over_l0);
  sc.number("sigma2_power", c.scaling.sigma2_power);
  sc.numbers("radial_fractions", c.scaling.radial_fractions);
  sc.numbers("phase_offsets", c.scaling.phase_offsets);
  sc.numbers("theta_offsets", c.scaling.theta_offsets);
  sc.number("margin", c.scaling.margin);

  const Reader fd = top.section("field_dump");
  fd.allow({"r_fraction_min", "r_fraction_max", "r_count", "theta_values", "phi_offsets", "reference_fraction",
            "half_cycle"});
  fd.number("r_fraction_min", c.field_dump.r_fraction_min);
  fd.number("r_fraction_max", c.field_dump.r_fraction_max);
  fd.integer("r_count", c.field_dump.r_count);
  fd.numbers("theta_values", c.field_dump.theta_values);
  fd.numbers("phi_offsets", c.field_dump.phi_offsets);
  fd.number("reference_fraction", c.field_dump.reference_fraction);
  fd.integer("half_cycle", c.field_dump.half_cycle);

  const Reader out = top.section("output");
  out.allow({"directory", "sample_interval_periods", "include_q"});
  out.string("directory", c.output.directory);
  out.number("sample_interval_periods", c.output.sample_interval_periods);
  out.boolean("include_q", c.output.include_q);

  validate_config(c);
  return c;
}

std::string serialize_config(const RunConfig& c) {
  JsonWriter w;
  w.begin_object();
  w.field("n0", c.n0).field("l0", c.l0).field("delta", c.delta).field("sigma2", c.sigma2);
  w.field("winding_truncation", c.winding_truncation);

  w.key("simulate").begin_object();
  w.field("r_fraction", c.simulate.r_fraction).field("theta", c.simulate.theta);
  w.field("phi_offset", c.simulate.phi_offset).field("duration_periods", c.simulate.duration_periods);
  w.field("tol", c.simulate.tol).field("mode", to_string(c.simulate.mode));
  w.end_object();

  w.key("scaling").begin_object();
  w.field("l0_values", c.scaling.l0_values).field("n0_over_l0", c.scaling.n0_over_l0);
  w.field("sigma2_power", c.scaling.sigma2_power).field("radial_fractions", c.scaling.radial_fractions);
  w.field("phase_offsets", c.scaling.phase_offsets).field("theta_offsets", c.scaling.theta_offsets);
  w.field("margin", c.scaling.margin);
  w.end_object();

  w.key("field_dump").begin_object();
  w.field("r_fraction_min", c.field_dump.r_fraction_min).field("r_fraction_max", c.field_dump.r_fraction_max);
  w.field("r_count", c.field_dump.r_count).field("theta_values", c.field_dump.theta_values);
  w.field("phi_offsets", c.field_dump.phi_offsets).field("reference_fraction", c.field_dump.reference_fraction);
  w.field("half_cycle", c.field_dump.half_cycle);
  w.end_object();

  w.key("output").begin_object();
  w.field("directory", std::string_view(c.output.directory));
  w.field("sample_interval_periods", c.output.sample_interval_periods).field("include_q", c.output.include_q);
  w.end_object();

  w.end_object();
  return w.str();
}

}  // namespace rydberg
