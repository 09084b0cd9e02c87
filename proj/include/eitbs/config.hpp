// config.hpp - scenario configuration: an INI file of known keys, overrides,
// and the one-time conversion from laboratory units to normalized units.
//
// Normalized units: time in 1/gamma31, length in L, rates in gamma31. Keys
// ending in _mhz are frequencies f = value/2pi in MHz, so delta_mhz = 30 means
// Delta = 2pi x 30 MHz. Keys ending in _ns are times in ns.

#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unistd.h>
#include <vector>

#include "eitbs/core.hpp"
#include "eitbs/scenario.hpp"
#include "eitbs/stats.hpp"

namespace eitbs {

struct KeySpec {
  const char* key;
  const char* fallback;
  const char* unit;
};

// Every accepted key, its default and its unit. Order is the header order.
inline const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs{
      {"scenario.id", "single_run", ""},
      {"scenario.seed", "1", ""},
      {"scenario.workers", "1", ""},
      {"output.dir", ".", ""},
      {"units.gamma31_mhz", "3", "MHz (gamma31/2pi)"},
      {"medium.od", "30", ""},
      {"medium.delta_mhz", "0", "MHz (Delta/2pi)"},
      {"medium.gamma12_mhz", "0", "MHz (gamma12/2pi)"},
      {"medium.c_eff", "5", "L gamma31"},
      {"pulse.fwhm_ns", "100", "ns"},
      {"control.omega_s", "2", "gamma31"},
      {"control.omega_bs", "8", "gamma31"},
      {"control.store_hold", "1", "FWHM"},
      {"control.photon_delay_ns", "0", "ns"},
      {"control.ramp_ns", "5", "ns"},
      {"control.settle_ns", "425", "ns"},
      {"control.switch_off", "balanced", "balanced|centre|fixed"},
      {"control.bs_duration_ns", "0", "ns"},
      {"control.balance_tol", "1e-4", ""},
      {"envelope.omega", "4", "gamma31"},
      {"grid.n_points", "201", ""},
      {"grid.record_every", "50", "steps"},
      {"fig2.ods", "30,150", ""},
      {"fig2.omega_s", "0.5,1,2,3,4,5,6,8", "gamma31"},
      {"fig2.omega_bs", "4", "gamma31"},
      {"fig3.triples", "30:0,66:30,100:60", "od:MHz (Delta/2pi)"},
      {"fig3.omega_c", "calibrate", "gamma31"},
      {"fig3.envelope", "solver", "solver|gaussian|constant"},
      {"fig3.i0", "1", ""},
      {"fig3.lag_from_ns", "-300", "ns"},
      {"fig3.lag_to_ns", "300", "ns"},
      {"fig3.lag_steps", "25", ""},
      {"fig3.phi_steps", "73", ""},
      {"fig4.envelope", "gaussian", "solver|gaussian|constant"},
      {"fig4.i0", "1", ""},
      {"fig4.lag_from_ns", "-300", "ns"},
      {"fig4.lag_to_ns", "300", "ns"},
      {"fig4.lag_steps", "13", ""},
      {"sweep.param", "control.omega_s", ""},
      {"sweep.from", "1", "unit of sweep.param"},
      {"sweep.to", "8", "unit of sweep.param"},
      {"sweep.steps", "4", ""},
      {"sweep.mode", "grid", "grid|random"},
  };
  return specs;
}

inline const KeySpec* find_key(const std::string& key) {
  for (const auto& s : key_specs())
    if (key == s.key) return &s;
  return nullptr;
}

/// Key-value text before unit conversion. Holds every known key.
class RawConfig {
 public:
  RawConfig() {
    for (const auto& s : key_specs()) values_[s.key] = s.fallback;
  }

  static RawConfig from_ini(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    RawConfig raw;
    for (const auto& [section, body] : tree) {
      if (body.empty() && !body.data().empty())
        throw ConfigError("config: key '" + section + "' must sit in a section");
      for (const auto& [key, value] : body) raw.set(section + "." + key, value.data());
    }
    return raw;
  }

  static RawConfig from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    return from_ini(in);
  }

  void set(const std::string& key, const std::string& value) {
    if (!find_key(key)) throw ConfigError("config: unknown key '" + key + "'");
    values_[key] = trim(value);
    explicit_.insert(key);
  }

  /// True once `key` was given by a file or an override.
  bool is_set(const std::string& key) const { return explicit_.count(key) > 0; }

  /// "section.key=value".
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override: expected key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
  }

  const std::string& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: unknown key '" + key + "'");
    return it->second;
  }

  double number(const std::string& key) const { return parse_number(key, get(key)); }

  std::size_t count(const std::string& key) const {
    const double v = number(key);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e9) throw ConfigError("config: " + key + " must be a count");
    return static_cast<std::size_t>(v);
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split(get(key), ',')) out.push_back(parse_number(key, item));
    if (out.empty()) throw ConfigError("config: " + key + " is empty");
    return out;
  }

  static double parse_number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || end != t.data() + t.size() || !std::isfinite(v))
      throw ConfigError("config: " + key + " = '" + text + "' is not a finite number");
    return v;
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep))
      if (!trim(item).empty()) out.push_back(trim(item));
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
};

enum class EnvelopeSource { solver, gaussian, constant };

inline EnvelopeSource parse_envelope_source(const std::string& key, const std::string& s) {
  if (s == "solver") return EnvelopeSource::solver;
  if (s == "gaussian") return EnvelopeSource::gaussian;
  if (s == "constant") return EnvelopeSource::constant;
  throw ConfigError("config: " + key + " must be solver, gaussian or constant");
}

struct LagAxis {
  double from = 0.0;  // normalized
  double to = 0.0;
  std::size_t steps = 1;

  std::vector<double> values() const {
    if (steps == 1) return {from};
    std::vector<double> out(steps);
    for (std::size_t k = 0; k < steps; ++k)
      out[k] = from + (to - from) * static_cast<double>(k) / static_cast<double>(steps - 1);
    return out;
  }
};

struct Fig3Triple {
  double od = 0.0;
  double delta_mhz = 0.0;
  double delta = 0.0;  // normalized
};

/// The resolved scenario. All physical numbers are normalized.
struct ScenarioConfig {
  RawConfig raw;
  std::string id;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::filesystem::path out_dir;
  double gamma31_mhz = 3.0;
  HybridConfig hybrid;
  double envelope_omega = 4.0;  // Omega_S = Omega_BS for solver overlap envelopes

  std::vector<double> fig2_ods;
  std::vector<double> fig2_omega_s;
  double fig2_omega_bs = 4.0;

  std::vector<Fig3Triple> fig3_triples;
  std::optional<double> fig3_omega_c;  // empty: calibrate
  EnvelopeSource fig3_envelope = EnvelopeSource::solver;
  double fig3_i0 = 1.0;
  LagAxis fig3_lags;
  std::size_t fig3_phi_steps = 73;

  EnvelopeSource fig4_envelope = EnvelopeSource::gaussian;
  double fig4_i0 = 1.0;
  LagAxis fig4_lags;

  std::string sweep_param;
  double sweep_from = 0.0;  // in the swept key's own unit
  double sweep_to = 0.0;
  std::size_t sweep_steps = 1;
  bool sweep_random = false;

  double ns_to_time(double ns) const { return ns * 1e-3 * kTwoPi * gamma31_mhz; }
  double mhz_to_rate(double mhz) const { return mhz / gamma31_mhz; }
  double time_to_ns(double t) const { return t / (1e-3 * kTwoPi * gamma31_mhz); }
};

inline const std::vector<std::string>& scenario_ids() {
  static const std::vector<std::string> ids{"fig2_overlap", "fig3_crossover", "fig4_threephoton", "sweep",
                                            "single_run"};
  return ids;
}

namespace detail {

inline SwitchOff parse_switch_off(const std::string& s) {
  if (s == "balanced") return SwitchOff::balanced;
  if (s == "centre") return SwitchOff::centre;
  if (s == "fixed") return SwitchOff::fixed;
  throw ConfigError("config: control.switch_off must be balanced, centre or fixed");
}

inline double unit_interval(const RawConfig& raw, const std::string& key) {
  const double v = raw.number(key);
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("config: " + key + " must lie in [0, 1]");
  return v;
}

inline LagAxis lag_axis(const RawConfig& raw, const std::string& section, const ScenarioConfig& c) {
  LagAxis a;
  a.from = c.ns_to_time(raw.number(section + ".lag_from_ns"));
  a.to = c.ns_to_time(raw.number(section + ".lag_to_ns"));
  a.steps = raw.count(section + ".lag_steps");
  if (a.steps == 0) throw ConfigError("config: " + section + ".lag_steps must be >= 1");
  if (a.steps > 1 && !(a.to > a.from)) throw ConfigError("config: " + section + " lag range is empty");
  return a;
}

inline void check_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw ConfigError("config: output directory '" + dir.string() + "' does not exist");
  if (::access(dir.c_str(), W_OK) != 0)
    throw ConfigError("config: output directory '" + dir.string() + "' is not writable");
}

}  // namespace detail

/// Converts units and validates. The output directory must already exist.
inline ScenarioConfig resolve(const RawConfig& raw) {
  ScenarioConfig c;
  c.raw = raw;
  c.id = raw.get("scenario.id");
  if (std::find(scenario_ids().begin(), scenario_ids().end(), c.id) == scenario_ids().end())
    throw ConfigError("config: unknown scenario.id '" + c.id + "'");
  const std::string& seed = raw.get("scenario.seed");
  const auto [seed_end, seed_ec] = std::from_chars(seed.data(), seed.data() + seed.size(), c.seed);
  if (seed_ec != std::errc() || seed_end != seed.data() + seed.size())
    throw ConfigError("config: scenario.seed = '" + seed + "' is not an unsigned 64-bit integer");
  c.workers = raw.count("scenario.workers");
  if (c.workers == 0) throw ConfigError("config: scenario.workers must be >= 1");
  c.out_dir = raw.get("output.dir");

  c.gamma31_mhz = raw.number("units.gamma31_mhz");
  if (!(c.gamma31_mhz > 0.0)) throw ConfigError("config: units.gamma31_mhz must be > 0");

  HybridConfig& h = c.hybrid;
  h.medium = MediumParams::from_od(raw.number("medium.od"), c.mhz_to_rate(raw.number("medium.delta_mhz")),
                                   c.mhz_to_rate(raw.number("medium.gamma12_mhz")), raw.number("medium.c_eff"));
  h.fwhm = c.ns_to_time(raw.number("pulse.fwhm_ns"));
  h.omega_s = raw.number("control.omega_s");
  h.omega_bs = raw.number("control.omega_bs");
  h.store_hold = raw.number("control.store_hold");
  h.photon_delay = c.ns_to_time(raw.number("control.photon_delay_ns"));
  h.ramp = c.ns_to_time(raw.number("control.ramp_ns"));
  h.settle = c.ns_to_time(raw.number("control.settle_ns"));
  h.switch_off = detail::parse_switch_off(raw.get("control.switch_off"));
  h.bs_duration = c.ns_to_time(raw.number("control.bs_duration_ns"));
  h.balance_tol = raw.number("control.balance_tol");
  h.n_points = raw.count("grid.n_points");
  if (h.n_points < kMinGridPoints) throw ConfigError("config: grid.n_points is below the minimum");
  h.record_every = raw.count("grid.record_every");
  h.validate();
  c.envelope_omega = raw.number("envelope.omega");
  if (!(c.envelope_omega > 0.0)) throw ConfigError("config: envelope.omega must be > 0");

  c.fig2_ods = raw.numbers("fig2.ods");
  for (double od : c.fig2_ods)
    if (!(od >= 0.0)) throw ConfigError("config: fig2.ods must be >= 0");
  c.fig2_omega_s = raw.numbers("fig2.omega_s");
  for (double om : c.fig2_omega_s)
    if (!(om > 0.0)) throw ConfigError("config: fig2.omega_s must be > 0");
  c.fig2_omega_bs = raw.number("fig2.omega_bs");
  if (!(c.fig2_omega_bs > 0.0)) throw ConfigError("config: fig2.omega_bs must be > 0");

  for (const auto& item : RawConfig::split(raw.get("fig3.triples"), ',')) {
    const auto parts = RawConfig::split(item, ':');
    if (parts.size() != 2) throw ConfigError("config: fig3.triples entries are od:delta_mhz");
    Fig3Triple t;
    t.od = RawConfig::parse_number("fig3.triples", parts[0]);
    t.delta_mhz = RawConfig::parse_number("fig3.triples", parts[1]);
    t.delta = c.mhz_to_rate(t.delta_mhz);
    if (!(t.od > 0.0)) throw ConfigError("config: fig3.triples optical depths must be > 0");
    c.fig3_triples.push_back(t);
  }
  if (c.fig3_triples.empty()) throw ConfigError("config: fig3.triples is empty");
  if (raw.get("fig3.omega_c") != "calibrate") {
    c.fig3_omega_c = raw.number("fig3.omega_c");
    if (!(*c.fig3_omega_c > 0.0)) throw ConfigError("config: fig3.omega_c must be > 0");
  }
  c.fig3_envelope = parse_envelope_source("fig3.envelope", raw.get("fig3.envelope"));
  c.fig3_i0 = detail::unit_interval(raw, "fig3.i0");
  c.fig3_lags = detail::lag_axis(raw, "fig3", c);
  c.fig3_phi_steps = raw.count("fig3.phi_steps");
  if (c.fig3_phi_steps < 2) throw ConfigError("config: fig3.phi_steps must be >= 2");

  c.fig4_envelope = parse_envelope_source("fig4.envelope", raw.get("fig4.envelope"));
  c.fig4_i0 = detail::unit_interval(raw, "fig4.i0");
  c.fig4_lags = detail::lag_axis(raw, "fig4", c);

  c.sweep_param = raw.get("sweep.param");
  const KeySpec* swept = find_key(c.sweep_param);
  if (!swept || c.sweep_param.rfind("sweep.", 0) == 0 || c.sweep_param.rfind("scenario.", 0) == 0 ||
      c.sweep_param.rfind("output.", 0) == 0)
    throw ConfigError("config: sweep.param '" + c.sweep_param + "' is not a sweepable key");
  RawConfig::parse_number(c.sweep_param, raw.get(c.sweep_param));
  c.sweep_from = raw.number("sweep.from");
  c.sweep_to = raw.number("sweep.to");
  c.sweep_steps = raw.count("sweep.steps");
  if (c.sweep_steps == 0) throw ConfigError("config: sweep.steps must be >= 1");
  if (c.sweep_steps > 1 && !(c.sweep_to > c.sweep_from)) throw ConfigError("config: sweep range is empty");
  const std::string mode = raw.get("sweep.mode");
  if (mode != "grid" && mode != "random") throw ConfigError("config: sweep.mode must be grid or random");
  c.sweep_random = mode == "random";

  detail::check_output_dir(c.out_dir);
  return c;
}

/// Header lines: every key with its unit, then the derived normalized values.
/// The worker count and output directory do not change results and are left
/// out, so outputs compare byte for byte across them.
inline std::vector<std::string> header_lines(const ScenarioConfig& c) {
  std::vector<std::string> out;
  out.push_back("units: time 1/gamma31, length L, rates gamma31; *_mhz keys are f/2pi in MHz");
  for (const auto& s : key_specs()) {
    if (std::string_view(s.key) == "scenario.workers" || std::string_view(s.key) == "output.dir") continue;
    std::string line = std::string(s.key) + " = " + c.raw.get(s.key);
    if (*s.unit) line += " [" + std::string(s.unit) + "]";
    out.push_back(line);
  }
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  const HybridConfig& h = c.hybrid;
  out.push_back("derived.fwhm = " + num(h.fwhm) + " [1/gamma31]");
  out.push_back("derived.delta = " + num(h.medium.delta) + " [gamma31]");
  out.push_back("derived.gamma12 = " + num(h.medium.gamma12) + " [gamma31]");
  out.push_back("derived.coupling = " + num(h.medium.coupling) + " [gamma31]");
  out.push_back("derived.photon_delay = " + num(h.photon_delay) + " [1/gamma31]");
  out.push_back("derived.ramp = " + num(h.ramp) + " [1/gamma31]");
  out.push_back("derived.settle = " + num(h.settle) + " [1/gamma31]");
  out.push_back("derived.bs_duration = " + num(h.bs_duration) + " [1/gamma31]");
  out.push_back("derived.dt = " + num(h.medium.length / static_cast<double>(h.n_points - 1) / h.medium.c_eff) +
                " [1/gamma31]");
  return out;
}

}  // namespace eitbs
