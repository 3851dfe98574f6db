#ifndef KDTL_CONFIG_HPP
#define KDTL_CONFIG_HPP

// Run configuration: a flat key-value document with dotted keys (see text.hpp for the grammar).
// Every key has a documented default; defaults that are not backed by a measured value are marked
// "assumed" and say so in the echo.
//
// Echo format written at the top of every output file:
//   #@ key = value            explicitly set, or a measured default
//   #@ key = value  # assumed default without a measured value
// Reading a document that contains "#@" lines uses only those lines, so an output file can be fed
// back as --config and reproduces itself. A JSON document is read from its "config" object.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kdtl/beam.hpp"
#include "kdtl/deflection.hpp"
#include "kdtl/elements.hpp"
#include "kdtl/error.hpp"
#include "kdtl/interferometer.hpp"
#include "kdtl/molecule.hpp"
#include "kdtl/text.hpp"

namespace kdtl {

inline constexpr std::string_view tool_version = "kdtl 1.0.0";

struct ConfigKey {
  std::string_view key;
  std::string_view default_value;
  bool assumed;
  std::string_view doc;
};

// clang-format off
inline constexpr ConfigKey config_keys[] = {
  {"molecule.name", "C30H12F30N2O4", false, "label"},
  {"molecule.formula", "C30H12F30N2O4", false, "mass source unless molecule.mass_amu > 0"},
  {"molecule.mass_amu", "0", false, "explicit mass, amu (0: from formula)"},
  {"molecule.alpha_stat_A3", "68.2", false, "static polarizability volume"},
  {"molecule.alpha_opt_A3", "61", false, "optical polarizability volume at the laser wavelength"},
  {"molecule.sigma_abs_cm2", "0", true, "absorption cross section"},
  {"molecule.chi_A3", "95", false, "susceptibility used by deflection simulations"},
  {"beam.v_mean_mps", "146", false, "mean forward velocity"},
  {"beam.v_fwhm_mps", "31", false, "velocity FWHM"},
  {"beam.source_temperature_K", "470", false, "oven temperature"},
  {"beam.v_mean_uncertainty_mps", "0", true, "for the beam systematic of fits"},
  {"beam.v_fwhm_uncertainty_mps", "0", true, "for the beam systematic of fits"},
  {"g1.period_nm", "266", false, "first grating period"},
  {"g1.open_fraction", "0.28195488721804512", false, "75 nm slits"},
  {"g3.period_nm", "266", false, "third grating period"},
  {"g3.open_fraction", "0.28195488721804512", false, "75 nm slits"},
  {"laser.wavelength_nm", "532", false, "standing-wave wavelength"},
  {"laser.power_W", "10", true, "standing-wave power"},
  {"laser.waist_y_um", "900", true, "vertical waist (1/e^2 radius)"},
  {"laser.waist_z_um", "20", true, "waist along the beam axis"},
  {"laser.power_rel_uncertainty", "0.1", false, "relative power calibration uncertainty"},
  {"interferometer.separation_mm", "105", false, "grating separation L"},
  {"model.absorption", "false", false, "include photon absorption at G2"},
  {"model.beam_height_um", "0", true, "molecular beam height averaged over the laser profile (0: off)"},
  {"model.height_nodes", "16", false, "nodes of the beam-height average"},
  {"model.harmonic_cutoff", "5", false, "harmonics in signal profiles"},
  {"model.count_normalization", "1", false, "counts per unit transmission"},
  {"deflector.K_per_m3", "1.8e6", true, "(E.grad)E per volt^2"},
  {"deflector.effective_length_mm", "50", true, "electrode length"},
  {"deflector.distance_to_g3_mm", "132.5", true, "deflector exit to G3"},
  {"deflector.calibration_rel_err", "0", true, "relative error of the geometry constant"},
  {"deflector.field_homogeneity", "0.01", true, "relative K variation across the beam"},
  {"quadrature.nodes", "64", false, "velocity quadrature nodes"},
  {"seed", "1", false, "random seed for synthetic data"},
  {"simulate.power_min_W", "0", false, "power grid start"},
  {"simulate.power_max_W", "20", false, "power grid end"},
  {"simulate.power_steps", "41", false, "power grid points"},
  {"simulate.voltage_max_V", "6000", false, "voltage grid end (grid starts at 0)"},
  {"simulate.voltage_steps", "13", false, "voltage grid points"},
  {"scan.step_nm", "30", false, "position step"},
  {"scan.n_points", "40", false, "points per position scan"},
  {"scan.counts_per_point", "100", true, "mean counts per point"},
  {"scan.voltage_V", "0", false, "deflection voltage during the position scan"},
  {"fit.visibility_weighting", "true", false, "weight the shift average by V(v)"},
  {"fit.include_absorption", "false", false, "free sigma_abs in the optical fit"},
  {"fit.fit_open_fraction", "false", false, "free shared open fraction in the optical fit"},
  {"stats.temperature_K", "470", false, "ensemble temperature"},
  {"stats.temperature_uncertainty_K", "5", false, "for the temperature systematic"},
  {"stats.significance", "0.05", false, "two-sided confidence level complement"},
};
// clang-format on

inline const ConfigKey* find_config_key(std::string_view key) {
  for (const auto& k : config_keys) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

/// Effective configuration: every key of config_keys with its value text and whether it was set.
class RunConfig {
public:
  RunConfig() {
    for (const auto& k : config_keys) values_[std::string(k.key)] = {std::string(k.default_value), false};
  }

  void set(std::string_view key, std::string value) {
    const auto* k = find_config_key(key);
    if (!k) throw ConfigError("unknown config key '" + std::string(key) + "'");
    values_[std::string(key)] = {std::move(value), true};
  }
  void set(std::string_view key, double value) { set(key, text::format_double(value)); }

  /// Reverts a key to its default.
  void unset(std::string_view key) {
    const auto* k = find_config_key(key);
    if (!k) throw ConfigError("unknown config key '" + std::string(key) + "'");
    values_[std::string(key)] = {std::string(k->default_value), false};
  }

  bool explicitly_set(std::string_view key) const { return entry(key).set; }
  bool assumed(std::string_view key) const { return !entry(key).set && find_config_key(key)->assumed; }
  const std::string& raw(std::string_view key) const { return entry(key).value; }

  double number(std::string_view key) const {
    const auto v = text::parse_double(raw(key));
    if (!v) throw ConfigError("config key '" + std::string(key) + "' needs a number, got '" + raw(key) + "'");
    return *v;
  }

  long long integer(std::string_view key) const {
    const auto v = text::parse_int(raw(key));
    if (!v) throw ConfigError("config key '" + std::string(key) + "' needs an integer, got '" + raw(key) + "'");
    return *v;
  }

  std::size_t count(std::string_view key) const {
    const auto v = integer(key);
    if (v < 0) throw ConfigError("config key '" + std::string(key) + "' must be non-negative");
    return static_cast<std::size_t>(v);
  }

  bool flag(std::string_view key) const {
    const auto& t = raw(key);
    if (t == "true" || t == "1") return true;
    if (t == "false" || t == "0") return false;
    throw ConfigError("config key '" + std::string(key) + "' needs true or false, got '" + t + "'");
  }

  std::uint64_t seed() const {
    const auto v = integer("seed");
    if (v < 0) throw ConfigError("config key 'seed' must be non-negative");
    return static_cast<std::uint64_t>(v);
  }

  // Typed views ---------------------------------------------------------------------------

  double mass_amu() const {
    const double m = number("molecule.mass_amu");
    if (m > 0.0) return m;
    try {
      return parse_formula(raw("molecule.formula"));
    } catch (const FormulaError& e) {
      throw ConfigError("config key 'molecule.formula': " + std::string(e.what()));
    }
  }

  MoleculeSpec molecule() const {
    MoleculeSpec m{raw("molecule.name"), mass_amu(), number("molecule.alpha_stat_A3"),
                   number("molecule.alpha_opt_A3"), number("molecule.sigma_abs_cm2")};
    m.validate();
    return m;
  }

  BeamSpec beam() const {
    BeamSpec b{number("beam.v_mean_mps"), number("beam.v_fwhm_mps"), number("beam.source_temperature_K")};
    b.validate();
    return b;
  }

  InterferometerSpec interferometer() const {
    InterferometerSpec s;
    s.g1 = {number("g1.period_nm") * 1e-9, number("g1.open_fraction")};
    s.g3 = {number("g3.period_nm") * 1e-9, number("g3.open_fraction")};
    s.g2 = {number("laser.wavelength_nm") * 1e-9, number("laser.power_W"), number("laser.waist_y_um") * 1e-6,
            number("laser.waist_z_um") * 1e-6};
    s.separation_L = number("interferometer.separation_mm") * 1e-3;
    s.options.absorption = flag("model.absorption");
    s.options.beam_height = number("model.beam_height_um") * 1e-6;
    s.options.height_nodes = count("model.height_nodes");
    s.options.harmonic_cutoff = static_cast<int>(integer("model.harmonic_cutoff"));
    s.options.count_normalization = number("model.count_normalization");
    s.validate();
    return s;
  }

  DeflectorSpec deflector() const {
    DeflectorSpec d{number("deflector.K_per_m3"), number("deflector.effective_length_mm") * 1e-3,
                    number("deflector.distance_to_g3_mm") * 1e-3};
    d.validate();
    return d;
  }

  CalibratedDeflector calibration() const {
    const double g = deflector().combined_constant();
    return {g, g * number("deflector.calibration_rel_err")};
  }

  std::size_t quadrature_nodes() const { return count("quadrature.nodes"); }

  // Serialisation ---------------------------------------------------------------------------

  /// "#@ key = value" block in table order.
  std::string echo() const {
    std::string out;
    for (const auto& k : config_keys) {
      const auto& e = entry(k.key);
      out += "#@ ";
      out += k.key;
      out += " = ";
      out += e.value;
      if (!e.set && k.assumed) out += "  # assumed";
      out += '\n';
    }
    return out;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& k : config_keys) j[std::string(k.key)] = entry(k.key).value;
    return j;
  }

  /// Keys that fall back to an assumed default.
  std::vector<std::string> assumed_keys() const {
    std::vector<std::string> out;
    for (const auto& k : config_keys) {
      if (assumed(k.key)) out.emplace_back(k.key);
    }
    return out;
  }

private:
  struct Entry {
    std::string value;
    bool set = false;
  };

  const Entry& entry(std::string_view key) const {
    const auto it = values_.find(std::string(key));
    if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
    return it->second;
  }

  std::map<std::string, Entry> values_;
};

/// Reads a plain key-value config, the "#@" echo of an output file, or a JSON result's "config".
inline RunConfig parse_run_config(std::string_view document) {
  const std::string_view document_in = document;
  RunConfig cfg;
  const auto body = text::trim(document);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed JSON config: ") + e.what(), 0);
    }
    if (!j.contains("config") || !j["config"].is_object()) throw FormatError("JSON config lacks a 'config' object", 0);
    for (const auto& [key, value] : j["config"].items()) {
      if (!value.is_string()) throw ConfigError("config key '" + key + "' must be a string in JSON");
      cfg.set(key, value.get<std::string>());
    }
    // Keys listed as assumed were defaults in the producing run.
    if (j.contains("assumed")) {
      for (const auto& key : j["assumed"]) cfg.unset(key.get<std::string>());
    }
    return cfg;
  }

  bool echo = false;
  for (auto line : text::split(document, '\n')) echo = echo || text::trim(line).starts_with("#@");
  std::string filtered;
  if (echo) {
    // Keep line numbering: non-echo lines become blank.
    for (auto line : text::split(document, '\n')) {
      const auto t = text::trim(line);
      if (t.starts_with("#@")) filtered += t.substr(2);
      filtered += '\n';
    }
    document = filtered;
  }
  for (const auto& kv : text::parse_kv(document)) {
    const auto* k = find_config_key(kv.key);
    if (!k) throw ConfigError("line " + std::to_string(kv.line) + ": unknown config key '" + kv.key + "'");
    cfg.set(kv.key, kv.value);
  }
  if (echo) {
    for (auto line : text::split(document_in, '\n')) {
      const auto t = text::trim(line);
      if (!t.starts_with("#@") || !t.ends_with("# assumed")) continue;
      if (const auto kv = text::parse_kv_line(t.substr(2), 0)) cfg.unset(kv->key);
    }
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) { return parse_run_config(text::read_file(path)); }

}  // namespace kdtl

#endif  // KDTL_CONFIG_HPP
