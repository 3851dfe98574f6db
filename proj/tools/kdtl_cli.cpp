// kdtl: simulation, fitting and ensemble statistics for Kapitza-Dirac-Talbot-Lau interferometry.
//
//   kdtl [--config PATH] [--seed N] [--nodes N] [--set key=value]... [--out PATH] <command> ...
//
//   simulate visibility_power | deflection_voltage | position_scan
//   fit sinusoid | susceptibility | optical_polarizability <input.csv>
//   stats <conformers.csv> [--temperature K] [--significance a]
//   constants
//
// Exit codes: 0 success, 1 I/O error, 2 usage or configuration error, 3 input format error,
// 4 fit failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kdtl/kdtl.hpp"

namespace {

using namespace kdtl;

enum Exit { ok = 0, io = 1, usage = 2, format = 3, fit_failure = 4 };

class IoError : public Error {
public:
  using Error::Error;
};

struct Options {
  std::optional<std::string> config_path;
  std::optional<long long> seed;
  std::optional<long long> nodes;
  std::vector<std::string> overrides;
  std::optional<std::string> out;
};

RunConfig effective_config(const Options& o) {
  RunConfig cfg;
  if (o.config_path) {
    try {
      cfg = load_run_config(*o.config_path);
    } catch (const FormatError& e) {
      throw ConfigError(*o.config_path + ": " + e.what());
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw IoError(e.what());
    }
  }
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set needs key=value, got '" + kv + "'");
    cfg.set(std::string(text::trim(kv.substr(0, eq))), std::string(text::trim(kv.substr(eq + 1))));
  }
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  if (o.nodes) cfg.set("quadrature.nodes", std::to_string(*o.nodes));
  return cfg;
}

void emit(const Options& o, const std::string& body) {
  if (!o.out) {
    std::cout << body;
    return;
  }
  std::ofstream f(*o.out, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + *o.out + "'");
  f << body;
  f.close();
  if (!f) throw IoError("write to '" + *o.out + "' failed");
}

std::string csv_preamble(const RunConfig& cfg, const std::string& command) {
  return "# " + std::string(tool_version) + "\n# " + command + "\n" + cfg.echo();
}

std::string fmt(double v) { return text::format_double(v); }

ScanData read_series(const std::string& path) {
  std::string body;
  try {
    body = text::read_file(path);
  } catch (const Error& e) {
    throw IoError(e.what());
  }
  return ingest_measurement_series(body);
}

// ---------------------------------------------------------------------------------------------

std::string simulate_visibility_power(const RunConfig& cfg) {
  auto spec = cfg.interferometer();
  const auto mol = cfg.molecule();
  const auto q = velocity_quadrature(cfg.beam(), cfg.quadrature_nodes());
  const double p0 = cfg.number("simulate.power_min_W");
  const double p1 = cfg.number("simulate.power_max_W");
  const auto steps = cfg.count("simulate.power_steps");
  if (steps < 2 || !(p1 > p0) || p0 < 0.0) throw ConfigError("power grid needs 0 <= power_min_W < power_max_W, steps >= 2");
  std::string out = "power_W,vis_quantum,vis_classical\n";
  for (std::size_t i = 0; i < steps; ++i) {
    spec.g2.laser_power = p0 + (p1 - p0) * static_cast<double>(i) / static_cast<double>(steps - 1);
    out += fmt(spec.g2.laser_power) + ',' +
           fmt(velocity_averaged_observables(spec, mol, q, Regime::quantum).visibility) + ',' +
           fmt(velocity_averaged_observables(spec, mol, q, Regime::classical).visibility) + '\n';
  }
  return out;
}

std::string simulate_deflection_voltage(const RunConfig& cfg) {
  const auto spec = cfg.interferometer();
  const auto mol = cfg.molecule();
  const auto beam = cfg.beam();
  const auto deflector = cfg.deflector();
  check_deflector_geometry(deflector, spec);
  const auto q = velocity_quadrature(beam, cfg.quadrature_nodes());
  const double chi = cfg.number("molecule.chi_A3");
  const double period = spec.g1.period;
  const double umax = cfg.number("simulate.voltage_max_V");
  const auto steps = cfg.count("simulate.voltage_steps");
  if (steps < 2 || !(umax > 0.0)) throw ConfigError("voltage grid needs voltage_max_V > 0 and steps >= 2");
  const std::optional<VisibilityWeighting> weighting =
      cfg.flag("fit.visibility_weighting") ? std::optional<VisibilityWeighting>(VisibilityWeighting{spec, mol})
                                           : std::nullopt;
  const auto model = make_shift_model(q, mol.mass_amu, deflector.combined_constant(), period, weighting);
  std::string out = "voltage_V,shift_nm,shift_mono_nm,visibility\n";
  for (std::size_t i = 0; i < steps; ++i) {
    const double u = umax * static_cast<double>(i) / static_cast<double>(steps - 1);
    const auto phase = deflection_phase_profile(chi, mol.mass_amu, u, deflector, period);
    const auto obs = velocity_averaged_observables(spec, mol, q, phase, Regime::quantum);
    out += fmt(u) + ',' + fmt(model.shift(chi, u) * 1e9) + ',' +
           fmt(fringe_shift(chi, mol.mass_amu, u, beam.v_mean, deflector) * 1e9) + ',' + fmt(obs.visibility) + '\n';
  }
  return out;
}

std::string simulate_position_scan(const RunConfig& cfg) {
  const auto spec = cfg.interferometer();
  const auto mol = cfg.molecule();
  const auto deflector = cfg.deflector();
  const auto q = velocity_quadrature(cfg.beam(), cfg.quadrature_nodes());
  const double u = cfg.number("scan.voltage_V");
  const auto phase = deflection_phase_profile(cfg.number("molecule.chi_A3"), mol.mass_amu, u, deflector, spec.g1.period);
  const auto truth = velocity_averaged_observables(spec, mol, q, phase, Regime::quantum);
  const PositionScanRequest req{spec.g1.period, cfg.number("scan.step_nm") * 1e-9, cfg.count("scan.n_points"),
                                cfg.number("scan.counts_per_point"), 0.0};
  return "# planted visibility = " + fmt(truth.visibility) +
         ", delta_x3_nm = " + fmt(truth.fringe_phase * spec.g1.period / (2.0 * std::numbers::pi) * 1e9) + "\n" +
         write_measurement_series(synthesize_position_scan(truth, req, cfg.seed()));
}

// ---------------------------------------------------------------------------------------------

std::string summary_line(const FitParameter& p) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s = %.6g +- %.3g (stat) +- %.3g (syst) %s%s", p.name.c_str(), p.value, p.stat_err,
                p.syst_total(), p.unit.c_str(), p.derived ? " [derived]" : "");
  return buf;
}

FitResult run_fit(const RunConfig& cfg, const std::string& kind, const ScanData& data) {
  if (kind == "sinusoid") return fit_sinusoid(data, cfg.interferometer().g1.period);
  const auto beam = cfg.beam();
  const auto q = velocity_quadrature(beam, cfg.quadrature_nodes());
  if (kind == "susceptibility") {
    const auto spec = cfg.interferometer();
    SusceptibilityFitOptions o;
    o.period = spec.g1.period;
    if (cfg.flag("fit.visibility_weighting")) o.weighting = VisibilityWeighting{spec, cfg.molecule()};
    o.field_homogeneity = cfg.number("deflector.field_homogeneity");
    o.v_mean_uncertainty = cfg.number("beam.v_mean_uncertainty_mps");
    o.v_fwhm_uncertainty = cfg.number("beam.v_fwhm_uncertainty_mps");
    return fit_susceptibility(data, beam, cfg.mass_amu(), cfg.calibration(), q, o);
  }
  OpticalFitOptions o;
  o.include_absorption = cfg.flag("fit.include_absorption");
  o.fit_open_fraction = cfg.flag("fit.fit_open_fraction");
  o.power_rel_uncertainty = cfg.number("laser.power_rel_uncertainty");
  o.v_mean_uncertainty = cfg.number("beam.v_mean_uncertainty_mps");
  o.v_fwhm_uncertainty = cfg.number("beam.v_fwhm_uncertainty_mps");
  auto spec = cfg.interferometer();
  spec.options.absorption = o.include_absorption;
  return fit_optical_polarizability(data, beam, spec, cfg.molecule(), q, o);
}

nlohmann::ordered_json envelope(const RunConfig& cfg, const std::string& command, const std::string& input) {
  nlohmann::ordered_json j;
  j["version"] = std::string(tool_version);
  j["command"] = command;
  j["input"] = input;
  j["config"] = cfg.to_json();
  j["assumed"] = cfg.assumed_keys();
  return j;
}

int cmd_fit(const RunConfig& cfg, const Options& o, const std::string& kind, const std::string& input) {
  const auto data = read_series(input);
  const auto fit = run_fit(cfg, kind, data);
  auto j = envelope(cfg, "fit " + kind, input);
  j["result"] = to_json(fit);
  emit(o, j.dump(2) + "\n");

  auto& summary = o.out ? std::cout : std::cerr;
  summary << "fit " << kind << ": " << to_string(fit.status) << ", chi2 = " << fit.chi_squared << " / " << fit.dof
          << " dof\n";
  for (const auto& p : fit.parameters) summary << "  " << summary_line(p) << '\n';
  for (const auto& f : fit.flags) summary << "  flag: " << f << '\n';
  return fit.status == FitStatus::failed ? fit_failure : ok;
}

int cmd_stats(RunConfig cfg, const Options& o, const std::string& input, std::optional<double> temperature,
              std::optional<double> significance) {
  if (temperature) cfg.set("stats.temperature_K", *temperature);
  if (significance) cfg.set("stats.significance", *significance);
  std::string body;
  try {
    body = text::read_file(input);
  } catch (const Error& e) {
    throw IoError(e.what());
  }
  const auto samples = ingest_conformer_table(body);
  const auto s = summarize_ensemble(samples, cfg.number("stats.temperature_K"), cfg.number("stats.significance"),
                                    cfg.number("stats.temperature_uncertainty_K"));
  auto j = envelope(cfg, "stats", input);
  j["result"] = to_json(s);
  emit(o, j.dump(2) + "\n");

  auto& summary = o.out ? std::cout : std::cerr;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "n = %zu, T = %g K, significance = %g\n"
                "alpha_stat = %.4g +- %.2g A3\n"
                "alpha_dip  = %.4g +- %.2g A3 (temperature syst %.2g)\n"
                "chi = alpha_stat + alpha_dip = %.4g + %.4g = %.4g A3\n",
                s.n, s.temperature, s.significance_level, s.mean_alpha_stat, s.ci_alpha_stat, s.alpha_dip,
                s.ci_alpha_dip, s.syst_alpha_dip_temperature, s.mean_alpha_stat, s.alpha_dip, s.chi);
  summary << buf;
  return ok;
}

std::string constants_table() {
  std::string out = "# " + std::string(tool_version) + "\n# CODATA 2018\n";
  for (const auto& e : constant_keys) {
    out += std::string(e.key) + " = " + fmt(codata2018.*(e.field)) + "  # " + std::string(e.unit) + "\n";
  }
  out += "hbar = " + fmt(codata2018.hbar) + "  # J s, derived\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kapitza-Dirac-Talbot-Lau simulation and fitting toolkit", "kdtl"};
  app.set_version_flag("--version", std::string(tool_version));
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config_path, "run configuration (key-value file, or an output file to replay)");
  app.add_option("--seed", opt.seed, "random seed for synthetic data")->check(CLI::NonNegativeNumber);
  app.add_option("--nodes", opt.nodes, "velocity quadrature nodes")->check(CLI::PositiveNumber);
  app.add_option("--set", opt.overrides, "override a config key (key=value), repeatable");
  app.add_option("--out", opt.out, "output file (default: stdout)");

  std::string sim_kind;
  auto* sim = app.add_subcommand("simulate", "write a simulated table as CSV");
  sim->add_option("kind", sim_kind, "visibility_power | deflection_voltage | position_scan")
      ->required()
      ->check(CLI::IsMember({"visibility_power", "deflection_voltage", "position_scan"}));

  std::string fit_kind, fit_input;
  auto* fit = app.add_subcommand("fit", "fit a measurement series, write a JSON result");
  fit->add_option("kind", fit_kind, "sinusoid | susceptibility | optical_polarizability")
      ->required()
      ->check(CLI::IsMember({"sinusoid", "susceptibility", "optical_polarizability"}));
  fit->add_option("input", fit_input, "measurement CSV")->required();

  std::string stats_input;
  std::optional<double> temperature, significance;
  auto* stats = app.add_subcommand("stats", "conformer ensemble statistics, write a JSON summary");
  stats->add_option("input", stats_input, "conformer CSV (time_ns,alpha_stat_A3,dipole_D)")->required();
  stats->add_option("--temperature", temperature, "temperature, K (default stats.temperature_K)");
  stats->add_option("--significance", significance, "two-sided significance level (default stats.significance)");

  auto* constants_cmd = app.add_subcommand("constants", "print the pinned physical constants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    if (constants_cmd->parsed()) {
      emit(opt, constants_table());
      return ok;
    }
    const auto cfg = effective_config(opt);
    if (sim->parsed()) {
      std::string body;
      if (sim_kind == "visibility_power") body = simulate_visibility_power(cfg);
      if (sim_kind == "deflection_voltage") body = simulate_deflection_voltage(cfg);
      if (sim_kind == "position_scan") body = simulate_position_scan(cfg);
      emit(opt, csv_preamble(cfg, "simulate " + sim_kind) + body);
      return ok;
    }
    if (fit->parsed()) return cmd_fit(cfg, opt, fit_kind, fit_input);
    if (stats->parsed()) return cmd_stats(cfg, opt, stats_input, temperature, significance);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return io;
  } catch (const LineError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return format;
  } catch (const StatisticsError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return format;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return fit_failure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return usage;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return usage;
  } catch (const FormulaError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return io;
  }
  return usage;
}
