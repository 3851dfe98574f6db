#ifndef KDTL_CONFORMER_HPP
#define KDTL_CONFORMER_HPP

// Conformer-ensemble statistics: van Vleck susceptibility of a thermally fluctuating molecule
// from snapshot tables (time, alpha_stat, |d|) produced by an external MD + DFT pipeline.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "kdtl/constants.hpp"
#include "kdtl/error.hpp"
#include "kdtl/text.hpp"

namespace kdtl {

struct ConformerSample {
  double time_ns = 0.0;
  double alpha_stat_a3 = 0.0;
  double dipole_debye = 0.0;
};

struct EnsembleSummary {
  std::size_t n = 0;
  double mean_alpha_stat = 0.0;     // A^3
  double mean_square_dipole = 0.0;  // D^2
  double alpha_dip = 0.0;           // A^3
  double chi = 0.0;                 // A^3, always mean_alpha_stat + alpha_dip
  double ci_alpha_stat = 0.0;       // A^3 half-width
  double ci_alpha_dip = 0.0;        // A^3 half-width
  double significance_level = 0.05;
  double temperature = 0.0;  // K
  // Half the spread of alpha_dip between T - dT and T + dT; zero when no dT was given.
  double syst_alpha_dip_temperature = 0.0;
};

/// <d^2> / (3 kB T), expressed as a polarizability volume in A^3.
inline double dipole_polarizability(double mean_square_dipole_d2, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  if (!(mean_square_dipole_d2 >= 0.0)) throw DomainError("mean square dipole must be non-negative");
  const double d2_si = mean_square_dipole_d2 * constants.debye * constants.debye;
  return polarizability_to_volume(d2_si / (3.0 * constants.boltzmann_kB * temperature));
}

inline double van_vleck_susceptibility(double alpha_stat_a3, double alpha_dip_a3) {
  if (!(alpha_stat_a3 >= 0.0) || !(alpha_dip_a3 >= 0.0)) throw DomainError("polarizabilities must be non-negative");
  return alpha_stat_a3 + alpha_dip_a3;
}

/// Student-t inverse CDF.
inline double t_quantile(double degrees_of_freedom, double probability) {
  if (!(degrees_of_freedom >= 1.0)) throw DomainError("t quantile needs degrees of freedom >= 1");
  if (!(probability > 0.0 && probability < 1.0)) throw DomainError("t quantile probability must lie in (0, 1)");
  if (probability == 0.5) return 0.0;
  const boost::math::students_t dist(degrees_of_freedom);
  return boost::math::quantile(dist, probability);
}

namespace detail {

struct MeanStd {
  double mean;
  double std;  // n - 1 divisor
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

inline void check_timestamps(const std::vector<ConformerSample>& samples) {
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].time_ns > samples[i - 1].time_ns)) {
      throw IngestionError("timestamps must be strictly increasing (sample " + std::to_string(i + 1) + ")", 0);
    }
  }
}

}  // namespace detail

/// Sample means, van Vleck decomposition and two-sided t-intervals at the given significance level.
/// The alpha_dip interval is taken on the per-sample series d_i^2 / (3 kB T).
/// temperature_uncertainty > 0 adds the alpha_dip spread over T +- dT as a systematic.
inline EnsembleSummary summarize_ensemble(const std::vector<ConformerSample>& samples, double temperature,
                                          double significance_level = 0.05, double temperature_uncertainty = 0.0) {
  if (samples.size() < 2) throw StatisticsError("ensemble statistics need at least 2 samples");
  if (!(significance_level > 0.0 && significance_level < 1.0)) {
    throw DomainError("significance level must lie in (0, 1)");
  }
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  if (!(temperature_uncertainty >= 0.0) || !(temperature_uncertainty < temperature)) {
    throw DomainError("temperature uncertainty must lie in [0, T)");
  }
  detail::check_timestamps(samples);

  const double per_d2 = dipole_polarizability(1.0, temperature);
  std::vector<double> alpha_stat, alpha_dip, d2;
  for (const auto& s : samples) {
    if (!(s.alpha_stat_a3 >= 0.0) || !(s.dipole_debye >= 0.0)) {
      throw DomainError("conformer sample values must be non-negative");
    }
    alpha_stat.push_back(s.alpha_stat_a3);
    d2.push_back(s.dipole_debye * s.dipole_debye);
    alpha_dip.push_back(per_d2 * d2.back());
  }

  const auto a = detail::mean_std(alpha_stat);
  const auto p = detail::mean_std(alpha_dip);
  const auto n = static_cast<double>(samples.size());
  const double t = t_quantile(n - 1.0, 1.0 - significance_level / 2.0);

  EnsembleSummary out;
  out.n = samples.size();
  out.mean_alpha_stat = a.mean;
  out.mean_square_dipole = detail::mean_std(d2).mean;
  out.alpha_dip = dipole_polarizability(out.mean_square_dipole, temperature);
  out.chi = out.mean_alpha_stat + out.alpha_dip;
  out.ci_alpha_stat = t * a.std / std::sqrt(n);
  out.ci_alpha_dip = t * p.std / std::sqrt(n);
  out.significance_level = significance_level;
  out.temperature = temperature;
  if (temperature_uncertainty > 0.0) {
    const double lo = dipole_polarizability(out.mean_square_dipole, temperature + temperature_uncertainty);
    const double hi = dipole_polarizability(out.mean_square_dipole, temperature - temperature_uncertainty);
    out.syst_alpha_dip_temperature = 0.5 * (hi - lo);
  }
  return out;
}

inline constexpr std::string_view conformer_header = "time_ns,alpha_stat_A3,dipole_D";

/// Reads a conformer table. Blank lines and lines starting with '#' are skipped; the first other
/// line must be the header.
inline std::vector<ConformerSample> ingest_conformer_table(std::string_view document) {
  std::vector<ConformerSample> out;
  bool have_header = false;
  std::size_t line_no = 0;
  for (auto raw : text::split(document, '\n')) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!have_header) {
      if (line != conformer_header) {
        throw FormatError("expected header '" + std::string(conformer_header) + "'", line_no);
      }
      have_header = true;
      continue;
    }
    const auto fields = text::split(line, ',');
    if (fields.size() != 3) throw IngestionError("expected 3 fields", line_no);
    const auto t = text::parse_double(fields[0]);
    const auto a = text::parse_double(fields[1]);
    const auto d = text::parse_double(fields[2]);
    if (!t || !a || !d) throw IngestionError("malformed row '" + std::string(line) + "'", line_no);
    if (*a < 0.0 || *d < 0.0) throw IngestionError("negative polarizability or dipole", line_no);
    if (!out.empty() && !(*t > out.back().time_ns)) {
      throw IngestionError("timestamps must be strictly increasing", line_no);
    }
    out.push_back({*t, *a, *d});
  }
  if (!have_header) throw FormatError("missing header '" + std::string(conformer_header) + "'", 0);
  return out;
}

inline std::vector<ConformerSample> load_conformer_table(const std::string& path) {
  return ingest_conformer_table(text::read_file(path));
}

/// Machine-readable summary; keys are part of the external interface.
inline nlohmann::ordered_json to_json(const EnsembleSummary& s) {
  nlohmann::ordered_json j;
  j["n"] = s.n;
  j["mean_alpha_stat_A3"] = s.mean_alpha_stat;
  j["mean_square_dipole_D2"] = s.mean_square_dipole;
  j["alpha_dip_A3"] = s.alpha_dip;
  j["chi_A3"] = s.chi;
  j["ci_alpha_stat_A3"] = s.ci_alpha_stat;
  j["ci_alpha_dip_A3"] = s.ci_alpha_dip;
  j["significance"] = s.significance_level;
  j["temperature_K"] = s.temperature;
  j["syst_alpha_dip_temperature_A3"] = s.syst_alpha_dip_temperature;
  return j;
}

/// Human-readable "key = value" form of the same fields.
inline std::string to_key_value(const EnsembleSummary& s) {
  std::ostringstream out;
  const auto j = to_json(s);
  for (const auto& [key, value] : j.items()) out << key << " = " << value.dump() << '\n';
  return out.str();
}

}  // namespace kdtl

#endif  // KDTL_CONFORMER_HPP
