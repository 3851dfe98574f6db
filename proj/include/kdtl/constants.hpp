#ifndef KDTL_CONSTANTS_HPP
#define KDTL_CONSTANTS_HPP

#include <array>
#include <numbers>
#include <string>
#include <string_view>

#include "kdtl/error.hpp"
#include "kdtl/text.hpp"

namespace kdtl {

/// SI constants. hbar is always derived from planck_h.
struct PhysicalConstants {
  double planck_h;                  // J s
  double hbar;                      // J s
  double light_speed_c;             // m/s
  double boltzmann_kB;              // J/K
  double vacuum_permittivity_eps0;  // F/m
  double atomic_mass_unit;          // kg
  double debye;                     // C m
  double angstrom3;                 // m^3
};

/// CODATA 2018. Must match data/constants_codata2018.txt (checked by the test suite).
inline constexpr PhysicalConstants codata2018{
    .planck_h = 6.62607015e-34,
    .hbar = 6.62607015e-34 / (2.0 * std::numbers::pi),
    .light_speed_c = 299792458.0,
    .boltzmann_kB = 1.380649e-23,
    .vacuum_permittivity_eps0 = 8.8541878128e-12,
    .atomic_mass_unit = 1.66053906660e-27,
    .debye = 3.33564095198152e-30,
    .angstrom3 = 1e-30,
};

/// Constants used throughout the library.
inline constexpr const PhysicalConstants& constants = codata2018;

struct ConstantEntry {
  std::string_view key;
  double PhysicalConstants::*field;
  std::string_view unit;
};

/// File keys in canonical order. hbar is not a file key.
inline constexpr std::array<ConstantEntry, 7> constant_keys{{
    {"planck_h", &PhysicalConstants::planck_h, "J s"},
    {"light_speed_c", &PhysicalConstants::light_speed_c, "m/s"},
    {"boltzmann_kB", &PhysicalConstants::boltzmann_kB, "J/K"},
    {"vacuum_permittivity_eps0", &PhysicalConstants::vacuum_permittivity_eps0, "F/m"},
    {"atomic_mass_unit", &PhysicalConstants::atomic_mass_unit, "kg"},
    {"debye", &PhysicalConstants::debye, "C m"},
    {"angstrom3", &PhysicalConstants::angstrom3, "m^3"},
}};

/// Parses a constants document (key-value grammar, see text.hpp). All keys required.
inline PhysicalConstants parse_constants(std::string_view document) {
  PhysicalConstants out{};
  std::array<bool, constant_keys.size()> seen{};
  for (const auto& kv : text::parse_kv(document)) {
    bool known = false;
    for (std::size_t i = 0; i < constant_keys.size(); ++i) {
      if (kv.key != constant_keys[i].key) continue;
      const auto v = text::parse_double(kv.value);
      if (!v || !(*v > 0.0)) throw FormatError("bad value for '" + kv.key + "'", kv.line);
      out.*(constant_keys[i].field) = *v;
      seen[i] = known = true;
    }
    if (!known) throw FormatError("unknown constant '" + kv.key + "'", kv.line);
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw FormatError("missing constant '" + std::string(constant_keys[i].key) + "'", 0);
  }
  out.hbar = out.planck_h / (2.0 * std::numbers::pi);
  return out;
}

inline PhysicalConstants load_constants(const std::string& path) {
  return parse_constants(text::read_file(path));
}

// Unit conversions. Polarizabilities cross between volume (A^3) and SI (C m^2/V) only here.

inline double polarizability_to_si(double volume_a3) {
  return 4.0 * std::numbers::pi * constants.vacuum_permittivity_eps0 * volume_a3 * constants.angstrom3;
}

inline double polarizability_to_volume(double alpha_si) {
  return alpha_si / (4.0 * std::numbers::pi * constants.vacuum_permittivity_eps0 * constants.angstrom3);
}

inline double amu_to_kg(double amu) { return amu * constants.atomic_mass_unit; }

inline double debye_to_si(double debye) { return debye * constants.debye; }

inline double cm2_to_m2(double cm2) { return cm2 * 1e-4; }

}  // namespace kdtl

#endif  // KDTL_CONSTANTS_HPP
