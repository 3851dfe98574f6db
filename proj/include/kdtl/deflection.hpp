#ifndef KDTL_DEFLECTION_HPP
#define KDTL_DEFLECTION_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <set>
#include <vector>

#include "kdtl/constants.hpp"
#include "kdtl/error.hpp"
#include "kdtl/interferometer.hpp"
#include "kdtl/molecule.hpp"

namespace kdtl {

/// Electrode pair between G1 and G2 producing (E.grad)E = K U^2, uniform over its effective length.
struct DeflectorSpec {
  double geometry_K = 0.0;        // 1/m^3, (E.grad)E per volt^2
  double effective_length = 0.0;  // m
  double distance_to_g3 = 0.0;    // m, deflector exit to G3

  void validate() const {
    if (!(geometry_K > 0.0)) throw ConfigError("deflector K must be positive");
    if (!(effective_length > 0.0) || !(distance_to_g3 > 0.0)) throw ConfigError("deflector lengths must be positive");
  }

  /// Displacement per unit acceleration, times v^2: l^2/2 + l D (m^2).
  double kinematic_factor() const { return 0.5 * effective_length * effective_length + effective_length * distance_to_g3; }

  /// K * kinematic factor (1/m); the only combination that enters the fringe shift.
  double combined_constant() const { return geometry_K * kinematic_factor(); }
};

/// The deflector must sit between G1 and G2.
inline void check_deflector_geometry(const DeflectorSpec& deflector, const InterferometerSpec& spec) {
  deflector.validate();
  const double entry_to_g3 = deflector.distance_to_g3 + deflector.effective_length;
  if (!(deflector.distance_to_g3 >= spec.separation_L) || !(entry_to_g3 <= 2.0 * spec.separation_L)) {
    throw ConfigError("deflector must lie between G1 and G2");
  }
}

/// Geometry constant G = K * C_geom obtained from a reference measurement.
struct CalibratedDeflector {
  double constant = 0.0;   // 1/m
  double std_error = 0.0;  // 1/m

  double relative_error() const { return std_error / constant; }
};

inline CalibratedDeflector uncalibrated(const DeflectorSpec& deflector) {
  deflector.validate();
  return {deflector.combined_constant(), 0.0};
}

/// Delta x3 = G * alpha_SI(chi) * U^2 / (m v^2), metres.
inline double fringe_shift(double chi_a3, double mass_amu, double voltage, double v, double combined_constant) {
  if (!(v > 0.0)) throw DomainError("velocity must be positive");
  if (!(mass_amu > 0.0)) throw DomainError("mass must be positive");
  return combined_constant * polarizability_to_si(chi_a3) * voltage * voltage / (amu_to_kg(mass_amu) * v * v);
}

inline double fringe_shift(double chi_a3, double mass_amu, double voltage, double v, const DeflectorSpec& deflector) {
  deflector.validate();
  return fringe_shift(chi_a3, mass_amu, voltage, v, deflector.combined_constant());
}

/// theta(v) = 2 pi Delta x3(v) / d.
class DeflectionPhase {
public:
  DeflectionPhase(double chi_a3, double mass_amu, double voltage, double combined_constant, double period)
      : chi_(chi_a3), mass_(mass_amu), voltage_(voltage), constant_(combined_constant), period_(period) {
    if (!(mass_amu > 0.0)) throw DomainError("mass must be positive");
    if (!(period > 0.0)) throw DomainError("period must be positive");
  }

  double operator()(double v) const {
    return 2.0 * std::numbers::pi * fringe_shift(chi_, mass_, voltage_, v, constant_) / period_;
  }

private:
  double chi_, mass_, voltage_, constant_, period_;
};

inline DeflectionPhase deflection_phase_profile(double chi_a3, double mass_amu, double voltage,
                                                const DeflectorSpec& deflector, double period) {
  deflector.validate();
  return {chi_a3, mass_amu, voltage, deflector.combined_constant(), period};
}

struct CalibrationPoint {
  double voltage = 0.0;  // V
  double shift = 0.0;    // m
  double v = 0.0;        // m/s
  double error = 0.0;    // m, 1 sigma; <= 0 when unknown
};

/// Least-squares slope of shift against alpha_SI U^2 / (m v^2) for a rigid reference molecule
/// (its alpha_stat). With per-point errors the slope error is the weighted-fit error; otherwise it
/// comes from the residual scatter.
inline CalibratedDeflector calibrate_geometry(const MoleculeSpec& reference, const std::vector<CalibrationPoint>& data) {
  if (!(reference.alpha_stat_a3 > 0.0)) throw CalibrationError("reference polarizability must be positive");
  if (!(reference.mass_amu > 0.0)) throw CalibrationError("reference mass must be positive");
  std::set<double> voltages;
  bool all_errors = !data.empty();
  for (const auto& p : data) {
    if (!(p.v > 0.0)) throw CalibrationError("calibration velocity must be positive");
    voltages.insert(std::abs(p.voltage));
    all_errors = all_errors && p.error > 0.0;
  }
  if (voltages.size() < 2) throw CalibrationError("calibration needs at least two distinct voltages");

  const double alpha = polarizability_to_si(reference.alpha_stat_a3);
  const double m = amu_to_kg(reference.mass_amu);
  double sxx = 0.0, sxy = 0.0;
  std::vector<double> xs;
  for (const auto& p : data) {
    const double x = alpha * p.voltage * p.voltage / (m * p.v * p.v);
    const double w = all_errors ? 1.0 / (p.error * p.error) : 1.0;
    xs.push_back(x);
    sxx += w * x * x;
    sxy += w * x * p.shift;
  }
  if (!(sxx > 0.0)) throw CalibrationError("calibration design is rank deficient");
  const double g = sxy / sxx;
  double err = 0.0;
  if (all_errors) {
    err = 1.0 / std::sqrt(sxx);
  } else {
    double ss = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) ss += std::pow(data[i].shift - g * xs[i], 2);
    err = std::sqrt(ss / static_cast<double>(data.size() - 1) / sxx);
  }
  return {g, err};
}

}  // namespace kdtl

#endif  // KDTL_DEFLECTION_HPP
