#ifndef KDTL_KINEMATICS_HPP
#define KDTL_KINEMATICS_HPP

#include "kdtl/constants.hpp"
#include "kdtl/error.hpp"

namespace kdtl {

/// lambda = h / (m v), in metres.
inline double de_broglie_wavelength(double mass_amu, double velocity) {
  if (!(mass_amu > 0.0) || !(velocity > 0.0)) throw DomainError("de Broglie wavelength needs mass > 0 and v > 0");
  return constants.planck_h / (amu_to_kg(mass_amu) * velocity);
}

/// Talbot length d^2 / lambda, in metres.
inline double talbot_length(double period, double wavelength) {
  if (!(period > 0.0) || !(wavelength > 0.0)) throw DomainError("Talbot length needs period > 0 and wavelength > 0");
  return period * period / wavelength;
}

}  // namespace kdtl

#endif  // KDTL_KINEMATICS_HPP
