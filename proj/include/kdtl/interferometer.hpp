#ifndef KDTL_INTERFEROMETER_HPP
#define KDTL_INTERFEROMETER_HPP

// Forward model of the Kapitza-Dirac-Talbot-Lau interferometer: two binary material masks (G1, G3)
// around a standing-light-wave phase grating (G2), equal spacing L on both sides.
//
// The detected signal behind G3 is a Fourier series in the G3 position,
//   S(x) = N * sum_l b_l^2 B_{2l}(l L/L_T) exp(2 pi i l x / d),
// with b_l = f sinc(l f) the mask coefficients and B_m the Talbot coefficients of G2. The first
// harmonic therefore couples to the second-order coefficient B_2, and the sinusoidal visibility is
//   V = 2 sinc(f1) sinc(f3) |B_2(phi0, L/L_T)|.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "kdtl/beam.hpp"
#include "kdtl/constants.hpp"
#include "kdtl/error.hpp"
#include "kdtl/kinematics.hpp"
#include "kdtl/molecule.hpp"

namespace kdtl {

enum class Regime { quantum, classical };

struct MaterialGrating {
  double period = 0.0;         // m
  double open_fraction = 0.0;  // slit width / period

  void validate() const {
    if (!(period > 0.0)) throw ConfigError("grating period must be positive");
    if (!(open_fraction > 0.0 && open_fraction < 1.0)) throw ConfigError("open fraction must lie in (0, 1)");
  }
};

/// Retro-reflected Gaussian laser beam; the standing wave has period laser_wavelength / 2.
struct PhaseGrating {
  double laser_wavelength = 0.0;  // m
  double laser_power = 0.0;       // W
  double waist_y = 0.0;           // m, vertical 1/e^2 intensity radius
  double waist_z = 0.0;           // m, along the molecular flight path

  double period() const { return laser_wavelength / 2.0; }

  void validate() const {
    if (!(laser_wavelength > 0.0)) throw ConfigError("laser wavelength must be positive");
    if (!(laser_power >= 0.0)) throw ConfigError("laser power must be non-negative");
    if (!(waist_y > 0.0) || !(waist_z > 0.0)) throw ConfigError("laser waists must be positive");
  }
};

/// Optional refinements; all off by default.
struct ModelOptions {
  // Attenuate B by exp(-n0/2), n0 = photons absorbed at an antinode. An attenuation bound only,
  // not a decoherence model.
  bool absorption = false;
  // Height of the molecular beam; > 0 averages the Talbot coefficient over y in [-h/2, h/2]
  // where the phase is phi0 * exp(-2 y^2 / w_y^2).
  double beam_height = 0.0;  // m
  std::size_t height_nodes = 16;
  // Mean count level per unit f1 * f3.
  double count_normalization = 1.0;
  // Harmonics kept when evaluating the full signal profile.
  int harmonic_cutoff = 5;
};

struct InterferometerSpec {
  MaterialGrating g1;
  PhaseGrating g2;
  MaterialGrating g3;
  double separation_L = 0.0;  // m, G1->G2 and G2->G3
  ModelOptions options;

  static constexpr double period_tolerance = 1e-6;

  void validate() const {
    g1.validate();
    g2.validate();
    g3.validate();
    if (!(separation_L > 0.0)) throw ConfigError("grating separation must be positive");
    const double d = g1.period;
    if (std::abs(g3.period - d) > period_tolerance * d || std::abs(g2.period() - d) > period_tolerance * d) {
      throw ConfigError("grating periods must agree: d1 = d3 = laser wavelength / 2");
    }
    if (!(options.beam_height >= 0.0)) throw ConfigError("beam height must be non-negative");
    if (options.beam_height > 0.0 && options.height_nodes == 0) throw ConfigError("height averaging needs nodes");
  }
};

struct FringeObservables {
  double visibility = 0.0;    // 0..1
  double fringe_phase = 0.0;  // rad, (-pi, pi]
  double mean_count_level = 0.0;
};

/// sin(pi x) / (pi x).
inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

/// sin(pi x), exact zeros at integers.
inline double sin_pi(double x) {
  const double n = std::nearbyint(x);
  const double s = std::sin(std::numbers::pi * (x - n));
  return std::fmod(n, 2.0) == 0.0 ? s : -s;
}

/// Wraps an angle into (-pi, pi].
inline double wrap_phase(double phase) {
  double r = std::remainder(phase, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

/// Integer-order Bessel function of the first kind for any sign of order and argument.
inline double bessel_j(int order, double x) {
  double sign = 1.0;
  if (order < 0) {
    order = -order;
    if (order % 2 != 0) sign = -sign;
  }
  if (x < 0.0) {
    x = -x;
    if (order % 2 != 0) sign = -sign;
  }
  return sign * std::cyl_bessel_j(static_cast<double>(order), x);
}

/// Fourier coefficient A_m = f sinc(m f) of an ideal binary mask.
inline double binary_grating_coefficient(const MaterialGrating& grating, int order) {
  return grating.open_fraction * sinc(order * grating.open_fraction);
}

/// Peak phase phi0 of phi(x) = phi0 cos^2(2 pi x / lambda_L) for a molecule crossing the beam
/// centre (y = 0) at speed v.
inline double eikonal_phase(const MoleculeSpec& molecule, const PhaseGrating& grating, double v) {
  if (!(v > 0.0)) throw DomainError("velocity must be positive");
  const auto& k = constants;
  return std::sqrt(8.0 / std::numbers::pi) * polarizability_to_si(molecule.alpha_opt_a3) * grating.laser_power /
         (k.vacuum_permittivity_eps0 * k.hbar * k.light_speed_c * v * grating.waist_y);
}

/// Mean number of photons absorbed at an antinode, 8 sigma lambda P / (sqrt(2 pi) h c w_y v).
inline double absorbed_photons(const MoleculeSpec& molecule, const PhaseGrating& grating, double v) {
  if (!(v > 0.0)) throw DomainError("velocity must be positive");
  const auto& k = constants;
  return 8.0 * cm2_to_m2(molecule.sigma_abs_cm2) * grating.laser_wavelength * grating.laser_power /
         (std::sqrt(2.0 * std::numbers::pi) * k.planck_h * k.light_speed_c * grating.waist_y * v);
}

/// Talbot coefficient of a pure sinusoidal phase grating, B_m = J_m(phi0 sin(pi xi)); the classical
/// (ray-optics) counterpart replaces sin(pi xi) by pi xi.
inline double talbot_coefficient(double phi0, double xi, int order, Regime regime) {
  const double arg = regime == Regime::quantum ? phi0 * sin_pi(xi) : phi0 * std::numbers::pi * xi;
  return bessel_j(order, arg);
}

/// xi = L / L_T(v) with L_T = d^2 / lambda_dB.
inline double talbot_parameter(const InterferometerSpec& spec, double mass_amu, double v) {
  return spec.separation_L / talbot_length(spec.g1.period, de_broglie_wavelength(mass_amu, v));
}

namespace detail {

/// B_{2l}(l xi) including optional absorption and beam-height averaging.
inline double g2_coefficient(const InterferometerSpec& spec, const MoleculeSpec& molecule, double v, int harmonic,
                             Regime regime) {
  const double phi0 = eikonal_phase(molecule, spec.g2, v);
  const double n0 = spec.options.absorption ? absorbed_photons(molecule, spec.g2, v) : 0.0;
  const double xi = harmonic * talbot_parameter(spec, molecule.mass_amu, v);
  const auto at = [&](double scale) {
    return std::exp(-0.5 * n0 * scale) * talbot_coefficient(phi0 * scale, xi, 2 * harmonic, regime);
  };
  if (!(spec.options.beam_height > 0.0)) return at(1.0);
  const std::size_t n = spec.options.height_nodes;
  const double h = spec.options.beam_height;
  const double wy = spec.g2.waist_y;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = h * ((static_cast<double>(i) + 0.5) / static_cast<double>(n) - 0.5);
    acc += at(std::exp(-2.0 * y * y / (wy * wy)));
  }
  return acc / static_cast<double>(n);
}

}  // namespace detail

/// Signed first-harmonic amplitude relative to the mean level; |.| is the visibility.
inline double fringe_amplitude(const InterferometerSpec& spec, const MoleculeSpec& molecule, double v,
                               Regime regime) {
  return 2.0 * sinc(spec.g1.open_fraction) * sinc(spec.g3.open_fraction) *
         detail::g2_coefficient(spec, molecule, v, 1, regime);
}

inline double mean_count_level(const InterferometerSpec& spec) {
  return spec.options.count_normalization * spec.g1.open_fraction * spec.g3.open_fraction;
}

/// Monochromatic observables. Without external forces the fringe phase is zero.
inline FringeObservables fringe_observables(const InterferometerSpec& spec, const MoleculeSpec& molecule, double v,
                                            Regime regime) {
  spec.validate();
  return {std::abs(fringe_amplitude(spec, molecule, v, regime)), 0.0, mean_count_level(spec)};
}

/// Transmitted signal at G3 position x relative to the mean level, harmonics |l| <= cutoff.
inline double signal_profile(const InterferometerSpec& spec, const MoleculeSpec& molecule, double v, double x,
                             Regime regime) {
  double s = 1.0;
  const double f1 = spec.g1.open_fraction;
  const double f3 = spec.g3.open_fraction;
  for (int l = 1; l <= spec.options.harmonic_cutoff; ++l) {
    const double b = sinc(l * f1) * sinc(l * f3) * detail::g2_coefficient(spec, molecule, v, l, regime);
    s += 2.0 * b * std::cos(2.0 * std::numbers::pi * l * x / spec.g1.period);
  }
  return s;
}

/// Complex first harmonic H = sum_i w_i A(v_i) exp(i theta(v_i)) with A the signed amplitude;
/// visibility |H|. The phase is arg H measured from the field-free pattern, i.e. with the sign of
/// sum_i w_i A(v_i) divided out. external_phase maps velocity to the phase imposed by external forces.
template <class PhaseFn>
FringeObservables velocity_averaged_observables(const InterferometerSpec& spec, const MoleculeSpec& molecule,
                                                const VelocityQuadrature& quadrature, PhaseFn&& external_phase,
                                                Regime regime) {
  if (quadrature.nodes.empty()) throw ConfigError("empty velocity quadrature");
  quadrature.validate();
  spec.validate();
  std::complex<double> h{0.0, 0.0};
  double field_free = 0.0;
  for (std::size_t i = 0; i < quadrature.size(); ++i) {
    const double v = quadrature.nodes[i];
    const double a = quadrature.weights[i] * fringe_amplitude(spec, molecule, v, regime);
    h += std::polar(1.0, static_cast<double>(external_phase(v))) * a;
    field_free += a;
  }
  if (field_free < 0.0) h = -h;
  return {std::abs(h), h == 0.0 ? 0.0 : wrap_phase(std::arg(h)), mean_count_level(spec)};
}

inline FringeObservables velocity_averaged_observables(const InterferometerSpec& spec, const MoleculeSpec& molecule,
                                                       const VelocityQuadrature& quadrature, Regime regime) {
  return velocity_averaged_observables(spec, molecule, quadrature, [](double) { return 0.0; }, regime);
}

}  // namespace kdtl

#endif  // KDTL_INTERFEROMETER_HPP
