#ifndef KDTL_TESTS_ORACLES_HPP
#define KDTL_TESTS_ORACLES_HPP

// Independent reference computations for the test suites. Nothing here calls the library code path
// it is used to check; constants are restated locally.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double h = 6.62607015e-34;
inline constexpr double hbar = h / (2.0 * std::numbers::pi);
inline constexpr double c = 299792458.0;
inline constexpr double kB = 1.380649e-23;
inline constexpr double eps0 = 8.8541878128e-12;
inline constexpr double amu = 1.66053906660e-27;
inline constexpr double debye = 1e-21 / c;
inline constexpr double pi = std::numbers::pi;

inline double alpha_si(double volume_a3) { return 4.0 * pi * eps0 * volume_a3 * 1e-30; }

/// J_m(x) from its power series in long double (accurate to ~1e-12 for |x| <= 12).
inline double bessel_series(int m, double x) {
  long double sign = 1.0L;
  if (m < 0) {
    m = -m;
    if (m % 2) sign = -sign;
  }
  const long double half = static_cast<long double>(x) / 2.0L;
  long double term = 1.0L;
  for (int k = 1; k <= m; ++k) term *= half / k;
  long double sum = term;
  for (int k = 1; k < 400; ++k) {
    term *= -half * half / (static_cast<long double>(k) * (k + m));
    sum += term;
    if (std::fabs(term) < 1e-30L * std::fabs(sum) && k > 10) break;
  }
  return static_cast<double>(sign * sum);
}

/// Student-t CDF by composite Simpson integration of the density from 0 to t.
inline double t_cdf(double df, double t) {
  const double norm = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * pi);
  const auto pdf = [&](double x) { return norm * std::pow(1.0 + x * x / df, -(df + 1) / 2); };
  const int n = 20000;
  const double step = t / n;
  double s = pdf(0) + pdf(t);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(i * step);
  return 0.5 + s * step / 3.0;
}

inline double t_quantile_bisect(double df, double p) {
  double lo = -50.0, hi = 50.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (t_cdf(df, mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Eikonal phase from the optical dipole potential U = -alpha I / (2 eps0 c) integrated along a
/// straight path through the antinode at y = 0; standing-wave peak intensity 8P/(pi w_y w_z).
inline double eikonal_phase_trajectory(double alpha_a3, double power, double v, double waist_y, double waist_z) {
  const double a = alpha_si(alpha_a3);
  const double i0 = 8.0 * power / (pi * waist_y * waist_z);
  const auto potential = [&](double z) { return -a * i0 * std::exp(-2.0 * z * z / (waist_z * waist_z)) / (2.0 * eps0 * c); };
  const double zmax = 10.0 * waist_z;
  const int n = 4000;
  const double step = 2.0 * zmax / n;
  double s = potential(-zmax) + potential(zmax);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * potential(-zmax + i * step);
  const double integral_dz = s * step / 3.0;
  return std::abs(integral_dz / v) / hbar;
}

/// Deflection at G3 from explicit time stepping with a constant force inside the electrode region
/// and free flight afterwards.
inline double deflection_trajectory(double chi_a3, double mass_amu, double voltage, double v, double geometry_K,
                                    double effective_length, double distance_to_g3, int steps = 20000) {
  const double m = mass_amu * amu;
  const double accel = alpha_si(chi_a3) * geometry_K * voltage * voltage / m;
  const double dt = effective_length / v / steps;
  double x = 0.0, vx = 0.0;
  for (int i = 0; i < steps; ++i) {
    x += vx * dt + 0.5 * accel * dt * dt;
    vx += accel * dt;
  }
  const double drift_time = distance_to_g3 / v;
  return x + vx * drift_time;
}

struct RayTraceSetup {
  double period;         // d, all three gratings
  double open_fraction;  // f1 = f3
  double separation;     // L
  double mass_amu;
  // Peak eikonal phase phi0(v) of phi(x) = -phi0 cos^2(pi x / d) (attractive potential).
  std::function<double(double)> phi0;
  // Draws a velocity from the beam distribution given u in (0, 1).
  std::function<double(double)> velocity_from_uniform;
};

/// Classical Moire visibility: rays leave a G1 slit with uniform transverse position at G2, receive
/// the optical-gradient impulse dp = -d/dx (hbar phi(x)), drift to G3; the G3 mask transmission is
/// evaluated at 64 lateral offsets and its first Fourier harmonic gives V = 2|c1|/c0.
inline double classical_ray_trace_visibility(const RayTraceSetup& s, std::size_t rays, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double d = s.period;
  const int bins = 6400;
  std::vector<double> hist(bins, 0.0);
  for (std::size_t r = 0; r < rays; ++r) {
    const double v = s.velocity_from_uniform(uni(rng));
    const double x1 = (std::floor(uni(rng) * 1000.0) + (uni(rng) - 0.5) * s.open_fraction) * d;
    const double x2 = uni(rng) * 1000.0 * d;
    // phi(x) = -phi0 cos^2(pi x/d)  =>  dphi/dx = phi0 (pi/d) sin(2 pi x/d); impulse = -hbar dphi/dx
    const double kick = -hbar * s.phi0(v) * (pi / d) * std::sin(2.0 * pi * x2 / d);
    const double m = s.mass_amu * amu;
    const double x3 = 2.0 * x2 - x1 + s.separation * kick / (m * v);
    double u = std::fmod(x3 / d, 1.0);
    if (u < 0) u += 1.0;
    hist[static_cast<int>(u * bins) % bins] += 1.0;
  }
  // Transmission of a G3 slit of width f d centred at offset o, for 64 offsets.
  const int offsets = 64;
  const int open_bins = static_cast<int>(std::lround(s.open_fraction * bins));
  std::complex<double> c1{0.0, 0.0};
  double c0 = 0.0;
  for (int k = 0; k < offsets; ++k) {
    const int start = k * bins / offsets;
    double t = 0.0;
    for (int b = 0; b < open_bins; ++b) t += hist[(start + b) % bins];
    c0 += t;
    c1 += t * std::polar(1.0, 2.0 * pi * k / offsets);
  }
  return 2.0 * std::abs(c1) / c0;
}

}  // namespace oracle

#endif  // KDTL_TESTS_ORACLES_HPP
