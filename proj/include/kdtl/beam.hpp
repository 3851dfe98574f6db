#ifndef KDTL_BEAM_HPP
#define KDTL_BEAM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include "kdtl/error.hpp"

namespace kdtl {

/// Conversion factor FWHM = fwhm_per_sigma * sigma for a Gaussian.
inline const double fwhm_per_sigma = 2.0 * std::sqrt(2.0 * std::numbers::ln2);

/// Number-density Gaussian in v, truncated to v > 0.
struct BeamSpec {
  double v_mean = 0.0;              // m/s
  double v_fwhm = 0.0;              // m/s
  double source_temperature = 0.0;  // K

  double sigma() const { return v_fwhm / fwhm_per_sigma; }

  void validate() const {
    if (!(v_mean > 0.0)) throw DomainError("beam v_mean must be positive");
    if (!(v_fwhm > 0.0) || !(v_fwhm < 2.0 * v_mean)) throw DomainError("beam v_fwhm must lie in (0, 2 v_mean)");
    if (!(source_temperature > 0.0)) throw DomainError("source temperature must be positive");
  }
};

struct VelocityQuadrature {
  std::vector<double> nodes;    // m/s, strictly increasing
  std::vector<double> weights;  // sum to 1

  std::size_t size() const { return nodes.size(); }

  void validate() const {
    if (nodes.empty()) throw ConfigError("empty velocity quadrature");
    if (nodes.size() != weights.size()) throw ConfigError("quadrature nodes and weights differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!(nodes[i] > 0.0)) throw ConfigError("quadrature node must be positive");
      if (i > 0 && !(nodes[i] > nodes[i - 1])) throw ConfigError("quadrature nodes must be strictly increasing");
      if (!(weights[i] >= 0.0)) throw ConfigError("quadrature weight must be non-negative");
      total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("quadrature weights must sum to 1");
  }

  /// Weighted sum of f over the nodes, in node order.
  template <class F>
  auto expect(F&& f) const {
    decltype(f(nodes[0]) * weights[0]) acc{};
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

/// Monochromatic beam.
inline VelocityQuadrature single_node_quadrature(double v) {
  if (!(v > 0.0)) throw DomainError("velocity must be positive");
  return {{v}, {1.0}};
}

/// Half-width of the quadrature interval in standard deviations.
inline constexpr double velocity_span_sigmas = 6.0;

namespace detail {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

/// Phi(z) computed without cancellation in either tail.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// z with upper-tail probability q, i.e. 1 - Phi(z) = q.
inline double normal_upper_quantile(double q) {
  static const boost::math::normal standard;
  if (q <= 0.0) return INFINITY;
  if (q >= 1.0) return -INFINITY;
  return q < 0.5 ? -boost::math::quantile(standard, q) : boost::math::quantile(standard, 1.0 - q);
}

}  // namespace detail

/// Mean of the truncated (v > 0) Gaussian.
inline double truncated_mean(const BeamSpec& beam) {
  const double s = beam.sigma();
  const double alpha = -beam.v_mean / s;
  return beam.v_mean + s * detail::normal_pdf(alpha) / detail::normal_cdf(-alpha);
}

/// Inverse CDF of the truncated Gaussian; u in (0, 1).
inline double truncated_quantile(const BeamSpec& beam, double u) {
  const double s = beam.sigma();
  const double kept = detail::normal_cdf(beam.v_mean / s);  // P(v > 0) before truncation
  return beam.v_mean + s * detail::normal_upper_quantile((1.0 - u) * kept);
}

/// Gauss-Legendre nodes on [max(0, mean - 6 sigma), mean + 6 sigma] with weights proportional to
/// the Gaussian density, normalised to 1 (the v > 0 truncation is exact when the interval is clipped).
inline VelocityQuadrature velocity_quadrature(const BeamSpec& beam, std::size_t n_nodes) {
  if (n_nodes < 3) throw ConfigError("velocity quadrature needs at least 3 nodes");
  beam.validate();
  const double s = beam.sigma();
  const double lo = std::max(0.0, beam.v_mean - velocity_span_sigmas * s);
  const double hi = beam.v_mean + velocity_span_sigmas * s;
  const int n = static_cast<int>(n_nodes);

  // boost returns the non-negative roots in increasing order; mirror them for the full set.
  const auto positive = boost::math::legendre_p_zeros<double>(n);
  std::vector<double> x;
  for (auto it = positive.rbegin(); it != positive.rend(); ++it) {
    if (*it > 0.0) x.push_back(-*it);
  }
  for (double r : positive) x.push_back(r);

  VelocityQuadrature q;
  double total = 0.0;
  for (double xi : x) {
    const double dp = boost::math::legendre_p_prime(n, xi);
    const double gl = 2.0 / ((1.0 - xi * xi) * dp * dp);
    const double v = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xi;
    const double w = gl * detail::normal_pdf((v - beam.v_mean) / s);
    q.nodes.push_back(v);
    q.weights.push_back(w);
    total += w;
  }
  for (double& w : q.weights) w /= total;
  return q;
}

}  // namespace kdtl

#endif  // KDTL_BEAM_HPP
