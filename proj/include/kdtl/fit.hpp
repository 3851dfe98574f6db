#ifndef KDTL_FIT_HPP
#define KDTL_FIT_HPP

// Inverse problems: sinusoid fits of position scans, susceptibility from shift-vs-voltage series,
// optical polarizability (and optionally an absorption cross section) from visibility-vs-power.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kdtl/beam.hpp"
#include "kdtl/deflection.hpp"
#include "kdtl/error.hpp"
#include "kdtl/interferometer.hpp"
#include "kdtl/least_squares.hpp"
#include "kdtl/molecule.hpp"
#include "kdtl/scan.hpp"

namespace kdtl {

enum class FitStatus { converged, flagged, failed };

inline std::string_view to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::flagged: return "flagged";
    case FitStatus::failed: return "failed";
  }
  return "failed";
}

struct FitParameter {
  std::string name;
  std::string unit;
  double value = 0.0;
  double stat_err = 0.0;
  std::vector<std::pair<std::string, double>> syst;  // named systematic components
  bool derived = false;                               // not a free parameter of the fit

  /// Root-sum-square of the named components.
  double syst_total() const {
    double s = 0.0;
    for (const auto& [name, v] : syst) s += v * v;
    return std::sqrt(s);
  }
};

struct FitResult {
  std::string kind;
  std::vector<FitParameter> parameters;
  std::vector<std::string> covariance_names;  // order of the covariance rows
  Eigen::MatrixXd covariance;
  double chi_squared = 0.0;
  int dof = 0;
  int iterations = 0;
  FitStatus status = FitStatus::converged;
  std::vector<std::string> flags;
  std::vector<std::pair<std::string, double>> diagnostics;

  const FitParameter& at(std::string_view name) const {
    for (const auto& p : parameters) {
      if (p.name == name) return p;
    }
    throw Error("no fit parameter '" + std::string(name) + "'");
  }
  double value(std::string_view name) const { return at(name).value; }
  double stat_err(std::string_view name) const { return at(name).stat_err; }

  std::optional<double> diagnostic(std::string_view name) const {
    for (const auto& [k, v] : diagnostics) {
      if (k == name) return v;
    }
    return std::nullopt;
  }

  void flag(std::string message) {
    flags.push_back(std::move(message));
    if (status == FitStatus::converged) status = FitStatus::flagged;
  }
};

// ---------------------------------------------------------------------------------------------
// Sinusoid fit of a position scan: S(x) = O + A sin(2 pi (x - dx) / d), V = A / O.

/// Weighted linear fit in the (1, sin, cos) basis, converted to (O, A, dx) with first-order error
/// propagation. Poisson weights: a first pass uses sigma^2 = max(count, 1), later passes the fitted
/// expectation, which removes the downward bias of data-derived weights.
inline FitResult fit_sinusoid(const ScanData& scan, double period) {
  if (scan.kind != AbscissaKind::position_x3) throw FitError("sinusoid fit needs a position scan");
  if (!(period > 0.0)) throw DomainError("period must be positive");
  const auto n = static_cast<Eigen::Index>(scan.size());
  if (n < 4) throw FitError("sinusoid fit needs at least 4 points");
  const double k = 2.0 * std::numbers::pi / period;

  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n), variance(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = scan.points[static_cast<std::size_t>(i)];
    design(i, 0) = 1.0;
    design(i, 1) = std::sin(k * p.x);
    design(i, 2) = std::cos(k * p.x);
    y[i] = p.y;
    variance[i] = std::max(p.y, 1.0);
  }
  Eigen::MatrixXd wd;
  Eigen::VectorXd wy;
  Eigen::Vector3d c;
  for (int pass = 0; pass < 3; ++pass) {
    const Eigen::VectorXd sw = variance.cwiseSqrt().cwiseInverse();
    wd = sw.asDiagonal() * design;
    wy = sw.cwiseProduct(y);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wd);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) throw FitError("degenerate design matrix (abscissa does not resolve the period)");
    c = qr.solve(wy);
    variance = (design * c).cwiseMax(1.0);
  }
  const Eigen::Matrix3d cov_lin = (wd.transpose() * wd).inverse();

  const double offset = c[0];
  const double amp = std::hypot(c[1], c[2]);
  if (!(amp > 0.0)) throw FitError("zero fitted amplitude; fringe phase undefined");
  const double phase = std::atan2(-c[2], c[1]);
  // d(O, A, dx) / d(c0, a, b)
  Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
  jac(0, 0) = 1.0;
  jac(1, 1) = c[1] / amp;
  jac(1, 2) = c[2] / amp;
  jac(2, 1) = c[2] / (amp * amp) / k;
  jac(2, 2) = -c[1] / (amp * amp) / k;
  const Eigen::Matrix3d cov = jac * cov_lin * jac.transpose();

  FitResult out;
  out.kind = "sinusoid";
  out.dof = static_cast<int>(n - 3);
  if (out.dof <= 0) throw FitError("no degrees of freedom left");
  out.chi_squared = (wy - wd * c).squaredNorm();
  out.covariance_names = {"O", "A", "delta_x3"};
  out.covariance = cov;
  const double shift = wrap_phase(phase) / k;
  out.parameters.push_back({"O", "counts", offset, std::sqrt(cov(0, 0)), {}, false});
  out.parameters.push_back({"A", "counts", amp, std::sqrt(cov(1, 1)), {}, false});
  out.parameters.push_back({"delta_x3", "m", shift, std::sqrt(cov(2, 2)), {}, false});
  const Eigen::Vector3d dv(-amp / (offset * offset), 1.0 / offset, 0.0);
  out.parameters.push_back({"visibility", "1", amp / offset, std::sqrt(dv.dot(cov * dv)), {}, true});

  const double span = std::abs(scan.points.back().x - scan.points.front().x);
  if (span < period) out.flag("scan spans less than one period");
  return out;
}

// ---------------------------------------------------------------------------------------------
// Susceptibility from a fringe-shift series.

/// Velocity-averaged fringe shift of a deflected beam, metres, continuous in voltage.
class ShiftModel {
public:
  /// weights[i] = w_i * A(v_i): quadrature weight times the signed field-free amplitude, sign
  /// normalised so that the weights sum to a positive number.
  ShiftModel(std::vector<double> nodes, std::vector<double> weights, double mass_amu, double combined_constant,
             double period)
      : nodes_(std::move(nodes)), weights_(std::move(weights)), mass_(mass_amu), constant_(combined_constant),
        period_(period) {}

  /// Phase of sum_i weights_i exp(i theta_i), on the branch nearest the weighted mean phase.
  double phase(double chi_a3, double voltage) const {
    std::complex<double> h{0.0, 0.0};
    double mean = 0.0, total = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const double theta =
          2.0 * std::numbers::pi * fringe_shift(chi_a3, mass_, voltage, nodes_[i], constant_) / period_;
      h += std::polar(1.0, theta) * weights_[i];
      mean += std::abs(weights_[i]) * theta;
      total += std::abs(weights_[i]);
    }
    mean /= total;
    return mean + std::remainder(std::arg(h) - mean, 2.0 * std::numbers::pi);
  }

  double shift(double chi_a3, double voltage) const {
    return phase(chi_a3, voltage) * period_ / (2.0 * std::numbers::pi);
  }

  /// Dephasing-reduced visibility factor |H| / sum(weights).
  double contrast(double chi_a3, double voltage) const {
    std::complex<double> h{0.0, 0.0};
    double total = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      h += std::polar(1.0, 2.0 * std::numbers::pi * fringe_shift(chi_a3, mass_, voltage, nodes_[i], constant_) /
                               period_) *
           weights_[i];
      total += weights_[i];
    }
    return std::abs(h) / total;
  }

private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  double mass_;
  double constant_;
  double period_;
};

struct VisibilityWeighting {
  InterferometerSpec interferometer;
  MoleculeSpec molecule;  // alpha_opt and mass enter V(v)
};

inline ShiftModel make_shift_model(const VelocityQuadrature& quadrature, double mass_amu, double combined_constant,
                                   double period, const std::optional<VisibilityWeighting>& weighting) {
  quadrature.validate();
  std::vector<double> w = quadrature.weights;
  if (weighting) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] *= fringe_amplitude(weighting->interferometer, weighting->molecule, quadrature.nodes[i], Regime::quantum);
    }
    double total = 0.0;
    for (double x : w) total += x;
    if (total == 0.0) throw ConfigError("visibility weighting vanishes for every velocity node");
    if (total < 0.0) {
      for (double& x : w) x = -x;
    }
  }
  return {quadrature.nodes, std::move(w), mass_amu, combined_constant, period};
}

struct SusceptibilityFitOptions {
  double period = 266e-9;  // m
  // V(v) weighting of the velocity average; plain number-density average when absent.
  std::optional<VisibilityWeighting> weighting;
  // Systematic perturbations (each refit at +delta and -delta).
  double field_homogeneity = 0.01;  // relative, on K
  double v_mean_uncertainty = 0.0;  // m/s
  double v_fwhm_uncertainty = 0.0;  // m/s
  std::size_t perturbation_nodes = 0;  // 0: same count as the supplied quadrature (min 3)
};

/// Unwraps a shift series in place, anchored at the smallest |U|, assuming adjacent points differ
/// by less than d/2.
inline void unwrap_shift_series(std::vector<ScanPoint>& pts, double period) {
  if (pts.empty()) return;
  std::size_t anchor = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (std::abs(pts[i].x) < std::abs(pts[anchor].x)) anchor = i;
  }
  const auto fix = [&](std::size_t i, std::size_t ref) {
    pts[i].y = pts[ref].y + std::remainder(pts[i].y - pts[ref].y, period);
  };
  for (std::size_t i = anchor + 1; i < pts.size(); ++i) fix(i, i - 1);
  for (std::size_t i = anchor; i-- > 0;) fix(i, i + 1);
}

namespace detail {

struct ChiFit {
  double chi;
  double err;
  double chi_squared;
  int iterations;
  bool converged;
};

inline ChiFit fit_chi(const std::vector<ScanPoint>& pts, const ShiftModel& model) {
  // Start from the linearised (small-dispersion) slope.
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    const double s = model.shift(1.0, p.x);
    const double w = 1.0 / (p.error * p.error);
    sxx += w * s * s;
    sxy += w * s * p.y;
  }
  if (!(sxx > 0.0)) throw FitError("all voltages are zero; susceptibility is unconstrained");
  Eigen::VectorXd x0(1);
  x0[0] = sxy / sxx;
  const auto residuals = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] = (pts[i].y - model.shift(x[0], pts[i].x)) / pts[i].error;
    }
    return r;
  };
  const auto lm = levenberg_marquardt(residuals, x0);
  return {lm.parameters[0], std::sqrt(lm.covariance(0, 0)), lm.chi_squared, lm.iterations, lm.converged};
}

inline VelocityQuadrature perturbed_quadrature(BeamSpec beam, double dv, double dfwhm, std::size_t nodes) {
  beam.v_mean += dv;
  beam.v_fwhm += dfwhm;
  return velocity_quadrature(beam, nodes);
}

}  // namespace detail

/// Single-parameter weighted least squares of the velocity-averaged shift model to measured
/// shifts. Systematic components: calibration constant, field homogeneity, beam distribution.
inline FitResult fit_susceptibility(const ScanData& series, const BeamSpec& beam, double mass_amu,
                                    const CalibratedDeflector& calibration, const VelocityQuadrature& quadrature,
                                    const SusceptibilityFitOptions& options = {}) {
  if (series.kind != AbscissaKind::voltage) throw FitError("susceptibility fit needs a voltage series");
  if (!(calibration.constant > 0.0)) throw ConfigError("missing deflector calibration");
  if (series.size() < 3) throw FitError("susceptibility fit needs at least 3 voltages");
  for (const auto& p : series.points) {
    if (!(p.error > 0.0)) throw FitError("every shift needs a positive uncertainty");
  }
  series.validate();

  auto pts = series.points;
  unwrap_shift_series(pts, options.period);

  const auto model_for = [&](const VelocityQuadrature& q, double constant) {
    return make_shift_model(q, mass_amu, constant, options.period, options.weighting);
  };
  const ShiftModel model = model_for(quadrature, calibration.constant);
  const auto nominal = detail::fit_chi(pts, model);

  FitResult out;
  out.kind = "susceptibility";
  out.dof = static_cast<int>(pts.size()) - 1;
  out.chi_squared = nominal.chi_squared;
  out.iterations = nominal.iterations;
  out.covariance_names = {"chi"};
  out.covariance = Eigen::MatrixXd::Constant(1, 1, nominal.err * nominal.err);
  if (!nominal.converged) out.status = FitStatus::failed;

  FitParameter chi{"chi", "A3", nominal.chi, nominal.err, {}, false};
  const auto half_spread = [&](const ShiftModel& plus, const ShiftModel& minus) {
    return 0.5 * std::abs(detail::fit_chi(pts, plus).chi - detail::fit_chi(pts, minus).chi);
  };
  if (calibration.std_error > 0.0) {
    const double g = calibration.constant, e = calibration.std_error;
    chi.syst.emplace_back("calibration", half_spread(model_for(quadrature, g + e), model_for(quadrature, g - e)));
  }
  if (options.field_homogeneity > 0.0) {
    const double g = calibration.constant, h = options.field_homogeneity;
    chi.syst.emplace_back("field_homogeneity",
                          half_spread(model_for(quadrature, g * (1 + h)), model_for(quadrature, g * (1 - h))));
  }
  const std::size_t nodes = options.perturbation_nodes > 0 ? options.perturbation_nodes
                                                           : std::max<std::size_t>(quadrature.size(), 3);
  if (options.v_mean_uncertainty > 0.0) {
    const double dv = options.v_mean_uncertainty;
    chi.syst.emplace_back("beam_v_mean",
                          half_spread(model_for(detail::perturbed_quadrature(beam, dv, 0, nodes), calibration.constant),
                                      model_for(detail::perturbed_quadrature(beam, -dv, 0, nodes), calibration.constant)));
  }
  if (options.v_fwhm_uncertainty > 0.0) {
    const double dw = options.v_fwhm_uncertainty;
    chi.syst.emplace_back("beam_v_fwhm",
                          half_spread(model_for(detail::perturbed_quadrature(beam, 0, dw, nodes), calibration.constant),
                                      model_for(detail::perturbed_quadrature(beam, 0, -dw, nodes), calibration.constant)));
  }
  out.parameters.push_back(chi);

  double worst = 0.0;
  for (const auto& p : pts) worst = std::max(worst, std::abs(p.y - model.shift(nominal.chi, p.x)));
  out.diagnostics.emplace_back("max_abs_residual_m", worst);
  if (worst >= options.period / 2.0) out.flag("phase unwrapping ambiguous: residual exceeds d/2");
  return out;
}

/// Two-stage pipeline helper: sinusoid-fit each raw scan and collect (U, dx3, err) rows.
inline ScanData shift_series_from_scans(const std::vector<std::pair<double, ScanData>>& scans, double period) {
  ScanData out;
  out.kind = AbscissaKind::voltage;
  for (const auto& [voltage, scan] : scans) {
    const auto fit = fit_sinusoid(scan, period);
    out.points.push_back({voltage, fit.value("delta_x3"), fit.stat_err("delta_x3")});
  }
  unwrap_shift_series(out.points, period);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Optical polarizability from a visibility-vs-power series.

struct OpticalFitOptions {
  bool include_absorption = false;   // free sigma_abs >= 0
  bool fit_open_fraction = false;    // free shared f1 = f3
  double power_rel_uncertainty = 0.1;
  std::optional<double> alpha_guess;  // A^3; coarse grid search when absent
  double v_mean_uncertainty = 0.0;
  double v_fwhm_uncertainty = 0.0;
  std::size_t perturbation_nodes = 0;
};

/// Velocity-averaged quantum visibility at each power.
inline std::vector<double> visibility_curve(InterferometerSpec spec, const MoleculeSpec& molecule,
                                            const VelocityQuadrature& quadrature, const std::vector<double>& powers) {
  std::vector<double> out;
  out.reserve(powers.size());
  for (double p : powers) {
    spec.g2.laser_power = p;
    out.push_back(velocity_averaged_observables(spec, molecule, quadrature, Regime::quantum).visibility);
  }
  return out;
}

namespace detail {

// Internal scaling of sigma_abs so all free parameters are O(1..100).
inline constexpr double sigma_unit_cm2 = 1e-18;

struct OpticalModel {
  InterferometerSpec spec;
  MoleculeSpec molecule;
  const VelocityQuadrature* quadrature;
  bool absorption;
  bool open_fraction;

  double visibility(const Eigen::VectorXd& x, double power) const {
    InterferometerSpec s = spec;
    MoleculeSpec m = molecule;
    s.g2.laser_power = power;
    m.alpha_opt_a3 = x[0];
    s.options.absorption = absorption;
    m.sigma_abs_cm2 = absorption ? x[1] * sigma_unit_cm2 : 0.0;
    if (open_fraction) {
      const double f = x[absorption ? 2 : 1];
      s.g1.open_fraction = s.g3.open_fraction = f;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < quadrature->size(); ++i) {
      acc += quadrature->weights[i] * fringe_amplitude(s, m, quadrature->nodes[i], Regime::quantum);
    }
    return std::abs(acc);
  }
};


inline LmResult fit_optical(const std::vector<ScanPoint>& pts, const OpticalModel& model, double power_scale,
                            std::optional<double> alpha_guess) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  const Eigen::Index np = 1 + (model.absorption ? 1 : 0) + (model.open_fraction ? 1 : 0);
  const auto residuals = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& p = pts[static_cast<std::size_t>(i)];
      r[i] = (p.y - model.visibility(x, p.x * power_scale)) / p.error;
    }
    return r;
  };
  Eigen::VectorXd x0(np);
  x0.setZero();
  if (model.open_fraction) x0[np - 1] = model.spec.g1.open_fraction;
  if (alpha_guess) {
    x0[0] = *alpha_guess;
  } else {
    double best = INFINITY;
    for (int i = 0; i <= 120; ++i) {
      Eigen::VectorXd trial = x0;
      trial[0] = std::pow(10.0, -0.5 + 3.5 * i / 120.0);
      const double c = residuals(trial).squaredNorm();
      if (c < best) {
        best = c;
        x0[0] = trial[0];
      }
    }
  }
  LmOptions opt;
  opt.lower_bounds = Eigen::VectorXd::Zero(np);
  if (model.open_fraction) opt.lower_bounds[np - 1] = 1e-6;
  return levenberg_marquardt(residuals, x0, opt);
}

}  // namespace detail

/// Least squares of the velocity-averaged quantum V(P) to a measured series, alpha_opt free and
/// optionally sigma_abs (bounded at 0) and a shared open fraction. The laser-power systematic is the
/// half spread of refits with every power scaled by (1 - u) and (1 + u).
inline FitResult fit_optical_polarizability(const ScanData& series, const BeamSpec& beam, const InterferometerSpec& spec,
                                            const MoleculeSpec& molecule, const VelocityQuadrature& quadrature,
                                            const OpticalFitOptions& options = {}) {
  if (series.kind != AbscissaKind::power) throw FitError("optical polarizability fit needs a power series");
  if (!series.points.empty() && std::all_of(series.points.begin(), series.points.end(),
                                            [&](const ScanPoint& p) { return p.x == series.points.front().x; })) {
    throw FitError("all laser powers are equal");
  }
  series.validate();
  if (series.size() < 5) throw FitError("optical polarizability fit needs at least 5 power points");
  for (const auto& p : series.points) {
    if (!(p.error > 0.0)) throw FitError("every visibility needs a positive uncertainty");
    if (!(p.x >= 0.0)) throw FitError("laser power must be non-negative");
  }
  spec.validate();
  quadrature.validate();

  detail::OpticalModel model{spec, molecule, &quadrature, options.include_absorption, options.fit_open_fraction};
  const auto& pts = series.points;
  const auto nominal = detail::fit_optical(pts, model, 1.0, options.alpha_guess);
  const auto np = static_cast<std::size_t>(nominal.parameters.size());

  FitResult out;
  out.kind = "optical_polarizability";
  out.dof = static_cast<int>(pts.size()) - static_cast<int>(np);
  if (out.dof <= 0) throw FitError("no degrees of freedom left");
  out.chi_squared = nominal.chi_squared;
  out.iterations = nominal.iterations;
  out.covariance = nominal.covariance;
  if (!nominal.converged) out.status = FitStatus::failed;

  std::vector<std::pair<std::string, std::string>> names{{"alpha_opt", "A3"}};
  std::vector<double> unit_scale{1.0};
  if (options.include_absorption) {
    names.emplace_back("sigma_abs", "cm2");
    unit_scale.push_back(detail::sigma_unit_cm2);
  }
  if (options.fit_open_fraction) {
    names.emplace_back("open_fraction", "1");
    unit_scale.push_back(1.0);
  }
  for (std::size_t i = 0; i < np; ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    out.covariance_names.push_back(names[i].first);
    out.parameters.push_back({names[i].first, names[i].second, nominal.parameters[j] * unit_scale[i],
                              std::sqrt(nominal.covariance(j, j)) * unit_scale[i], {}, false});
  }
  for (Eigen::Index r = 0; r < out.covariance.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.covariance.cols(); ++c) {
      out.covariance(r, c) *= unit_scale[static_cast<std::size_t>(r)] * unit_scale[static_cast<std::size_t>(c)];
    }
  }

  const auto guess = std::optional<double>(nominal.parameters[0]);
  const auto add_syst = [&](const std::string& name, const LmResult& plus, const LmResult& minus) {
    for (std::size_t i = 0; i < np; ++i) {
      const auto j = static_cast<Eigen::Index>(i);
      out.parameters[i].syst.emplace_back(name,
                                          0.5 * std::abs(plus.parameters[j] - minus.parameters[j]) * unit_scale[i]);
    }
  };
  if (options.power_rel_uncertainty > 0.0) {
    const double u = options.power_rel_uncertainty;
    const auto lo = detail::fit_optical(pts, model, 1.0 - u, guess);
    const auto hi = detail::fit_optical(pts, model, 1.0 + u, guess);
    add_syst("laser_power", hi, lo);
    out.diagnostics.emplace_back("alpha_opt_at_power_scale_minus", lo.parameters[0]);
    out.diagnostics.emplace_back("alpha_opt_at_power_scale_plus", hi.parameters[0]);
  }
  const std::size_t nodes = options.perturbation_nodes > 0 ? options.perturbation_nodes
                                                           : std::max<std::size_t>(quadrature.size(), 3);
  const auto beam_syst = [&](const std::string& name, double dv, double dw) {
    const auto qp = detail::perturbed_quadrature(beam, dv, dw, nodes);
    const auto qm = detail::perturbed_quadrature(beam, -dv, -dw, nodes);
    auto mp = model, mm = model;
    mp.quadrature = &qp;
    mm.quadrature = &qm;
    add_syst(name, detail::fit_optical(pts, mp, 1.0, guess), detail::fit_optical(pts, mm, 1.0, guess));
  };
  if (options.v_mean_uncertainty > 0.0) beam_syst("beam_v_mean", options.v_mean_uncertainty, 0.0);
  if (options.v_fwhm_uncertainty > 0.0) beam_syst("beam_v_fwhm", 0.0, options.v_fwhm_uncertainty);

  for (std::size_t i = 0; i < np; ++i) {
    if (nominal.at_lower_bound[i]) out.flag(names[i].first + " pinned at its lower bound");
  }
  return out;
}

// ---------------------------------------------------------------------------------------------

/// Serialised FitResult: parameter name -> {value, unit, stat_err, syst_err{...}, syst_total,
/// derived, correlations{...}} plus fit-level fields.
inline nlohmann::ordered_json to_json(const FitResult& fit) {
  nlohmann::ordered_json j;
  j["fit"] = fit.kind;
  j["status"] = std::string(to_string(fit.status));
  j["flags"] = fit.flags;
  auto& params = j["parameters"];
  params = nlohmann::ordered_json::object();
  const auto index_of = [&](const std::string& name) -> Eigen::Index {
    for (std::size_t i = 0; i < fit.covariance_names.size(); ++i) {
      if (fit.covariance_names[i] == name) return static_cast<Eigen::Index>(i);
    }
    return -1;
  };
  for (const auto& p : fit.parameters) {
    nlohmann::ordered_json e;
    e["value"] = p.value;
    e["unit"] = p.unit;
    e["stat_err"] = p.stat_err;
    e["syst_err"] = nlohmann::ordered_json::object();
    for (const auto& [name, v] : p.syst) e["syst_err"][name] = v;
    e["syst_total"] = p.syst_total();
    e["derived"] = p.derived;
    e["correlations"] = nlohmann::ordered_json::object();
    const auto i = index_of(p.name);
    if (i >= 0) {
      for (std::size_t k = 0; k < fit.covariance_names.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        if (kk == i) continue;
        const double denom = std::sqrt(fit.covariance(i, i) * fit.covariance(kk, kk));
        e["correlations"][fit.covariance_names[k]] = denom > 0.0 ? fit.covariance(i, kk) / denom : 0.0;
      }
    }
    params[p.name] = e;
  }
  j["chi_squared"] = fit.chi_squared;
  j["dof"] = fit.dof;
  j["iterations"] = fit.iterations;
  auto& cov = j["covariance"];
  cov["parameters"] = fit.covariance_names;
  cov["matrix"] = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) row.push_back(fit.covariance(r, c));
    cov["matrix"].push_back(row);
  }
  j["diagnostics"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : fit.diagnostics) j["diagnostics"][k] = v;
  return j;
}

}  // namespace kdtl

#endif  // KDTL_FIT_HPP
