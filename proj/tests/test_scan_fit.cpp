#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "scenarios.hpp"

namespace {

using namespace kdtl;
namespace sc = scenario;

struct Pulls {
  double mean = 0.0;
  double std = 0.0;
};

Pulls summarize(const std::vector<double>& pulls) {
  const double n = static_cast<double>(pulls.size());
  const double mean = std::accumulate(pulls.begin(), pulls.end(), 0.0) / n;
  double ss = 0.0;
  for (double p : pulls) ss += (p - mean) * (p - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

FringeObservables truth(double vis, double shift) { return {vis, 2.0 * std::numbers::pi * shift / sc::period, 0.0}; }

// ---------------------------------------------------------------------------------------------
// Position scans

TEST(SynthesizePositionScan, DeterministicForSeed) {
  const auto a = synthesize_position_scan(truth(0.3, 40e-9), sc::position_request(), 42);
  const auto b = synthesize_position_scan(truth(0.3, 40e-9), sc::position_request(), 42);
  EXPECT_EQ(write_measurement_series(a), write_measurement_series(b));
  const auto c = synthesize_position_scan(truth(0.3, 40e-9), sc::position_request(), 43);
  EXPECT_NE(write_measurement_series(a), write_measurement_series(c));
}

TEST(SynthesizePositionScan, FlatSignalAtZeroVisibility) {
  const auto req = sc::position_request();
  const auto s = synthesize_position_scan(truth(0.0, 0.0), req, 5);
  double mean = 0.0;
  for (const auto& p : s.points) mean += p.y / static_cast<double>(s.size());
  EXPECT_NEAR(mean, 100.0, 3.0 * std::sqrt(100.0 / static_cast<double>(s.size())));
}

TEST(SynthesizePositionScan, DomainErrors) {
  auto req = sc::position_request();
  EXPECT_THROW(synthesize_position_scan(truth(1.2, 0.0), req, 1), DomainError);
  req.n_points = 5;
  EXPECT_THROW(synthesize_position_scan(truth(0.3, 0.0), req, 1), DomainError);
  req = sc::position_request();
  req.counts_per_point = 0.0;
  EXPECT_THROW(synthesize_position_scan(truth(0.3, 0.0), req, 1), DomainError);
}

TEST(FitSinusoid, NoiselessRecovery) {
  for (double shift : {-120e-9, -3e-9, 0.0, 40e-9, 130e-9}) {
    const auto scan = expected_position_scan(truth(0.3, shift), sc::position_request());
    const auto fit = fit_sinusoid(scan, sc::period);
    EXPECT_NEAR(fit.value("O") / 100.0, 1.0, 1e-10);
    EXPECT_NEAR(fit.value("A") / 30.0, 1.0, 1e-10);
    EXPECT_NEAR(fit.value("delta_x3"), shift, 1e-10 * sc::period);
    EXPECT_NEAR(fit.value("visibility"), 0.3, 1e-10);
    EXPECT_EQ(fit.status, FitStatus::converged);
    EXPECT_EQ(fit.dof, 37);
  }
}

TEST(FitSinusoid, ShiftIsReportedModuloPeriod) {
  const auto a = fit_sinusoid(expected_position_scan(truth(0.3, 40e-9), sc::position_request()), sc::period);
  const auto b = fit_sinusoid(expected_position_scan(truth(0.3, 40e-9 + sc::period), sc::position_request()), sc::period);
  EXPECT_NEAR(a.value("delta_x3"), b.value("delta_x3"), 1e-12 * sc::period);
  const auto c = fit_sinusoid(expected_position_scan(truth(0.3, 0.5 * sc::period), sc::position_request()), sc::period);
  EXPECT_GT(c.value("delta_x3"), 0.0);
  EXPECT_LE(c.value("delta_x3"), 0.5 * sc::period * (1 + 1e-12));
}

TEST(FitSinusoid, VisibilityWithinThreeSigmaInNearlyAllSeeds) {
  auto req = sc::position_request();
  req.step = 2.0 * sc::period / 40.0;
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto fit = fit_sinusoid(synthesize_position_scan(truth(0.3, 40e-9), req, seed), sc::period);
    if (std::abs(fit.value("visibility") - 0.3) < 3.0 * fit.stat_err("visibility")) ++inside;
  }
  EXPECT_GE(inside, 99);
}

TEST(FitSinusoid, PullsAreCalibrated) {
  std::vector<double> shift_pulls, vis_pulls;
  for (std::uint64_t seed = 1000; seed < 1100; ++seed) {
    const auto fit = fit_sinusoid(synthesize_position_scan(truth(0.3, 40e-9), sc::position_request(), seed), sc::period);
    shift_pulls.push_back((fit.value("delta_x3") - 40e-9) / fit.stat_err("delta_x3"));
    vis_pulls.push_back((fit.value("visibility") - 0.3) / fit.stat_err("visibility"));
  }
  for (const auto& pulls : {shift_pulls, vis_pulls}) {
    const auto s = summarize(pulls);
    EXPECT_LT(std::abs(s.mean), 0.15);
    EXPECT_GE(s.std, 0.8);
    EXPECT_LE(s.std, 1.2);
  }
}

TEST(FitSinusoid, ShortScanIsFlaggedAndDegenerateDesignFails) {
  auto req = sc::position_request();
  req.n_points = 8;
  req.step = 20e-9;
  const auto fit = fit_sinusoid(expected_position_scan(truth(0.3, 0.0), req), sc::period);
  EXPECT_EQ(fit.status, FitStatus::flagged);
  ASSERT_FALSE(fit.flags.empty());

  req = sc::position_request();
  req.step = sc::period;
  EXPECT_THROW(fit_sinusoid(expected_position_scan(truth(0.3, 10e-9), req), sc::period), FitError);
}

// ---------------------------------------------------------------------------------------------
// Susceptibility

class SusceptibilityFit : public ::testing::Test {
protected:
  const VelocityQuadrature q = velocity_quadrature(sc::deflection_beam(), 64);
  const double constant = sc::deflector().combined_constant();
  const ShiftModel model = sc::shift_model(q, constant);
  SusceptibilityFitOptions options() const {
    SusceptibilityFitOptions o;
    o.weighting = VisibilityWeighting{sc::interferometer(), sc::azobenzene()};
    return o;
  }
  FitResult fit(const ScanData& s, SusceptibilityFitOptions o, double rel_cal = 0.0) const {
    return fit_susceptibility(s, sc::deflection_beam(), sc::azobenzene().mass_amu, {constant, rel_cal * constant}, q, o);
  }
};

TEST_F(SusceptibilityFit, NoiselessRecovery) {
  const auto f = fit(sc::shift_series(model, 95.0, 0.0, 0), options());
  EXPECT_NEAR(f.value("chi") / 95.0, 1.0, 1e-9);
  EXPECT_EQ(f.status, FitStatus::converged);
  EXPECT_EQ(f.dof, 5);
}

TEST_F(SusceptibilityFit, CoverageAndPulls) {
  int covered = 0;
  std::vector<double> pulls;
  double mean_err = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto f = fit(sc::shift_series(model, 95.0, sc::shift_noise, seed), options());
    const double pull = (f.value("chi") - 95.0) / f.stat_err("chi");
    pulls.push_back(pull);
    covered += std::abs(pull) < 2.0;
    mean_err += f.stat_err("chi") / 100.0;
  }
  EXPECT_GE(covered, 93);
  const auto s = summarize(pulls);
  EXPECT_LT(std::abs(s.mean), 0.15);
  EXPECT_GE(s.std, 0.8);
  EXPECT_LE(s.std, 1.2);
  EXPECT_GT(mean_err, 1.5);
  EXPECT_LT(mean_err, 6.0);
}

TEST_F(SusceptibilityFit, PairedPlantsDifferByPlantedAmount) {
  const auto a = fit(sc::shift_series(model, 95.0, sc::shift_noise, 7), options());
  const auto b = fit(sc::shift_series(model, 92.8, sc::shift_noise, 7), options());
  // Same noise realisation: the difference carries only the model's response to chi.
  EXPECT_NEAR(a.value("chi") - b.value("chi"), 2.2, 0.05);
}

TEST_F(SusceptibilityFit, MonochromaticModelIsBiasedHigh) {
  const auto data = sc::shift_series(model, 95.0, 0.0, 0);
  auto o = options();
  const auto mono = fit_susceptibility(data, sc::deflection_beam(), sc::azobenzene().mass_amu, {constant, 0.0},
                                       single_node_quadrature(146.0), o);
  EXPECT_GT(mono.value("chi"), 95.0 * 1.01);
  EXPECT_NEAR(fit(data, o).value("chi"), 95.0, 1e-6);
}

TEST_F(SusceptibilityFit, SystematicsComposeAsRootSumSquare) {
  auto o = options();
  o.v_mean_uncertainty = 2.0;
  o.v_fwhm_uncertainty = 3.0;
  const auto f = fit(sc::shift_series(model, 95.0, sc::shift_noise, 3), o, 0.05);
  const auto& chi = f.at("chi");
  ASSERT_EQ(chi.syst.size(), 4u);
  double ss = 0.0;
  for (const auto& [name, v] : chi.syst) {
    EXPECT_GT(v, 0.0) << name;
    ss += v * v;
  }
  EXPECT_NEAR(chi.syst_total(), std::sqrt(ss), 1e-12);
  // Shift is linear in the constant, so the calibration component is ~5% of chi.
  EXPECT_NEAR(chi.syst[0].second / f.value("chi"), 0.05, 0.003);
  EXPECT_NEAR(chi.syst[1].second / f.value("chi"), 0.01, 0.001);

  // Each component is reproducible by a single-perturbation refit.
  const auto data = sc::shift_series(model, 95.0, sc::shift_noise, 3);
  SusceptibilityFitOptions bare = options();
  bare.field_homogeneity = 0.0;
  const double plus = fit_susceptibility(data, sc::deflection_beam(), sc::azobenzene().mass_amu,
                                         {constant * 1.05, 0.0}, q, bare).value("chi");
  const double minus = fit_susceptibility(data, sc::deflection_beam(), sc::azobenzene().mass_amu,
                                          {constant * 0.95, 0.0}, q, bare).value("chi");
  EXPECT_NEAR(chi.syst[0].second, 0.5 * std::abs(plus - minus), 1e-9);
}

TEST_F(SusceptibilityFit, Errors) {
  const auto data = sc::shift_series(model, 95.0, sc::shift_noise, 3);
  EXPECT_THROW(fit_susceptibility(data, sc::deflection_beam(), 1034.4, {0.0, 0.0}, q, options()), ConfigError);
  auto two = data;
  two.points.resize(2);
  EXPECT_THROW(fit(two, options()), FitError);
  auto wrong = data;
  wrong.kind = AbscissaKind::power;
  EXPECT_THROW(fit(wrong, options()), FitError);
}

TEST_F(SusceptibilityFit, TwoStagePipelineFromRawScans) {
  // Raw position scans at each voltage -> sinusoid fits -> shift series -> chi.
  std::vector<std::pair<double, ScanData>> scans;
  auto req = sc::position_request();
  req.counts_per_point = 4000.0;
  for (double u : sc::voltages()) {
    const double shift = model.shift(95.0, u);
    scans.emplace_back(u, synthesize_position_scan(truth(0.3, shift), req, static_cast<std::uint64_t>(u)));
  }
  const auto series = shift_series_from_scans(scans, sc::period);
  const auto f = fit(series, options());
  EXPECT_NEAR(f.value("chi"), 95.0, 3.0 * f.stat_err("chi"));
}

// ---------------------------------------------------------------------------------------------
// Optical polarizability

class OpticalFit : public ::testing::Test {
protected:
  const VelocityQuadrature q = velocity_quadrature(sc::diffraction_beam(), 64);
  std::vector<double> curve(double alpha, double sigma = 0.0) const {
    auto m = sc::azobenzene();
    m.alpha_opt_a3 = alpha;
    m.sigma_abs_cm2 = sigma;
    auto spec = sc::interferometer();
    spec.options.absorption = sigma > 0.0;
    return visibility_curve(spec, m, q, sc::powers());
  }
  FitResult fit(const ScanData& s, OpticalFitOptions o = {}) const {
    return fit_optical_polarizability(s, sc::diffraction_beam(), sc::interferometer(), sc::azobenzene(), q, o);
  }
};

TEST_F(OpticalFit, CurveRisesThenFalls) {
  const auto v = curve(61.0);
  const auto peak = std::max_element(v.begin(), v.end()) - v.begin();
  for (long i = 1; i <= peak; ++i) EXPECT_GT(v[i], v[i - 1]);
  EXPECT_GT(peak, 2);
  EXPECT_LT(peak, static_cast<long>(v.size()) - 1);
}

TEST_F(OpticalFit, NoiselessRecovery) {
  const auto f = fit(sc::visibility_series(curve(61.0), 0.0, 0));
  EXPECT_NEAR(f.value("alpha_opt") / 61.0, 1.0, 1e-9);
  OpticalFitOptions o;
  o.include_absorption = true;
  const auto g = fit(sc::visibility_series(curve(61.0), 0.0, 0), o);
  EXPECT_NEAR(g.value("alpha_opt") / 61.0, 1.0, 1e-6);
  EXPECT_LE(g.value("sigma_abs") - 2.0 * g.stat_err("sigma_abs"), 0.0);
}

TEST_F(OpticalFit, PowerMiscalibrationMovesAlphaByTenPercent) {
  const auto data = sc::visibility_series(curve(61.0), 0.0, 0);
  // Data taken at (1 +- 0.1) P while the nominal P is recorded.
  for (double scale : {0.9, 1.1}) {
    std::vector<double> p;
    for (double x : sc::powers()) p.push_back(x * scale);
    auto spec = sc::interferometer();
    const auto v = visibility_curve(spec, sc::azobenzene(), q, p);
    const auto f = fit(sc::visibility_series(v, 0.0, 0));
    EXPECT_NEAR(f.value("alpha_opt") / 61.0, scale, 1e-6);
  }
  const auto f = fit(data);
  const auto& a = f.at("alpha_opt");
  ASSERT_EQ(a.syst.size(), 1u);
  EXPECT_NEAR(a.syst[0].second / 61.0, 0.10, 0.01);
  EXPECT_NEAR(*f.diagnostic("alpha_opt_at_power_scale_plus") / 61.0, 1.0 / 1.1, 1e-6);
  EXPECT_NEAR(*f.diagnostic("alpha_opt_at_power_scale_minus") / 61.0, 1.0 / 0.9, 1e-6);
}

TEST_F(OpticalFit, PullsAreCalibrated) {
  std::vector<double> pulls;
  const auto truth = curve(61.0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    OpticalFitOptions o;
    o.power_rel_uncertainty = 0.0;
    o.alpha_guess = 61.0;
    const auto f = fit(sc::visibility_series(truth, sc::visibility_noise, seed), o);
    pulls.push_back((f.value("alpha_opt") - 61.0) / f.stat_err("alpha_opt"));
  }
  const auto s = summarize(pulls);
  EXPECT_LT(std::abs(s.mean), 0.15);
  EXPECT_GE(s.std, 0.8);
  EXPECT_LE(s.std, 1.2);
}

TEST_F(OpticalFit, AbsorptionBoundIsReportedNotHidden) {
  // Data with an upward fluctuation pushes sigma_abs towards negative values; the bound is flagged.
  auto data = sc::visibility_series(curve(61.0), 0.0, 0);
  for (std::size_t i = 6; i < data.points.size(); ++i) data.points[i].y *= 1.08;
  OpticalFitOptions o;
  o.include_absorption = true;
  o.power_rel_uncertainty = 0.0;
  const auto f = fit(data, o);
  EXPECT_EQ(f.value("sigma_abs"), 0.0);
  EXPECT_EQ(f.status, FitStatus::flagged);
}

TEST_F(OpticalFit, Errors) {
  auto data = sc::visibility_series(curve(61.0), 0.0, 0);
  data.points.resize(4);
  EXPECT_THROW(fit(data), FitError);
  ScanData flat;
  flat.kind = AbscissaKind::power;
  for (int i = 0; i < 6; ++i) flat.points.push_back({5.0, 0.2, 0.02});
  EXPECT_THROW(fit(flat), FitError);
}

// ---------------------------------------------------------------------------------------------
// Ingestion and serialisation

TEST(MeasurementIngest, PositionScanFile) {
  const auto s = load_measurement_series(std::string(KDTL_DATA_DIR) + "/fixtures/position_scan_v03.csv");
  EXPECT_EQ(s.kind, AbscissaKind::position_x3);
  EXPECT_EQ(s.size(), 40u);
  EXPECT_NEAR(s.points[1].x, 30e-9, 1e-15);
}

TEST(MeasurementIngest, HeaderSelectsKindAndUnits) {
  const auto v = ingest_measurement_series("# c\nvoltage_V,shift_nm,err_nm\n1000,2.5,0.5\n2000,10,0.5\n");
  EXPECT_EQ(v.kind, AbscissaKind::voltage);
  EXPECT_DOUBLE_EQ(v.points[1].y, 10e-9);
  EXPECT_DOUBLE_EQ(v.points[0].error, 0.5e-9);
  const auto p = ingest_measurement_series("power_W,visibility,err\n1,0.1,0.02\n");
  EXPECT_EQ(p.kind, AbscissaKind::power);
}

TEST(MeasurementIngest, Errors) {
  EXPECT_THROW(ingest_measurement_series("volts,shift\n1,2\n"), FormatError);
  EXPECT_THROW(ingest_measurement_series(""), FormatError);
  try {
    ingest_measurement_series("x3_nm,counts\n0,10\n30,11\n30,12\n");
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find("row 4"), std::string::npos);
  }
  EXPECT_THROW(ingest_measurement_series("x3_nm,counts\n0,10\n30,11\n20,12\n"), IngestionError);
  EXPECT_THROW(ingest_measurement_series("x3_nm,counts\n0,-1\n"), IngestionError);
  EXPECT_THROW(ingest_measurement_series("power_W,visibility,err\n1,0.1,0\n"), IngestionError);
}

TEST(MeasurementIngest, RoundTripThroughText) {
  const auto s = synthesize_position_scan(truth(0.3, 40e-9), sc::position_request(), 9);
  const auto back = ingest_measurement_series(write_measurement_series(s));
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(back.points[i].x, s.points[i].x, 1e-18);
    EXPECT_EQ(back.points[i].y, s.points[i].y);
  }
}

TEST(FitSerialise, JsonSchema) {
  const auto fit = fit_sinusoid(synthesize_position_scan(truth(0.3, 40e-9), sc::position_request(), 2), sc::period);
  const auto j = to_json(fit);
  EXPECT_EQ(j["fit"], "sinusoid");
  EXPECT_EQ(j["status"], "converged");
  EXPECT_EQ(j["parameters"]["delta_x3"]["unit"], "m");
  EXPECT_TRUE(j["parameters"]["O"]["correlations"].contains("A"));
  EXPECT_TRUE(j["parameters"]["visibility"]["derived"].get<bool>());
  EXPECT_EQ(j["covariance"]["matrix"].size(), 3u);
  const auto& cov = fit.covariance;
  EXPECT_NEAR((cov - cov.transpose()).norm(), 0.0, 1e-12 * cov.norm());
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).eigenvalues().minCoeff(), -1e-12 * cov.norm());
}

}  // namespace
