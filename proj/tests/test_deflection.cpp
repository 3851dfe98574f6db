#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "kdtl/beam.hpp"
#include "kdtl/deflection.hpp"
#include "kdtl/elements.hpp"
#include "kdtl/fit.hpp"
#include "oracles.hpp"

namespace {

using namespace kdtl;

const DeflectorSpec deflector{1.8e6, 0.05, 0.1325};

double azo_mass() { return parse_formula("C30H12F30N2O4"); }

TEST(FringeShift, QuadraticInVoltage) {
  const double m = azo_mass();
  for (double u : {500.0, 1000.0, 3700.0, 6000.0}) {
    const double s1 = fringe_shift(95.0, m, u, 146.0, deflector);
    const double s2 = fringe_shift(95.0, m, 2.0 * u, 146.0, deflector);
    EXPECT_NEAR(std::log(s2 / s1) / std::log(2.0), 2.0, 1e-12);
  }
  EXPECT_EQ(fringe_shift(95.0, m, 0.0, 146.0, deflector), 0.0);
  EXPECT_EQ(fringe_shift(95.0, m, -3000.0, 146.0, deflector), fringe_shift(95.0, m, 3000.0, 146.0, deflector));
}

TEST(FringeShift, ScalingInChiMassVelocity) {
  const double m = azo_mass();
  const double s = fringe_shift(95.0, m, 4000.0, 146.0, deflector);
  EXPECT_NEAR(fringe_shift(190.0, m, 4000.0, 146.0, deflector) / s, 2.0, 1e-14);
  EXPECT_NEAR(fringe_shift(95.0, 2.0 * m, 4000.0, 146.0, deflector) / s, 0.5, 1e-14);
  EXPECT_NEAR(fringe_shift(95.0, m, 4000.0, 73.0, deflector) / s, 4.0, 1e-14);
  EXPECT_THROW(fringe_shift(95.0, m, 4000.0, 0.0, deflector), DomainError);
  EXPECT_THROW(fringe_shift(95.0, 0.0, 4000.0, 146.0, deflector), DomainError);
}

TEST(FringeShift, AgreesWithTrajectoryIntegration) {
  const double m = azo_mass();
  for (double v : {100.0, 146.0, 210.0}) {
    for (double u : {1000.0, 6000.0}) {
      const double ref = oracle::deflection_trajectory(95.0, m, u, v, deflector.geometry_K, deflector.effective_length,
                                                       deflector.distance_to_g3);
      EXPECT_NEAR(fringe_shift(95.0, m, u, v, deflector) / ref, 1.0, 1e-9);
    }
  }
}

TEST(FringeShift, DefaultGeometryGivesHundredNanometreScale) {
  const double s = fringe_shift(95.0, azo_mass(), 6000.0, 146.0, deflector);
  EXPECT_GT(s, 100e-9);
  EXPECT_LT(s, 200e-9);
}

TEST(DeflectorGeometry, MustSitBetweenG1AndG2) {
  InterferometerSpec spec{{266e-9, 0.28}, {532e-9, 1.0, 900e-6, 20e-6}, {266e-9, 0.28}, 0.105, {}};
  EXPECT_NO_THROW(check_deflector_geometry(deflector, spec));
  EXPECT_THROW(check_deflector_geometry({1.8e6, 0.05, 0.05}, spec), ConfigError);
  EXPECT_THROW(check_deflector_geometry({1.8e6, 0.2, 0.15}, spec), ConfigError);
  EXPECT_THROW(check_deflector_geometry({-1.0, 0.05, 0.13}, spec), ConfigError);
}

TEST(DeflectionPhase, ShiftOfOnePeriodIsTwoPi) {
  const double m = azo_mass();
  const double period = 266e-9;
  // Voltage that moves a 146 m/s molecule by exactly d, then d/2.
  const double per_u2 = fringe_shift(95.0, m, 1.0, 146.0, deflector);
  const double u_full = std::sqrt(period / per_u2);
  const auto full = deflection_phase_profile(95.0, m, u_full, deflector, period);
  EXPECT_NEAR(full(146.0), 2.0 * oracle::pi, 1e-10);
  const auto half = deflection_phase_profile(95.0, m, u_full / std::sqrt(2.0), deflector, period);
  EXPECT_NEAR(half(146.0), oracle::pi, 1e-10);
}

TEST(VelocityAveragedShift, JensenExcessOverMeanVelocity) {
  const double m = azo_mass();
  const auto q = velocity_quadrature({146.0, 31.0, 470.0}, 64);
  const auto model = make_shift_model(q, m, deflector.combined_constant(), 266e-9, std::nullopt);
  for (double u : {1000.0, 2000.0, 3000.0}) {
    const double mono = fringe_shift(95.0, m, u, 146.0, deflector);
    EXPECT_GT(model.shift(95.0, u), mono) << u;
  }
}

TEST(VelocityAveragedShift, VisibilityDropsWithVoltage) {
  const double m = azo_mass();
  const auto q = velocity_quadrature({146.0, 31.0, 470.0}, 64);
  const auto model = make_shift_model(q, m, deflector.combined_constant(), 266e-9, std::nullopt);
  EXPECT_NEAR(model.contrast(95.0, 0.0), 1.0, 1e-12);
  EXPECT_LT(model.contrast(95.0, 6000.0), model.contrast(95.0, 1000.0));
  EXPECT_LT(model.contrast(95.0, 1000.0), 1.0);
}

TEST(VelocityAveragedShift, LinearInChiWhileDispersionIsSmall) {
  const double m = azo_mass();
  const auto q = velocity_quadrature({146.0, 31.0, 470.0}, 64);
  const auto model = make_shift_model(q, m, deflector.combined_constant(), 266e-9, std::nullopt);
  const double a = model.shift(50.0, 1500.0), b = model.shift(100.0, 1500.0);
  EXPECT_NEAR(b / a, 2.0, 0.02);
}

TEST(Calibration, NoiselessDataRecoversConstant) {
  const MoleculeSpec c60{"C60", parse_formula("C60"), 79.0, 79.0, 0.0};
  std::vector<CalibrationPoint> data;
  for (double u : {1000.0, 2000.0, 3000.0, 4000.0, 5000.0, 6000.0}) {
    data.push_back({u, fringe_shift(c60.alpha_stat_a3, c60.mass_amu, u, 180.0, deflector), 180.0, 0.0});
  }
  const auto cal = calibrate_geometry(c60, data);
  EXPECT_NEAR(cal.constant / deflector.combined_constant(), 1.0, 1e-12);
  EXPECT_LT(cal.std_error, 1e-9 * cal.constant);
}

TEST(Calibration, NoisyDataCoverage) {
  const MoleculeSpec c60{"C60", parse_formula("C60"), 79.0, 79.0, 0.0};
  const double g = deflector.combined_constant();
  int covered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<CalibrationPoint> data;
    for (double u : {1000.0, 2000.0, 3000.0, 4000.0, 5000.0, 6000.0}) {
      const double truth = fringe_shift(c60.alpha_stat_a3, c60.mass_amu, u, 180.0, g);
      const double err = 0.05 * truth;
      data.push_back({u, truth + std::normal_distribution<double>(0.0, err)(rng), 180.0, err});
    }
    const auto cal = calibrate_geometry(c60, data);
    if (std::abs(cal.constant - g) < 2.0 * cal.std_error) ++covered;
  }
  EXPECT_GE(covered, 93);
}

TEST(Calibration, Errors) {
  const MoleculeSpec c60{"C60", 720.66, 79.0, 79.0, 0.0};
  EXPECT_THROW(calibrate_geometry(c60, {{3000.0, 1e-7, 180.0, 0.0}, {3000.0, 1.1e-7, 180.0, 0.0}}),
               CalibrationError);
  EXPECT_THROW(calibrate_geometry(c60, {}), CalibrationError);
  EXPECT_THROW(calibrate_geometry({"x", 720.66, 0.0, 0.0, 0.0}, {{1.0, 1.0, 1.0, 0.0}, {2.0, 1.0, 1.0, 0.0}}),
               CalibrationError);
}

}  // namespace
