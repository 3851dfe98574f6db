#ifndef KDTL_SCAN_HPP
#define KDTL_SCAN_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kdtl/error.hpp"
#include "kdtl/interferometer.hpp"
#include "kdtl/text.hpp"

namespace kdtl {

enum class AbscissaKind { position_x3, voltage, power };

/// One measured point. Position scans: x in m, y in counts. Voltage series: x in V, y = fringe
/// shift in m. Power series: x in W, y = visibility. error <= 0 means "not given".
struct ScanPoint {
  double x = 0.0;
  double y = 0.0;
  double error = 0.0;
};

struct ScanData {
  AbscissaKind kind = AbscissaKind::position_x3;
  std::vector<ScanPoint> points;
  std::optional<double> integration_time;  // s per point
  std::optional<std::uint64_t> seed;       // set for synthetic data

  std::size_t size() const { return points.size(); }

  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (kind == AbscissaKind::position_x3 && points[i].y < 0.0) throw IngestionError("negative count", 0);
      if (i == 0) continue;
      const double step = points[i].x - points[i - 1].x;
      if (step == 0.0) throw IngestionError("duplicate abscissa (point " + std::to_string(i + 1) + ")", 0);
      if (i >= 2 && step * (points[1].x - points[0].x) < 0.0) {
        throw IngestionError("abscissa must be strictly monotone (point " + std::to_string(i + 1) + ")", 0);
      }
    }
  }
};

/// CSV headers of the three measurement grammars.
inline std::string_view scan_header(AbscissaKind kind) {
  switch (kind) {
    case AbscissaKind::position_x3: return "x3_nm,counts";
    case AbscissaKind::voltage: return "voltage_V,shift_nm,err_nm";
    case AbscissaKind::power: return "power_W,visibility,err";
  }
  return {};
}

/// Parses a measurement CSV; the header selects the abscissa kind. '#' lines and blank lines are
/// skipped. Lengths are nanometres on disk and metres in memory.
inline ScanData ingest_measurement_series(std::string_view document) {
  ScanData out;
  std::optional<AbscissaKind> kind;
  std::size_t line_no = 0;
  for (auto raw : text::split(document, '\n')) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!kind) {
      for (auto k : {AbscissaKind::position_x3, AbscissaKind::voltage, AbscissaKind::power}) {
        if (line == scan_header(k)) kind = k;
      }
      if (!kind) throw FormatError("unknown header '" + std::string(line) + "'", line_no);
      out.kind = *kind;
      continue;
    }
    const auto fields = text::split(line, ',');
    const std::size_t expected = *kind == AbscissaKind::position_x3 ? 2 : 3;
    if (fields.size() != expected) {
      throw IngestionError("expected " + std::to_string(expected) + " fields", line_no);
    }
    std::vector<double> v;
    for (auto f : fields) {
      const auto parsed = text::parse_double(f);
      if (!parsed || !std::isfinite(*parsed)) throw IngestionError("malformed row '" + std::string(line) + "'", line_no);
      v.push_back(*parsed);
    }
    ScanPoint p;
    switch (*kind) {
      case AbscissaKind::position_x3:
        if (v[1] < 0.0) throw IngestionError("negative count", line_no);
        p = {v[0] * 1e-9, v[1], 0.0};
        break;
      case AbscissaKind::voltage:
        if (!(v[2] > 0.0)) throw IngestionError("uncertainty must be positive", line_no);
        p = {v[0], v[1] * 1e-9, v[2] * 1e-9};
        break;
      case AbscissaKind::power:
        if (!(v[2] > 0.0)) throw IngestionError("uncertainty must be positive", line_no);
        p = {v[0], v[1], v[2]};
        break;
    }
    auto& pts = out.points;
    if (!pts.empty()) {
      const double step = p.x - pts.back().x;
      if (step == 0.0) throw IngestionError("duplicate abscissa value in row " + std::to_string(line_no), line_no);
      if (pts.size() >= 2 && step * (pts[1].x - pts[0].x) < 0.0) {
        throw IngestionError("abscissa not monotone at row " + std::to_string(line_no), line_no);
      }
    }
    pts.push_back(p);
  }
  if (!kind) throw FormatError("missing header", 0);
  return out;
}

inline ScanData load_measurement_series(const std::string& path) {
  return ingest_measurement_series(text::read_file(path));
}

/// CSV text in the ingest grammar (header plus rows; no comments). Values converted from metres
/// to nanometres keep 15 significant digits.
inline std::string write_measurement_series(const ScanData& scan) {
  std::ostringstream out;
  out << scan_header(scan.kind) << '\n';
  for (const auto& p : scan.points) {
    switch (scan.kind) {
      case AbscissaKind::position_x3:
        out << text::format_significant(p.x * 1e9, 15) << ',' << text::format_double(p.y) << '\n';
        break;
      case AbscissaKind::voltage:
        out << text::format_double(p.x) << ',' << text::format_significant(p.y * 1e9, 15) << ','
            << text::format_significant(p.error * 1e9, 15) << '\n';
        break;
      case AbscissaKind::power:
        out << text::format_double(p.x) << ',' << text::format_double(p.y) << ',' << text::format_double(p.error)
            << '\n';
        break;
    }
  }
  return out.str();
}

/// Random source for all synthetic data: std::mt19937_64 seeded with the given integer.
/// Poisson and normal variates come from the standard library distributions, so streams are
/// reproducible for a fixed seed and standard library.
using Rng = std::mt19937_64;

struct PositionScanRequest {
  double period = 0.0;           // m
  double step = 0.0;             // m
  std::size_t n_points = 0;
  double counts_per_point = 0.0;  // mean level O
  double start = 0.0;            // m
};

/// Poisson counts with mean O (1 + V sin(2 pi (x - dx) / d)), dx = phase d / (2 pi).
inline ScanData synthesize_position_scan(const FringeObservables& truth, const PositionScanRequest& req,
                                         std::uint64_t seed) {
  if (!(truth.visibility >= 0.0) || truth.visibility > 1.0) throw DomainError("visibility must lie in [0, 1]");
  if (!(req.counts_per_point > 0.0)) throw DomainError("counts per point must be positive");
  if (req.n_points < 8) throw DomainError("position scans need at least 8 points");
  if (!(req.period > 0.0) || !(req.step > 0.0)) throw DomainError("period and step must be positive");
  const double shift = truth.fringe_phase * req.period / (2.0 * std::numbers::pi);
  Rng rng(seed);
  ScanData scan;
  scan.kind = AbscissaKind::position_x3;
  scan.seed = seed;
  for (std::size_t i = 0; i < req.n_points; ++i) {
    const double x = req.start + static_cast<double>(i) * req.step;
    const double mean =
        req.counts_per_point * (1.0 + truth.visibility * std::sin(2.0 * std::numbers::pi * (x - shift) / req.period));
    std::poisson_distribution<long long> draw(mean);
    scan.points.push_back({x, static_cast<double>(draw(rng)), 0.0});
  }
  return scan;
}

/// Noiseless expected counts on the same grid.
inline ScanData expected_position_scan(const FringeObservables& truth, const PositionScanRequest& req) {
  const double shift = truth.fringe_phase * req.period / (2.0 * std::numbers::pi);
  ScanData scan;
  scan.kind = AbscissaKind::position_x3;
  for (std::size_t i = 0; i < req.n_points; ++i) {
    const double x = req.start + static_cast<double>(i) * req.step;
    scan.points.push_back(
        {x, req.counts_per_point * (1.0 + truth.visibility * std::sin(2.0 * std::numbers::pi * (x - shift) / req.period)),
         0.0});
  }
  return scan;
}

}  // namespace kdtl

#endif  // KDTL_SCAN_HPP
