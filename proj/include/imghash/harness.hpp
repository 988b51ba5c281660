#pragma once

// Experiment drivers: k sweep, threshold calibration by accuracy-curve
// crossing, and manifest-driven corpus evaluation. Every driver evaluates
// items in parallel into fixed slots, so results do not depend on `jobs`.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "imghash/attacks.hpp"
#include "imghash/errors.hpp"
#include "imghash/hash_codec.hpp"
#include "imghash/image.hpp"
#include "imghash/kmeans.hpp"
#include "imghash/parallel.hpp"
#include "imghash/surf.hpp"
#include "imghash/verifier.hpp"

namespace imghash {

struct ImagePair {
  std::string id;
  GrayImage original;
  GrayImage comparison;
};

// ---------------------------------------------------------------------------
// k sweep

struct SweepRow {
  std::size_t k = 0;
  std::vector<std::string> image_ids;
  std::vector<double> per_image_min_distance;
  double average_min_distance = 0.0;
  /// Pairs skipped because one side had fewer than k keypoints.
  std::vector<std::string> skipped;
};

/// For each k: hash the original (k-means++ with kcfg_base.rng_seed), run the
/// seeded receiver on the comparison image, and record the minimum center
/// distance. Keypoints are detected once per image.
inline std::vector<SweepRow> sweep_k(const std::vector<ImagePair>& pairs,
                                     const std::vector<std::size_t>& k_values,
                                     const DetectorConfig& dcfg, const KMeansConfig& kcfg_base,
                                     std::size_t jobs = 1) {
  struct Detected {
    std::vector<KeyPoint> original, comparison;
  };
  std::vector<Detected> detected(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    detected[i].original = detect_keypoints(pairs[i].original, dcfg);
    detected[i].comparison = detect_keypoints(pairs[i].comparison, dcfg);
  });

  std::vector<SweepRow> rows;
  for (std::size_t k : k_values) {
    KMeansConfig kcfg = kcfg_base;
    kcfg.k = k;
    std::vector<std::optional<double>> cell(pairs.size());
    parallel_for(pairs.size(), jobs, [&](std::size_t i) {
      const auto& d = detected[i];
      if (d.original.size() < k || d.comparison.size() < k) return;
      const auto& p = pairs[i];
      const auto sent = hash_from_keypoints(d.original, p.original.width(),
                                            p.original.height(), dcfg, kcfg);
      const auto got = recompute_from_keypoints(d.comparison, p.comparison.width(),
                                                p.comparison.height(), sent, dcfg, kcfg);
      cell[i] = min_center_distance(sent, got.hash);
    });
    SweepRow row;
    row.k = k;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (cell[i]) {
        row.image_ids.push_back(pairs[i].id);
        row.per_image_min_distance.push_back(*cell[i]);
      } else {
        row.skipped.push_back(pairs[i].id);
      }
    }
    if (!row.per_image_min_distance.empty())
      row.average_min_distance =
          std::accumulate(row.per_image_min_distance.begin(), row.per_image_min_distance.end(),
                          0.0) /
          static_cast<double>(row.per_image_min_distance.size());
    else
      row.average_min_distance = std::numeric_limits<double>::quiet_NaN();
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Threshold calibration

struct CurvePoint {
  double threshold = 0.0;
  double original_accuracy = 0.0;  ///< attacked originals with distance < t
  double tampered_accuracy = 0.0;  ///< tampered with distance >= t
};

struct CalibrationResult {
  std::string attack_kind;
  double crossing_threshold = 0.0;
  double crossing_accuracy = 0.0;
  std::vector<CurvePoint> curve;
};

/// Accuracy curves over `grid` and the threshold where they meet: the first
/// grid point with equal accuracies, else the linear interpolation across
/// the sign change of their difference, else the grid point with the
/// smallest gap (ties to the smaller threshold).
inline CalibrationResult calibrate_from_distances(const std::vector<double>& original,
                                                  const std::vector<double>& tampered,
                                                  const std::vector<double>& grid,
                                                  std::string attack_kind = {}) {
  if (original.empty() || tampered.empty())
    throw DomainError("calibration needs both attacked-original and tampered distances");
  if (grid.size() < 2) throw DomainError("calibration grid needs at least two thresholds");
  if (!std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end())
    throw DomainError("calibration grid must be strictly ascending");

  CalibrationResult r;
  r.attack_kind = std::move(attack_kind);
  for (double t : grid) {
    const auto below = std::count_if(original.begin(), original.end(),
                                     [t](double d) { return d < t; });
    const auto above = std::count_if(tampered.begin(), tampered.end(),
                                     [t](double d) { return d >= t; });
    r.curve.push_back({t, static_cast<double>(below) / static_cast<double>(original.size()),
                       static_cast<double>(above) / static_cast<double>(tampered.size())});
  }

  auto gap = [](const CurvePoint& p) { return p.original_accuracy - p.tampered_accuracy; };
  for (const auto& p : r.curve) {
    if (gap(p) == 0.0) {
      r.crossing_threshold = p.threshold;
      r.crossing_accuracy = p.original_accuracy;
      return r;
    }
  }
  for (std::size_t i = 0; i + 1 < r.curve.size(); ++i) {
    const auto& a = r.curve[i];
    const auto& b = r.curve[i + 1];
    if ((gap(a) < 0.0) != (gap(b) < 0.0)) {
      const double s = gap(a) / (gap(a) - gap(b));
      r.crossing_threshold = a.threshold + s * (b.threshold - a.threshold);
      r.crossing_accuracy =
          a.original_accuracy + s * (b.original_accuracy - a.original_accuracy);
      return r;
    }
  }
  const auto best = std::min_element(r.curve.begin(), r.curve.end(),
                                     [&](const CurvePoint& a, const CurvePoint& b) {
                                       return std::abs(gap(a)) < std::abs(gap(b));
                                     });
  r.crossing_threshold = best->threshold;
  r.crossing_accuracy = 0.5 * (best->original_accuracy + best->tampered_accuracy);
  return r;
}

/// Minimum center distance between an original's hash and the receiver's
/// recomputation on `comparison`. +inf when the receiver finds no keypoints;
/// nullopt when the original itself is featureless.
inline std::optional<double> pair_distance(const GrayImage& original,
                                           const GrayImage& comparison,
                                           const DetectorConfig& dcfg,
                                           const KMeansConfig& kcfg) {
  const auto kps = detect_keypoints(original, dcfg);
  if (kps.empty()) return std::nullopt;
  const auto sent = hash_from_keypoints(kps, original.width(), original.height(), dcfg, kcfg);
  const auto got = recompute_hash(comparison, sent, dcfg, kcfg);
  if (got.degenerate) return std::numeric_limits<double>::infinity();
  return min_center_distance(sent, got.hash);
}

inline std::vector<double> pair_distances(const std::vector<ImagePair>& pairs,
                                          const DetectorConfig& dcfg,
                                          const KMeansConfig& kcfg, std::size_t jobs) {
  std::vector<std::optional<double>> cell(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    cell[i] = pair_distance(pairs[i].original, pairs[i].comparison, dcfg, kcfg);
  });
  std::vector<double> out;
  for (const auto& c : cell)
    if (c) out.push_back(*c);
  return out;
}

inline CalibrationResult calibrate_threshold(const std::vector<ImagePair>& originals_attacked,
                                             const std::vector<ImagePair>& tampered,
                                             const std::vector<double>& grid,
                                             const DetectorConfig& dcfg,
                                             const KMeansConfig& kcfg,
                                             std::string attack_kind = {},
                                             std::size_t jobs = 1) {
  if (originals_attacked.empty() || tampered.empty())
    throw DomainError("calibration needs attacked originals and tampered images");
  return calibrate_from_distances(pair_distances(originals_attacked, dcfg, kcfg, jobs),
                                  pair_distances(tampered, dcfg, kcfg, jobs), grid,
                                  std::move(attack_kind));
}

inline std::vector<double> linear_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi > lo)) throw DomainError("grid needs lo < hi and step > 0");
  std::vector<double> g;
  const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  for (long long i = 0; i <= n; ++i) g.push_back(lo + static_cast<double>(i) * step);
  return g;
}

// ---------------------------------------------------------------------------
// Corpus evaluation

struct EvaluationRow {
  std::string image_id;
  std::string source_path;
  AttackKind kind = AttackKind::identity;
  double parameter = 0.0;
  Label label = Label::original;
  double min_distance = 0.0;
  Verdict verdict = Verdict::tampered;
  bool degenerate = false;
  bool failed = false;
  std::string error;
};

struct EvaluationResult {
  std::vector<EvaluationRow> rows;
  double threshold = kDefaultThreshold;
  std::size_t tampered_rows = 0;
  std::size_t detected = 0;
  std::size_t original_rows = 0;
  std::size_t false_alarms = 0;
  std::size_t failures = 0;
  /// Fraction of tampered rows judged tampered; empty without tampered rows.
  std::optional<double> accuracy;
  /// Fraction of original rows judged tampered; empty without original rows.
  std::optional<double> false_alarm_rate;
};

/// Hash each distinct source once, verify every processed image against it.
/// Rows whose files cannot be read (or whose source is featureless) are
/// marked failed and excluded from the rates.
inline EvaluationResult evaluate(const std::vector<ManifestRow>& manifest, Threshold t,
                                 const DetectorConfig& dcfg, const KMeansConfig& kcfg,
                                 std::size_t jobs = 1) {
  std::vector<std::string> sources;
  for (const auto& row : manifest) sources.push_back(row.source_path);
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());

  struct SourceHash {
    std::optional<ImageHash> hash;
    std::string error;
  };
  std::vector<SourceHash> hashes(sources.size());
  parallel_for(sources.size(), jobs, [&](std::size_t i) {
    try {
      hashes[i].hash = generate_hash(load_grayscale(sources[i]), dcfg, kcfg);
    } catch (const Error& e) {
      hashes[i].error = e.what();
    }
  });
  auto hash_of = [&](const std::string& src) -> const SourceHash& {
    return hashes[static_cast<std::size_t>(
        std::lower_bound(sources.begin(), sources.end(), src) - sources.begin())];
  };

  EvaluationResult result;
  result.threshold = t.value();
  result.rows.resize(manifest.size());
  parallel_for(manifest.size(), jobs, [&](std::size_t i) {
    const auto& m = manifest[i];
    EvaluationRow& row = result.rows[i];
    row.image_id = m.output_path;
    row.source_path = m.source_path;
    row.kind = m.kind;
    row.parameter = m.parameter;
    row.label = m.label;
    const auto& src = hash_of(m.source_path);
    if (!src.hash) {
      row.failed = true;
      row.error = src.error;
      return;
    }
    try {
      const auto report = verify(load_grayscale(m.output_path), *src.hash, t, dcfg, kcfg);
      row.min_distance = report.min_distance;
      row.verdict = report.verdict;
      row.degenerate = report.degenerate;
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.what();
    }
  });

  for (const auto& row : result.rows) {
    if (row.failed) {
      ++result.failures;
      continue;
    }
    if (row.label == Label::tampered) {
      ++result.tampered_rows;
      if (row.verdict == Verdict::tampered) ++result.detected;
    } else {
      ++result.original_rows;
      if (row.verdict == Verdict::tampered) ++result.false_alarms;
    }
  }
  if (result.tampered_rows > 0)
    result.accuracy = static_cast<double>(result.detected) / result.tampered_rows;
  if (result.original_rows > 0)
    result.false_alarm_rate = static_cast<double>(result.false_alarms) / result.original_rows;
  return result;
}

// ---------------------------------------------------------------------------
// CSV output

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string fmt_optional(const std::optional<double>& v) {
  return v ? fmt_double(*v) : "n/a";
}

inline std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace detail

/// Long format: one line per (k, image) plus one "average" line per k.
inline void write_sweep_csv(const std::filesystem::path& path,
                            const std::vector<SweepRow>& rows) {
  auto out = detail::open_csv(path);
  out << "k,image_id,min_distance\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.per_image_min_distance.size(); ++i)
      out << r.k << ',' << detail::csv_field(r.image_ids[i]) << ','
          << detail::fmt_double(r.per_image_min_distance[i]) << '\n';
    for (const auto& s : r.skipped) out << r.k << ',' << detail::csv_field(s) << ",skipped\n";
    out << r.k << ",average," << detail::fmt_double(r.average_min_distance) << '\n';
  }
}

inline void write_calibration_csv(const std::filesystem::path& path,
                                  const std::vector<CalibrationResult>& results) {
  auto out = detail::open_csv(path);
  out << "attack_kind,threshold,original_accuracy,tampered_accuracy\n";
  for (const auto& r : results)
    for (const auto& p : r.curve)
      out << r.attack_kind << ',' << detail::fmt_double(p.threshold) << ','
          << detail::fmt_double(p.original_accuracy) << ','
          << detail::fmt_double(p.tampered_accuracy) << '\n';
}

/// Crossing per attack kind, plus their mean as "average" when there are several.
inline void write_calibration_summary_csv(const std::filesystem::path& path,
                                          const std::vector<CalibrationResult>& results) {
  auto out = detail::open_csv(path);
  out << "attack_kind,crossing_threshold,crossing_accuracy\n";
  double sum = 0.0;
  for (const auto& r : results) {
    out << r.attack_kind << ',' << detail::fmt_double(r.crossing_threshold) << ','
        << detail::fmt_double(r.crossing_accuracy) << '\n';
    sum += r.crossing_threshold;
  }
  if (results.size() > 1)
    out << "average," << detail::fmt_double(sum / static_cast<double>(results.size()))
        << ",\n";
}

inline void write_evaluation_csv(const std::filesystem::path& path,
                                 const EvaluationResult& result) {
  auto out = detail::open_csv(path);
  out << "image_id,source_path,kind,parameter,label,min_distance,verdict,degenerate,status\n";
  for (const auto& r : result.rows) {
    out << detail::csv_field(r.image_id) << ',' << detail::csv_field(r.source_path) << ','
        << to_string(r.kind) << ',' << detail::format_parameter(r.parameter) << ','
        << to_string(r.label) << ',';
    if (r.failed)
      out << ",,," << detail::csv_field("failed: " + r.error) << '\n';
    else
      out << detail::fmt_double(r.min_distance) << ',' << to_string(r.verdict) << ','
          << (r.degenerate ? "true" : "false") << ",ok\n";
  }
}

inline void write_evaluation_summary_csv(const std::filesystem::path& path,
                                         const EvaluationResult& r) {
  auto out = detail::open_csv(path);
  out << "threshold,tampered_rows,detected,detection_rate,original_rows,false_alarms,"
         "false_alarm_rate,failures\n";
  out << detail::fmt_double(r.threshold) << ',' << r.tampered_rows << ',' << r.detected << ','
      << detail::fmt_optional(r.accuracy) << ',' << r.original_rows << ',' << r.false_alarms
      << ',' << detail::fmt_optional(r.false_alarm_rate) << ',' << r.failures << '\n';
}

}  // namespace imghash
