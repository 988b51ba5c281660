#pragma once

// Receiver side: recompute centers by Lloyd iteration seeded with the
// received centers, then compare index-wise.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "imghash/errors.hpp"
#include "imghash/hash_codec.hpp"
#include "imghash/image.hpp"
#include "imghash/kmeans.hpp"
#include "imghash/surf.hpp"

namespace imghash {

/// Average of the salt-and-pepper (2.1375 px) and JPEG (2.6469 px) crossings.
inline constexpr double kDefaultThreshold = 2.3922;

class Threshold {
 public:
  constexpr Threshold() = default;
  explicit Threshold(double value) : value_(value) {
    if (!(value > 0.0)) throw DomainError("threshold must be > 0");
  }
  constexpr double value() const noexcept { return value_; }

 private:
  double value_ = kDefaultThreshold;
};

enum class Verdict { authentic, tampered };

inline const char* to_string(Verdict v) noexcept {
  return v == Verdict::authentic ? "authentic" : "tampered";
}

struct Recomputation {
  ImageHash hash;
  bool degenerate = false;
  int iterations = 0;
  std::size_t keypoint_count = 0;
};

struct VerificationReport {
  /// +infinity when degenerate.
  double min_distance = std::numeric_limits<double>::infinity();
  std::vector<double> per_center_distances;
  double threshold = kDefaultThreshold;
  Verdict verdict = Verdict::tampered;
  bool degenerate = false;
  int iterations = 0;
};

inline void check_receiver_config(const ImageHash& received, const DetectorConfig& dcfg,
                                  const KMeansConfig& kcfg) {
  if (received.k() != kcfg.k)
    throw ConfigError("hash carries k=" + std::to_string(received.k()) +
                      " but receiver is configured for k=" + std::to_string(kcfg.k));
  if (received.detector_fingerprint != config_fingerprint(dcfg, kcfg))
    throw ConfigError("hash was generated with a different detector/clustering configuration");
}

/// Seeded Lloyd over already-detected receiver keypoints. Zero keypoints
/// yields a degenerate result instead of an exception.
inline Recomputation recompute_from_keypoints(std::span<const KeyPoint> kps, int width,
                                              int height, const ImageHash& received,
                                              const DetectorConfig& dcfg,
                                              const KMeansConfig& kcfg) {
  check_receiver_config(received, dcfg, kcfg);
  Recomputation r;
  r.keypoint_count = kps.size();
  r.hash.source_width = static_cast<std::uint32_t>(width);
  r.hash.source_height = static_cast<std::uint32_t>(height);
  r.hash.detector_fingerprint = received.detector_fingerprint;
  if (kps.empty()) {
    r.degenerate = true;
    return r;
  }
  const auto pts = keypoint_locations(kps);
  const auto clusters = lloyd(pts, received.centers, kcfg);
  for (const auto& c : clusters.centers) r.hash.centers.push_back(wire_round(c));
  r.iterations = clusters.iterations;
  return r;
}

inline Recomputation recompute_hash(const GrayImage& img, const ImageHash& received,
                                    const DetectorConfig& dcfg = {},
                                    const KMeansConfig& kcfg = {}) {
  check_receiver_config(received, dcfg, kcfg);
  const auto kps = detect_keypoints(img, dcfg);
  return recompute_from_keypoints(kps, img.width(), img.height(), received, dcfg, kcfg);
}

/// Distance between sent center i and recomputed center i, for every i.
inline std::vector<double> per_center_distances(const ImageHash& sent,
                                                const ImageHash& recomputed) {
  if (sent.k() != recomputed.k())
    throw DomainError("cannot compare hashes with k=" + std::to_string(sent.k()) + " and k=" +
                      std::to_string(recomputed.k()));
  std::vector<double> d(sent.k());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = distance(sent.centers[i], recomputed.centers[i]);
  return d;
}

inline double min_center_distance(const ImageHash& sent, const ImageHash& recomputed) {
  const auto d = per_center_distances(sent, recomputed);
  return *std::min_element(d.begin(), d.end());
}

/// Authentic iff not degenerate and min_distance < threshold.
inline VerificationReport make_report(const ImageHash& received, const Recomputation& r,
                                      Threshold t) {
  VerificationReport report;
  report.threshold = t.value();
  report.degenerate = r.degenerate;
  report.iterations = r.iterations;
  if (!r.degenerate) {
    report.per_center_distances = per_center_distances(received, r.hash);
    report.min_distance = *std::min_element(report.per_center_distances.begin(),
                                            report.per_center_distances.end());
  }
  report.verdict = (!r.degenerate && report.min_distance < t.value()) ? Verdict::authentic
                                                                      : Verdict::tampered;
  return report;
}

inline VerificationReport verify(const GrayImage& img, const ImageHash& received,
                                 Threshold t = Threshold{}, const DetectorConfig& dcfg = {},
                                 const KMeansConfig& kcfg = {}) {
  return make_report(received, recompute_hash(img, received, dcfg, kcfg), t);
}

}  // namespace imghash
