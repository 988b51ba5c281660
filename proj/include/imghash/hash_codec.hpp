#pragma once

// Sender-side hash generation and the binary wire format.
//
// Wire layout (all integers and floats big-endian):
//
//   offset  size  field
//   0       4     magic "IHSH"
//   4       1     version (1)
//   5       2     k
//   7       4     source width
//   11      4     source height
//   15      4     configuration fingerprint
//   19      8k    k x (x, y) as IEEE-754 binary32
//
// Center coordinates are held at binary32 precision everywhere, so a hash
// read back from disk compares bit-identical to the one that was written.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "imghash/errors.hpp"
#include "imghash/image.hpp"
#include "imghash/kmeans.hpp"
#include "imghash/surf.hpp"

namespace imghash {

inline constexpr std::array<std::uint8_t, 4> kHashMagic = {'I', 'H', 'S', 'H'};
inline constexpr std::uint8_t kHashVersion = 1;
inline constexpr std::size_t kHashHeaderSize = 19;
inline constexpr std::size_t kBytesPerCenter = 8;

struct ImageHash {
  std::vector<Point2> centers;
  std::uint32_t source_width = 0;
  std::uint32_t source_height = 0;
  std::uint32_t detector_fingerprint = 0;

  std::size_t k() const noexcept { return centers.size(); }
  bool operator==(const ImageHash&) const = default;
};

/// Round a coordinate to the binary32 value the wire format carries.
inline double wire_round(double v) noexcept {
  // volatile: GCC 11's SLP vectorizer folds a paired double->float->double
  // round trip into a no-op at -O3.
  volatile float f = static_cast<float>(v);
  return static_cast<double>(f);
}

inline Point2 wire_round(const Point2& p) noexcept {
  return {wire_round(p.x), wire_round(p.y)};
}

namespace detail {

struct Fnv1a32 {
  std::uint32_t state = 2166136261u;

  void byte(std::uint8_t b) noexcept {
    state ^= b;
    state *= 16777619u;
  }
  void u64(std::uint64_t v) noexcept {
    for (int s = 56; s >= 0; s -= 8) byte(static_cast<std::uint8_t>(v >> s));
  }
  void f64(double v) noexcept { u64(std::bit_cast<std::uint64_t>(v)); }
  void text(std::string_view s) noexcept {
    for (char c : s) byte(static_cast<std::uint8_t>(c));
  }
};

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

}  // namespace detail

/// Checksum of every setting that must agree between sender and receiver.
/// k travels explicitly in the header and the k-means++ seed only matters to
/// the sender, so neither is covered.
inline std::uint32_t config_fingerprint(const DetectorConfig& d, const KMeansConfig& k) {
  detail::Fnv1a32 h;
  h.text("imghash/config/1");
  h.u64(static_cast<std::uint64_t>(d.octaves));
  h.u64(static_cast<std::uint64_t>(d.levels_per_octave));
  h.u64(static_cast<std::uint64_t>(d.base_filter_size));
  h.f64(d.hessian_weight);
  h.f64(d.response_threshold);
  h.u64(d.max_keypoints ? static_cast<std::uint64_t>(*d.max_keypoints) + 1 : 0);
  h.u64(static_cast<std::uint64_t>(k.max_iterations));
  h.f64(k.tolerance);
  return h.state;
}

inline std::vector<Point2> keypoint_locations(std::span<const KeyPoint> kps) {
  std::vector<Point2> pts;
  pts.reserve(kps.size());
  for (const auto& kp : kps) pts.push_back({kp.x, kp.y});
  return pts;
}

/// Hash from already-detected keypoints; see generate_hash.
inline ImageHash hash_from_keypoints(std::span<const KeyPoint> kps, int width, int height,
                                     const DetectorConfig& dcfg, const KMeansConfig& kcfg) {
  if (kps.empty())
    throw HashGenerationError("no keypoints detected; the image is featureless");
  const auto pts = keypoint_locations(kps);
  const auto clusters = kmeans(pts, kcfg);
  ImageHash h;
  h.source_width = static_cast<std::uint32_t>(width);
  h.source_height = static_cast<std::uint32_t>(height);
  h.detector_fingerprint = config_fingerprint(dcfg, kcfg);
  for (const auto& c : clusters.centers) h.centers.push_back(wire_round(c));
  return h;
}

/// Detect keypoints, seed k-means with k-means++ (kcfg.rng_seed), run Lloyd,
/// and keep the final centers. Throws HashGenerationError without keypoints.
inline ImageHash generate_hash(const GrayImage& img, const DetectorConfig& dcfg = {},
                               const KMeansConfig& kcfg = {}) {
  const auto kps = detect_keypoints(img, dcfg);
  return hash_from_keypoints(kps, img.width(), img.height(), dcfg, kcfg);
}

inline std::vector<std::uint8_t> encode_hash(const ImageHash& h) {
  if (h.k() < 1 || h.k() > 0xFFFF) throw DomainError("hash: k must be in 1..65535");
  std::vector<std::uint8_t> out(kHashMagic.begin(), kHashMagic.end());
  out.reserve(kHashHeaderSize + kBytesPerCenter * h.k());
  out.push_back(kHashVersion);
  detail::put_u16(out, static_cast<std::uint16_t>(h.k()));
  detail::put_u32(out, h.source_width);
  detail::put_u32(out, h.source_height);
  detail::put_u32(out, h.detector_fingerprint);
  for (const auto& c : h.centers) {
    detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(c.x)));
    detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(c.y)));
  }
  return out;
}

inline ImageHash decode_hash(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHashHeaderSize) throw FormatError("hash: truncated header");
  if (!std::equal(kHashMagic.begin(), kHashMagic.end(), bytes.begin()))
    throw FormatError("hash: bad magic");
  if (bytes[4] != kHashVersion)
    throw FormatError("hash: unsupported version " + std::to_string(bytes[4]));
  const std::size_t k = (std::size_t{bytes[5]} << 8) | bytes[6];
  if (k == 0) throw FormatError("hash: k is zero");
  if (bytes.size() != kHashHeaderSize + kBytesPerCenter * k)
    throw FormatError("hash: payload length " +
                      std::to_string(bytes.size() - kHashHeaderSize) + " does not match k=" +
                      std::to_string(k));
  ImageHash h;
  h.source_width = detail::get_u32(bytes, 7);
  h.source_height = detail::get_u32(bytes, 11);
  h.detector_fingerprint = detail::get_u32(bytes, 15);
  h.centers.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t at = kHashHeaderSize + kBytesPerCenter * i;
    const double x = std::bit_cast<float>(detail::get_u32(bytes, at));
    const double y = std::bit_cast<float>(detail::get_u32(bytes, at + 4));
    if (!std::isfinite(x) || !std::isfinite(y))
      throw FormatError("hash: non-finite center coordinate");
    if (x < 0.0 || y < 0.0 || x >= h.source_width || y >= h.source_height)
      throw FormatError("hash: center outside the source image");
    h.centers.push_back({x, y});
  }
  return h;
}

/// One center per line, "x y" with six decimals.
inline std::string format_hash_text(const ImageHash& h) {
  std::string out;
  char line[64];
  for (const auto& c : h.centers) {
    std::snprintf(line, sizeof line, "%.6f %.6f\n", c.x, c.y);
    out += line;
  }
  return out;
}

}  // namespace imghash
