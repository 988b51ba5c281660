#pragma once

// Fast-Hessian blob detector over box-filter approximations of the Gaussian
// second derivatives.
//
// For a filter of side L (L = 9, 15, 21, ...) with lobe size l = L / 3:
//
//   Dxx: three (2l-1) tall, l wide lobes side by side, weights +1 -2 +1
//   Dyy: the transpose of Dxx
//   Dxy: four l x l quadrant lobes one pixel off the center row/column,
//        +1 on the anti-diagonal pair, -1 on the diagonal pair
//
// and the response is det = (Dxx * Dyy - (w * Dxy)^2) / L^4 with w = 0.9.
// All response maps are kept at full pixel resolution.

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "imghash/errors.hpp"
#include "imghash/image.hpp"
#include "imghash/integral.hpp"

namespace imghash {

inline constexpr int kBaseFilterSize = 9;
inline constexpr double kHessianWeight = 0.9;
inline constexpr double kBaseScale = 1.2;

struct DetectorConfig {
  int octaves = 4;
  int levels_per_octave = 4;
  int base_filter_size = kBaseFilterSize;
  double hessian_weight = kHessianWeight;
  /// Threshold on area-normalized det(H).
  double response_threshold = 3e-4;
  std::optional<std::size_t> max_keypoints;

  void validate() const {
    if (octaves < 1) throw DomainError("detector: octaves must be >= 1");
    if (levels_per_octave < 3)
      throw DomainError("detector: levels_per_octave must be >= 3");
    if (base_filter_size != kBaseFilterSize)
      throw DomainError("detector: base filter size is fixed at 9");
    if (!(hessian_weight > 0.0 && hessian_weight <= 1.0))
      throw DomainError("detector: hessian weight must be in (0, 1]");
    if (!(response_threshold >= 0.0))
      throw DomainError("detector: response threshold must be >= 0");
  }
};

struct KeyPoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 0.0;
  double response = 0.0;
  int filter_size = 0;
  int octave = 0;
  int level = 0;

  bool operator==(const KeyPoint&) const = default;
};

/// Canonical keypoint order: descending response, then octave, level, row, column.
inline void sort_keypoints(std::vector<KeyPoint>& kps) {
  std::sort(kps.begin(), kps.end(), [](const KeyPoint& a, const KeyPoint& b) {
    if (a.response != b.response) return a.response > b.response;
    return std::tie(a.octave, a.level, a.y, a.x) < std::tie(b.octave, b.level, b.y, b.x);
  });
}

/// Side length of the box filter at (octave, level): 9,15,21,27 / 15,27,39,51 / ...
constexpr int filter_size_at(int octave, int level) {
  return 3 * ((1 << (octave + 1)) * (level + 1) + 1);
}

constexpr double scale_of(int filter_size) {
  return kBaseScale * filter_size / kBaseFilterSize;
}

/// Raw (unnormalized) box-filter second derivatives at one pixel.
struct BoxDerivatives {
  double dxx = 0.0;
  double dyy = 0.0;
  double dxy = 0.0;
};

/// Caller guarantees the filter lies inside the image.
inline BoxDerivatives box_derivatives_unchecked(const IntegralImage& ii, int x, int y,
                                                int filter_size) noexcept {
  const int b = filter_size / 2;
  const int l = filter_size / 3;
  const int h = l / 2;
  BoxDerivatives d;
  // whole (2l-1) x L band minus three times the center lobe gives +1 -2 +1
  d.dxx = ii.box_sum_unchecked(x - b, y - l + 1, x + b, y + l - 1) -
          3.0 * ii.box_sum_unchecked(x - h, y - l + 1, x + h, y + l - 1);
  d.dyy = ii.box_sum_unchecked(x - l + 1, y - b, x + l - 1, y + b) -
          3.0 * ii.box_sum_unchecked(x - l + 1, y - h, x + l - 1, y + h);
  d.dxy = ii.box_sum_unchecked(x + 1, y - l, x + l, y - 1) +
          ii.box_sum_unchecked(x - l, y + 1, x - 1, y + l) -
          ii.box_sum_unchecked(x - l, y - l, x - 1, y - 1) -
          ii.box_sum_unchecked(x + 1, y + 1, x + l, y + l);
  return d;
}

inline double determinant_of(const BoxDerivatives& d, int filter_size,
                             double weight = kHessianWeight) noexcept {
  const double area = static_cast<double>(filter_size) * filter_size;
  const double wxy = weight * d.dxy;
  return (d.dxx * d.dyy - wxy * wxy) / (area * area);
}

inline bool valid_filter_size(int filter_size) noexcept {
  return filter_size >= kBaseFilterSize && (filter_size - kBaseFilterSize) % 6 == 0;
}

/// Area-normalized det(H_approx) at (x, y). Throws DomainError for an
/// unsupported filter size and BoundsError if the filter overruns the image.
inline double hessian_response(const IntegralImage& ii, int x, int y, int filter_size,
                               double weight = kHessianWeight) {
  if (!valid_filter_size(filter_size))
    throw DomainError("filter size " + std::to_string(filter_size) +
                      " is not 9 + 6m");
  const int b = filter_size / 2;
  if (x - b < 0 || y - b < 0 || x + b >= ii.width() || y + b >= ii.height())
    throw BoundsError("filter of size " + std::to_string(filter_size) + " at (" +
                      std::to_string(x) + "," + std::to_string(y) +
                      ") overruns the image border");
  return determinant_of(box_derivatives_unchecked(ii, x, y, filter_size), filter_size,
                        weight);
}

/// det(H_approx) for one filter size over every pixel. Pixels within
/// filter_size/2 of a border are invalid and hold 0.
class ResponseMap {
 public:
  ResponseMap(const IntegralImage& ii, int filter_size, double weight = kHessianWeight)
      : filter_size_(filter_size), border_(filter_size / 2), width_(ii.width()),
        height_(ii.height()),
        responses_(static_cast<std::size_t>(width_) * height_, 0.0) {
    for (int y = border_; y < height_ - border_; ++y)
      for (int x = border_; x < width_ - border_; ++x)
        responses_[index(x, y)] =
            determinant_of(box_derivatives_unchecked(ii, x, y, filter_size),
                           filter_size, weight);
  }

  int filter_size() const noexcept { return filter_size_; }
  int border() const noexcept { return border_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  bool valid(int x, int y) const noexcept {
    return x >= border_ && y >= border_ && x < width_ - border_ && y < height_ - border_;
  }
  double at(int x, int y) const noexcept { return responses_[index(x, y)]; }

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int filter_size_;
  int border_;
  int width_;
  int height_;
  std::vector<double> responses_;
};

struct ResponseLayer {
  int octave = 0;
  int level = 0;
  std::shared_ptr<const ResponseMap> map;
};

/// One layer per (octave, level) that fits the image. Layers with equal
/// filter sizes share one map.
struct ResponsePyramid {
  std::vector<ResponseLayer> layers;
  /// Filter sizes skipped because they exceed the image.
  std::vector<int> omitted_filter_sizes;

  /// Layers of one octave in level order.
  std::vector<const ResponseLayer*> octave(int o) const {
    std::vector<const ResponseLayer*> out;
    for (const auto& layer : layers)
      if (layer.octave == o) out.push_back(&layer);
    return out;
  }
};

inline ResponsePyramid build_response_pyramid(const IntegralImage& ii,
                                              const DetectorConfig& cfg) {
  cfg.validate();
  ResponsePyramid pyramid;
  std::map<int, std::shared_ptr<const ResponseMap>> cache;
  for (int o = 0; o < cfg.octaves; ++o) {
    for (int i = 0; i < cfg.levels_per_octave; ++i) {
      const int size = filter_size_at(o, i);
      if (size > ii.width() || size > ii.height()) {
        pyramid.omitted_filter_sizes.push_back(size);
        continue;
      }
      auto& map = cache[size];
      if (!map) map = std::make_shared<const ResponseMap>(ii, size, cfg.hessian_weight);
      pyramid.layers.push_back({o, i, map});
    }
  }
  return pyramid;
}

/// Strict 3x3x3 maxima of det(H) above the threshold. Only levels with a
/// level on both sides in the same octave are searched, and all 26 neighbors
/// must be valid pixels of their maps.
inline std::vector<KeyPoint> detect_keypoints(const ResponsePyramid& pyramid,
                                              const DetectorConfig& cfg) {
  std::vector<KeyPoint> out;
  for (int o = 0; o < cfg.octaves; ++o) {
    const auto layers = pyramid.octave(o);
    for (std::size_t i = 1; i + 1 < layers.size(); ++i) {
      const ResponseMap& below = *layers[i - 1]->map;
      const ResponseMap& mid = *layers[i]->map;
      const ResponseMap& above = *layers[i + 1]->map;
      const int margin = above.border() + 1;
      for (int y = margin; y < mid.height() - margin; ++y) {
        for (int x = margin; x < mid.width() - margin; ++x) {
          const double v = mid.at(x, y);
          if (!(v > cfg.response_threshold)) continue;
          bool is_max = true;
          for (int dy = -1; dy <= 1 && is_max; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              if (!(v > below.at(x + dx, y + dy)) || !(v > above.at(x + dx, y + dy)) ||
                  ((dx != 0 || dy != 0) && !(v > mid.at(x + dx, y + dy)))) {
                is_max = false;
                break;
              }
            }
          }
          if (!is_max) continue;
          out.push_back({static_cast<double>(x), static_cast<double>(y),
                         scale_of(mid.filter_size()), v, mid.filter_size(),
                         layers[i]->octave, layers[i]->level});
        }
      }
    }
  }
  sort_keypoints(out);
  if (cfg.max_keypoints && out.size() > *cfg.max_keypoints) out.resize(*cfg.max_keypoints);
  return out;
}

inline std::vector<KeyPoint> detect_keypoints(const GrayImage& img,
                                              const DetectorConfig& cfg = {}) {
  const IntegralImage ii(img);
  return detect_keypoints(build_response_pyramid(ii, cfg), cfg);
}

}  // namespace imghash
