#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "imghash/errors.hpp"
#include "imghash/image.hpp"

namespace imghash {

/// Inclusive pixel rectangle [x0, x1] x [y0, y1].
struct BoxRegion {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0 + 1; }
  int height() const noexcept { return y1 - y0 + 1; }
  long long area() const noexcept { return static_cast<long long>(width()) * height(); }
  bool contains(int x, int y) const noexcept {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
  bool operator==(const BoxRegion&) const = default;
};

/// Summed-area table: at(x, y) is the sum of every source pixel (i, j) with
/// i <= x and j <= y. Accumulated in double precision.
class IntegralImage {
 public:
  IntegralImage() = default;

  explicit IntegralImage(const GrayImage& img)
      : width_(img.width()), height_(img.height()),
        table_(static_cast<std::size_t>(width_) * height_) {
    for (int y = 0; y < height_; ++y) {
      double row_sum = 0.0;
      for (int x = 0; x < width_; ++x) {
        row_sum += img(x, y);
        table_[index(x, y)] = row_sum + (y > 0 ? table_[index(x, y - 1)] : 0.0);
      }
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  double at(int x, int y) const noexcept { return table_[index(x, y)]; }

  bool in_bounds(const BoxRegion& r) const noexcept {
    return 0 <= r.x0 && r.x0 <= r.x1 && r.x1 < width_ && 0 <= r.y0 &&
           r.y0 <= r.y1 && r.y1 < height_;
  }

  /// Sum of source pixels inside `r`. Throws BoundsError if `r` is invalid.
  double box_sum(const BoxRegion& r) const {
    if (!in_bounds(r))
      throw BoundsError("box region (" + std::to_string(r.x0) + "," +
                        std::to_string(r.y0) + ")-(" + std::to_string(r.x1) +
                        "," + std::to_string(r.y1) + ") outside image");
    return box_sum_unchecked(r.x0, r.y0, r.x1, r.y1);
  }

  /// Caller guarantees 0 <= x0 <= x1 < width and 0 <= y0 <= y1 < height.
  double box_sum_unchecked(int x0, int y0, int x1, int y1) const noexcept {
    const double a = (x0 > 0 && y0 > 0) ? at(x0 - 1, y0 - 1) : 0.0;
    const double b = y0 > 0 ? at(x1, y0 - 1) : 0.0;
    const double c = x0 > 0 ? at(x0 - 1, y1) : 0.0;
    return at(x1, y1) - b - c + a;
  }

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> table_;
};

inline IntegralImage to_integral(const GrayImage& img) { return IntegralImage(img); }

}  // namespace imghash
