#pragma once

// Seeded synthetic test scenes: a smooth gradient with scattered Gaussian
// blobs of mixed size and polarity, so the detector finds keypoints across
// several scales.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "imghash/image.hpp"
#include "imghash/rng.hpp"

namespace imghash {

inline GrayImage synth_textured(int width, int height, std::uint64_t seed,
                                double blobs_per_kilopixel = 0.5) {
  Rng rng(seed);
  const double base = 0.35 + 0.2 * unit_real(rng);
  const double gx = (unit_real(rng) - 0.5) * 0.2 / width;
  const double gy = (unit_real(rng) - 0.5) * 0.2 / height;
  std::vector<double> px(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      px[static_cast<std::size_t>(y) * width + x] = base + gx * x + gy * y;

  const auto count = static_cast<int>(
      std::max(1.0, blobs_per_kilopixel * width * height / 1000.0));
  for (int b = 0; b < count; ++b) {
    const double cx = unit_real(rng) * width;
    const double cy = unit_real(rng) * height;
    const double sigma = 1.5 + 4.5 * unit_real(rng);
    const double amp = (unit_real(rng) < 0.5 ? -1.0 : 1.0) * (0.15 + 0.35 * unit_real(rng));
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    const int x0 = std::max(0, static_cast<int>(cx) - r);
    const int x1 = std::min(width - 1, static_cast<int>(cx) + r);
    const int y0 = std::max(0, static_cast<int>(cy) - r);
    const int y1 = std::min(height - 1, static_cast<int>(cy) + r);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        px[static_cast<std::size_t>(y) * width + x] += amp * std::exp(-d2 * inv);
      }
  }
  for (auto& v : px) v = std::clamp(v, 0.0, 1.0);
  return GrayImage(width, height, std::move(px));
}

}  // namespace imghash
