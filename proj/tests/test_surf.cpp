#include <gtest/gtest.h>

#include <set>

#include "imghash/surf.hpp"
#include "test_support.hpp"

namespace imghash {
namespace {

TEST(FilterSchedule, CanonicalProgression) {
  const int expected[4][4] = {
      {9, 15, 21, 27}, {15, 27, 39, 51}, {27, 51, 75, 99}, {51, 99, 147, 195}};
  for (int o = 0; o < 4; ++o)
    for (int i = 0; i < 4; ++i) EXPECT_EQ(filter_size_at(o, i), expected[o][i]);
  EXPECT_DOUBLE_EQ(scale_of(9), 1.2);
}

TEST(HessianResponse, ConstantImageIsZero) {
  const IntegralImage ii(GrayImage(60, 60, 0.7));
  for (int L : {9, 15, 21, 27, 39, 51})
    EXPECT_NEAR(hessian_response(ii, 30, 30, L), 0.0, 1e-15) << L;
}

TEST(HessianResponse, LinearRampIsZero) {
  std::vector<double> px(40 * 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) px[y * 40 + x] = x / 40.0;
  const IntegralImage ii(GrayImage(40, 40, px));
  for (int y = 4; y < 36; y += 3)
    for (int x = 4; x < 36; x += 3) EXPECT_NEAR(hessian_response(ii, x, y, 9), 0.0, 1e-12);
}

TEST(HessianResponse, SingleBrightPixel) {
  // Oracle: the dense-kernel convolution. Only the -2 center weights of Dxx
  // and Dyy touch the pixel and Dxy is zero on both axes, so the value is
  // (-2)(-2) / 9^4.
  GrayImage img(21, 21, 0.0);
  img(10, 10) = 1.0;
  const double oracle = testing::oracle_response(img, testing::make_lobe_kernels(9), 10, 10);
  EXPECT_DOUBLE_EQ(oracle, 4.0 / 6561.0);
  EXPECT_NEAR(hessian_response(IntegralImage(img), 10, 10, 9), 4.0 / 6561.0, 1e-18);
}

TEST(HessianResponse, MatchesDenseKernelOracle) {
  const auto img = testing::random_image(48, 48, 17);
  const IntegralImage ii(img);
  for (int L : {9, 15, 21, 27}) {
    const auto k = testing::make_lobe_kernels(L);
    for (int y = L / 2; y + L / 2 < 48; y += 5)
      for (int x = L / 2; x + L / 2 < 48; x += 3) {
        const double want = testing::oracle_response(img, k, x, y);
        EXPECT_NEAR(hessian_response(ii, x, y, L), want, 1e-9 * std::abs(want) + 1e-15);
      }
  }
}

TEST(HessianResponse, RejectsOverrunAndBadSizes) {
  const IntegralImage ii(GrayImage(30, 30, 0.5));
  EXPECT_THROW(hessian_response(ii, 3, 15, 9), BoundsError);
  EXPECT_THROW(hessian_response(ii, 15, 26, 9), BoundsError);
  EXPECT_THROW(hessian_response(ii, 15, 15, 11), DomainError);
  EXPECT_THROW(hessian_response(ii, 15, 15, 3), DomainError);
  EXPECT_NO_THROW(hessian_response(ii, 4, 4, 9));
  EXPECT_NO_THROW(hessian_response(ii, 25, 25, 9));
}

TEST(ResponsePyramid, DefaultsOn512GiveSixteenLayers) {
  const IntegralImage ii(GrayImage(512, 512, 0.3));
  const auto p = build_response_pyramid(ii, {});
  ASSERT_EQ(p.layers.size(), 16u);
  for (const auto& layer : p.layers) {
    EXPECT_EQ(layer.map->filter_size(), filter_size_at(layer.octave, layer.level));
    EXPECT_EQ(layer.map->border(), layer.map->filter_size() / 2);
  }
  EXPECT_TRUE(p.omitted_filter_sizes.empty());
  // shared sizes reuse one map
  EXPECT_EQ(p.layers[1].map.get(), p.layers[4].map.get());  // 15
}

TEST(ResponsePyramid, SmallImageOmitsLargeFilters) {
  const IntegralImage ii(GrayImage(20, 20, 0.3));
  const auto p = build_response_pyramid(ii, {});
  std::set<int> sizes;
  for (const auto& layer : p.layers) sizes.insert(layer.map->filter_size());
  EXPECT_EQ(sizes, (std::set<int>{9, 15}));
  EXPECT_FALSE(p.omitted_filter_sizes.empty());
}

TEST(ResponsePyramid, ConstantImageHasZeroResponses) {
  const IntegralImage ii(GrayImage(64, 64, 0.9));
  const auto p = build_response_pyramid(ii, {});
  for (const auto& layer : p.layers)
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        if (layer.map->valid(x, y)) ASSERT_NEAR(layer.map->at(x, y), 0.0, 1e-15);
}

TEST(DetectKeypoints, ConstantImageHasNone) {
  EXPECT_TRUE(detect_keypoints(GrayImage(64, 64, 0.5)).empty());
}

TEST(DetectKeypoints, WhiteSquareKeypointsHugTheSquare) {
  const auto img = testing::square_scene();
  const auto kps = detect_keypoints(img);
  ASSERT_FALSE(kps.empty());
  for (const auto& kp : kps) {
    // inside the square grown by 6 px on every side
    EXPECT_GE(kp.x, 28 - 6);
    EXPECT_LE(kp.x, 35 + 6);
    EXPECT_GE(kp.y, 28 - 6);
    EXPECT_LE(kp.y, 35 + 6);
  }
  EXPECT_EQ(kps, testing::brute_force_detect(img, {}));
}

TEST(DetectKeypoints, DeterministicAcrossCalls) {
  const auto img = testing::square_scene();
  EXPECT_EQ(detect_keypoints(img), detect_keypoints(img));
}

TEST(DetectKeypoints, MatchesBruteForceOnRandomImages) {
  DetectorConfig cfg;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto img = testing::random_image(48, 48, 900 + s);
    const auto got = detect_keypoints(img, cfg);
    const auto want = testing::brute_force_detect(img, cfg);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].x, want[i].x);
      EXPECT_EQ(got[i].y, want[i].y);
      EXPECT_EQ(got[i].filter_size, want[i].filter_size);
      EXPECT_NEAR(got[i].response, want[i].response, 1e-9 * want[i].response);
    }
  }
}

TEST(DetectKeypoints, StrictMaximumAndThreshold) {
  DetectorConfig cfg;
  const auto img = testing::random_image(64, 64, 4);
  const IntegralImage ii(img);
  const auto kps = detect_keypoints(img, cfg);
  ASSERT_FALSE(kps.empty());
  for (const auto& kp : kps) {
    EXPECT_GT(kp.response, cfg.response_threshold);
    EXPECT_GE(kp.scale, 1.2);
    const int x = int(kp.x), y = int(kp.y);
    const int below = filter_size_at(kp.octave, kp.level - 1);
    const int above = filter_size_at(kp.octave, kp.level + 1);
    for (int L : {below, kp.filter_size, above})
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (L == kp.filter_size && dx == 0 && dy == 0) continue;
          EXPECT_GT(kp.response, hessian_response(ii, x + dx, y + dy, L));
        }
  }
}

TEST(DetectKeypoints, MaxKeypointsKeepsStrongest) {
  const auto img = testing::random_image(64, 64, 8);
  DetectorConfig capped;
  capped.max_keypoints = 5;
  const auto all = detect_keypoints(img);
  const auto few = detect_keypoints(img, capped);
  ASSERT_EQ(few.size(), 5u);
  EXPECT_TRUE(std::equal(few.begin(), few.end(), all.begin()));
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_GE(all[i - 1].response, all[i].response);
}

TEST(DetectKeypoints, TranslationCovariance) {
  const auto patch = testing::random_image(24, 24, 21);
  auto scene = [&](int ox, int oy) {
    GrayImage img(160, 160, 0.2);
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) img(ox + x, oy + y) = patch(x, y);
    return img;
  };
  const int dx = 7, dy = -5;
  DetectorConfig cfg;
  cfg.octaves = 2;
  const auto a = detect_keypoints(scene(68, 68), cfg);
  const auto b = detect_keypoints(scene(68 + dx, 68 + dy), cfg);
  ASSERT_FALSE(a.empty());
  std::set<std::tuple<double, double, int>> sa, sb;
  for (const auto& kp : a) sa.emplace(kp.x + dx, kp.y + dy, kp.filter_size);
  for (const auto& kp : b) sb.emplace(kp.x, kp.y, kp.filter_size);
  EXPECT_EQ(sa, sb);
}

TEST(DetectorConfig, Validation) {
  DetectorConfig c;
  c.levels_per_octave = 2;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.base_filter_size = 11;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.hessian_weight = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.octaves = 0;
  EXPECT_THROW(c.validate(), DomainError);
}

}  // namespace
}  // namespace imghash
