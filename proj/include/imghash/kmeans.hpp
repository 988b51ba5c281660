#pragma once

// Lloyd's k-means on 2-D points with k-means++ or caller-supplied seeding.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "imghash/errors.hpp"
#include "imghash/rng.hpp"

namespace imghash {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

inline double squared_distance(const Point2& a, const Point2& b) noexcept {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double distance(const Point2& a, const Point2& b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct KMeansConfig {
  std::size_t k = 1;
  int max_iterations = 100;
  /// Convergence when no center moves by this much (pixels) in one pass.
  double tolerance = 1e-6;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (k < 1) throw DomainError("kmeans: k must be >= 1");
    if (max_iterations < 1) throw DomainError("kmeans: max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw DomainError("kmeans: tolerance must be > 0");
  }
};

struct ClusterResult {
  std::vector<Point2> centers;
  std::vector<std::size_t> assignments;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after the initial assignment and after every iteration.
  std::vector<double> objective_trace;
};

/// k-means++ seeding: first center uniform over `pts`, each further center
/// drawn with probability proportional to its squared distance to the nearest
/// chosen center. Falls back to uniform draws once every distance is zero.
inline std::vector<Point2> kmeans_pp_init(std::span<const Point2> pts, std::size_t k,
                                          std::uint64_t rng_seed) {
  if (pts.empty()) throw DomainError("kmeans++: empty point set");
  if (k < 1) throw DomainError("kmeans++: k must be >= 1");
  Rng rng(rng_seed);
  std::vector<Point2> centers;
  centers.reserve(k);
  centers.push_back(pts[uniform_index(rng, pts.size())]);

  std::vector<double> d2(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) d2[i] = squared_distance(pts[i], centers[0]);

  while (centers.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = unit_real(rng) * total;
      double cumulative = 0.0;
      pick = pts.size();
      for (std::size_t i = 0; i < pts.size(); ++i) {
        cumulative += d2[i];
        if (cumulative > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick == pts.size()) {
        // rounding pushed target past the running sum: take the last positive
        for (std::size_t i = pts.size(); i-- > 0;)
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
      }
    } else {
      pick = uniform_index(rng, pts.size());
    }
    centers.push_back(pts[pick]);
    for (std::size_t i = 0; i < pts.size(); ++i)
      d2[i] = std::min(d2[i], squared_distance(pts[i], centers.back()));
  }
  return centers;
}

namespace detail {

// Nearest center, ties to the lowest index. Returns the objective.
inline double assign_points(std::span<const Point2> pts, std::span<const Point2> centers,
                            std::vector<std::size_t>& assignments) {
  double objective = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::size_t best = 0;
    double best_d2 = squared_distance(pts[i], centers[0]);
    for (std::size_t j = 1; j < centers.size(); ++j) {
      const double d2 = squared_distance(pts[i], centers[j]);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = j;
      }
    }
    assignments[i] = best;
    objective += best_d2;
  }
  return objective;
}

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) noexcept {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  double value() const noexcept { return sum + carry; }
};

// Move each empty cluster onto the point farthest from its assigned center.
inline void repair_empty_clusters(std::span<const Point2> pts, std::vector<Point2>& centers,
                                  std::vector<std::size_t>& assignments) {
  std::vector<std::size_t> counts(centers.size(), 0);
  for (auto a : assignments) ++counts[a];
  for (std::size_t j = 0; j < centers.size(); ++j) {
    if (counts[j] != 0) continue;
    std::size_t far = pts.size();
    double far_d2 = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d2 = squared_distance(pts[i], centers[assignments[i]]);
      if (d2 > far_d2) {
        far_d2 = d2;
        far = i;
      }
    }
    if (far == pts.size()) return;  // every point sits on its center
    --counts[assignments[far]];
    ++counts[j];
    assignments[far] = j;
    centers[j] = pts[far];
  }
}

}  // namespace detail

/// Lloyd iteration from `init_centers`. Center i of the result descends from
/// seed i.
inline ClusterResult lloyd(std::span<const Point2> pts, std::span<const Point2> init_centers,
                           const KMeansConfig& cfg) {
  cfg.validate();
  if (pts.empty()) throw DomainError("lloyd: empty point set");
  if (init_centers.size() != cfg.k)
    throw DomainError("lloyd: expected " + std::to_string(cfg.k) + " seeds, got " +
                      std::to_string(init_centers.size()));

  ClusterResult r;
  r.centers.assign(init_centers.begin(), init_centers.end());
  r.assignments.resize(pts.size());
  r.objective = detail::assign_points(pts, r.centers, r.assignments);
  r.objective_trace.push_back(r.objective);

  std::vector<detail::CompensatedSum> sx(cfg.k), sy(cfg.k);
  std::vector<std::size_t> counts(cfg.k);
  std::vector<Point2> previous;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    previous = r.centers;
    detail::repair_empty_clusters(pts, r.centers, r.assignments);

    std::fill(sx.begin(), sx.end(), detail::CompensatedSum{});
    std::fill(sy.begin(), sy.end(), detail::CompensatedSum{});
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto a = r.assignments[i];
      sx[a].add(pts[i].x);
      sy[a].add(pts[i].y);
      ++counts[a];
    }
    double displacement = 0.0;
    for (std::size_t j = 0; j < cfg.k; ++j) {
      if (counts[j] != 0)
        r.centers[j] = {sx[j].value() / static_cast<double>(counts[j]),
                        sy[j].value() / static_cast<double>(counts[j])};
      displacement = std::max(displacement, distance(r.centers[j], previous[j]));
    }

    r.objective = detail::assign_points(pts, r.centers, r.assignments);
    r.objective_trace.push_back(r.objective);
    r.iterations = it;
    if (displacement < cfg.tolerance) {
      r.converged = true;
      break;
    }
  }
  return r;
}

/// k-means++ seeding followed by Lloyd iteration.
inline ClusterResult kmeans(std::span<const Point2> pts, const KMeansConfig& cfg) {
  cfg.validate();
  const auto seeds = kmeans_pp_init(pts, cfg.k, cfg.rng_seed);
  return lloyd(pts, seeds, cfg);
}

}  // namespace imghash
