#pragma once

#include <cmath>

#include "json.hpp"

#include "imghash/verifier.hpp"

namespace imghash {

/// A degenerate report has no distances; min_distance is written as null.
inline nlohmann::ordered_json to_json(const VerificationReport& r) {
  nlohmann::ordered_json j;
  j["min_distance"] = std::isfinite(r.min_distance) ? nlohmann::ordered_json(r.min_distance)
                                                    : nlohmann::ordered_json(nullptr);
  j["per_center_distances"] = r.per_center_distances;
  j["threshold"] = r.threshold;
  j["verdict"] = to_string(r.verdict);
  j["degenerate"] = r.degenerate;
  j["iterations"] = r.iterations;
  return j;
}

}  // namespace imghash
