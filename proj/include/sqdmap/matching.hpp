#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sqdmap/geometry.hpp"

namespace sqdmap {

struct MatchParams {
  double alpha = 0.1;  // tolerance degree of the adaptive threshold

  void validate() const;
};

/// Outcome of adaptive temporal matching for one current-frame element.
/// matched <=> prev_index is set and distance < threshold. Unmatched results
/// keep distance = +infinity as an in-memory sentinel; serialized reports use
/// an explicit no-match state instead.
struct MatchResult {
  int current_index = -1;
  std::optional<int> prev_index;
  double distance = 0.0;
  double threshold = 0.0;
  bool matched = false;
};

/// Directional Chamfer distance: mean over `from` of the nearest-neighbor
/// distance into `to`. Throws std::invalid_argument("empty point set") on an
/// empty input.
double chamfer_directional(std::span<const Point2> from,
                           std::span<const Point2> to);

/// Symmetric Chamfer distance: both directional terms summed.
double chamfer(std::span<const Point2> a, std::span<const Point2> b);

/// Per-instance match threshold alpha * (w + h) / 2. Throws
/// std::invalid_argument("degenerate instance") when w + h == 0.
double adaptive_threshold(const BoundingRect& rect, double alpha);

/// One result per current element: nearest previous-frame element of the
/// same class by Chamfer distance (ties -> lowest previous index), matched
/// when that distance is below the element's own adaptive threshold.
/// Parallelized over current elements with OpenMP; results are independent
/// of thread count.
std::vector<MatchResult> adaptive_temporal_match(
    const std::vector<MapElement>& prev_warped,
    const std::vector<MapElement>& current, const MatchParams& params);

}  // namespace sqdmap
