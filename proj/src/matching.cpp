#include "sqdmap/matching.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace sqdmap {

void MatchParams::validate() const {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("alpha must be positive");
  }
}

double chamfer_directional(std::span<const Point2> from,
                           std::span<const Point2> to) {
  if (from.empty() || to.empty()) {
    throw std::invalid_argument("empty point set");
  }
  double sum = 0.0;
  for (const Point2& p : from) {
    double best_sq = std::numeric_limits<double>::infinity();
    for (const Point2& q : to) {
      const double dx = p.x - q.x;
      const double dy = p.y - q.y;
      const double d_sq = dx * dx + dy * dy;
      if (d_sq < best_sq) best_sq = d_sq;
    }
    sum += std::sqrt(best_sq);
  }
  return sum / static_cast<double>(from.size());
}

double chamfer(std::span<const Point2> a, std::span<const Point2> b) {
  return chamfer_directional(a, b) + chamfer_directional(b, a);
}

double adaptive_threshold(const BoundingRect& rect, double alpha) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("alpha must be positive");
  }
  if (rect.w + rect.h == 0.0) {
    throw std::invalid_argument("degenerate instance");
  }
  return alpha * (rect.w + rect.h) / 2.0;
}

std::vector<MatchResult> adaptive_temporal_match(
    const std::vector<MapElement>& prev_warped,
    const std::vector<MapElement>& current, const MatchParams& params) {
  params.validate();

  const std::int64_t n = static_cast<std::int64_t>(current.size());
  std::vector<MatchResult> results(current.size());

  // Thresholds first, serially: adaptive_threshold may throw and exceptions
  // must not cross the parallel region.
  for (std::int64_t i = 0; i < n; ++i) {
    results[i].current_index = static_cast<int>(i);
    results[i].threshold =
        adaptive_threshold(min_bounding_rect(current[i].points), params.alpha);
  }

#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::optional<int> best_idx;
    for (std::size_t j = 0; j < prev_warped.size(); ++j) {
      if (prev_warped[j].cls != current[i].cls) continue;
      const double d =
          chamfer(current[i].points.span(), prev_warped[j].points.span());
      if (d < best) {
        best = d;
        best_idx = static_cast<int>(j);
      }
    }
    results[i].distance = best;
    results[i].prev_index = best_idx;
    results[i].matched = best_idx.has_value() && best < results[i].threshold;
  }
  return results;
}

}  // namespace sqdmap
