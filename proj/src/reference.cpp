#include "sqdmap/reference.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sqdmap::reference {

double chamfer_directional(std::span<const Point2> from,
                           std::span<const Point2> to) {
  if (from.empty() || to.empty()) {
    throw std::invalid_argument("empty point set");
  }
  double total = 0.0;
  for (const Point2& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point2& q : to) {
      best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
    }
    total += best;
  }
  return total / static_cast<double>(from.size());
}

double chamfer(std::span<const Point2> a, std::span<const Point2> b) {
  return reference::chamfer_directional(a, b) +
         reference::chamfer_directional(b, a);
}

std::vector<MatchResult> adaptive_temporal_match(
    const std::vector<MapElement>& prev_warped,
    const std::vector<MapElement>& current, const MatchParams& params) {
  params.validate();
  // Full distance table first, then a scan per current element.
  std::vector<std::vector<double>> table(current.size());
  for (std::size_t i = 0; i < current.size(); ++i) {
    table[i].resize(prev_warped.size(),
                    std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < prev_warped.size(); ++j) {
      if (prev_warped[j].cls != current[i].cls) continue;
      table[i][j] = reference::chamfer(current[i].points.span(),
                                       prev_warped[j].points.span());
    }
  }

  std::vector<MatchResult> results;
  for (std::size_t i = 0; i < current.size(); ++i) {
    MatchResult r;
    r.current_index = static_cast<int>(i);
    r.threshold = adaptive_threshold(min_bounding_rect(current[i].points),
                                     params.alpha);
    r.distance = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < prev_warped.size(); ++j) {
      if (table[i][j] < r.distance) {
        r.distance = table[i][j];
        r.prev_index = static_cast<int>(j);
      }
    }
    r.matched = r.prev_index.has_value() && r.distance < r.threshold;
    results.push_back(r);
  }
  return results;
}

std::vector<QueryEmbedding> build_denoise_queries(const DnBatch& batch,
                                                  const NetworkBundle& nets) {
  std::vector<QueryEmbedding> out;
  out.reserve(batch.samples.size());
  for (const NoisySample& sample : batch.samples) {
    out.push_back(build_denoise_query(sample.element, nets));
  }
  return out;
}

}  // namespace sqdmap::reference
