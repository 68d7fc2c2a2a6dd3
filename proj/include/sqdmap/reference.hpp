#pragma once

#include <span>
#include <vector>

#include "sqdmap/embedding.hpp"
#include "sqdmap/geometry.hpp"
#include "sqdmap/matching.hpp"
#include "sqdmap/streaming.hpp"

namespace sqdmap::reference {

/// Serial, straightforward mirrors of the OpenMP kernels. Kept as the
/// comparison baseline for tests and the benchmark target; written
/// independently of the parallel paths (hypot-based distances, full distance
/// table instead of streaming argmin).
double chamfer_directional(std::span<const Point2> from,
                           std::span<const Point2> to);
double chamfer(std::span<const Point2> a, std::span<const Point2> b);

std::vector<MatchResult> adaptive_temporal_match(
    const std::vector<MapElement>& prev_warped,
    const std::vector<MapElement>& current, const MatchParams& params);

std::vector<QueryEmbedding> build_denoise_queries(const DnBatch& batch,
                                                  const NetworkBundle& nets);

}  // namespace sqdmap::reference
