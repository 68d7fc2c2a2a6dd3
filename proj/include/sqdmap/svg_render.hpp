#pragma once

#include <string>
#include <vector>

#include "sqdmap/geometry.hpp"
#include "sqdmap/matching.hpp"
#include "sqdmap/noising.hpp"
#include "sqdmap/streaming.hpp"

namespace sqdmap {

struct RenderOptions {
  double pixels_per_meter = 8.0;
  double margin_px = 20.0;
  bool draw_samples = true;
};

/// One frame as an SVG document: the perception rectangle, current GT
/// (boundaries green, dividers red, crossings blue), warped previous GT
/// dashed, noised samples translucent, and matched pairs joined by a segment
/// between their centroids.
std::string render_frame_svg(const FrameRecord& frame,
                             const std::vector<MapElement>& warped_prev,
                             const std::vector<MatchResult>& matches,
                             const std::vector<NoisySample>& samples,
                             const PerceptionRange& range,
                             const RenderOptions& options = {});

}  // namespace sqdmap
