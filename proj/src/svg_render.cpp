#include "sqdmap/svg_render.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace sqdmap {

namespace {

// Boundaries green, dividers red, crossings blue.
const char* class_color(int cls) {
  switch (cls) {
    case 0: return "#1f6feb";
    case 1: return "#d62728";
    case 2: return "#2ca02c";
    default: return "#7f7f7f";
  }
}

struct Mapper {
  double ppm, margin, half_length, half_width;

  // Ego frame (x forward, y left) onto the page: forward to the right,
  // left upward.
  double px(Point2 p) const { return margin + (p.x + half_length) * ppm; }
  double py(Point2 p) const { return margin + (half_width - p.y) * ppm; }
};

std::string num(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite render coordinate");
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void append_polyline(std::ostringstream& out, const Polyline& poly,
                     const Mapper& m, const std::string& style) {
  out << "  <polyline fill=\"none\" " << style << " points=\"";
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (i) out << ' ';
    out << num(m.px(poly[i])) << ',' << num(m.py(poly[i]));
  }
  out << "\"/>\n";
}

Point2 centroid(const Polyline& poly) {
  Point2 c{0.0, 0.0};
  for (const Point2& p : poly.points()) {
    c.x += p.x;
    c.y += p.y;
  }
  const double n = static_cast<double>(poly.size());
  return {c.x / n, c.y / n};
}

}  // namespace

std::string render_frame_svg(const FrameRecord& frame,
                             const std::vector<MapElement>& warped_prev,
                             const std::vector<MatchResult>& matches,
                             const std::vector<NoisySample>& samples,
                             const PerceptionRange& range,
                             const RenderOptions& options) {
  range.validate();
  const Mapper m{options.pixels_per_meter, options.margin_px,
                 range.half_length, range.half_width};
  const double width = 2.0 * range.half_length * m.ppm + 2.0 * m.margin;
  const double height = 2.0 * range.half_width * m.ppm + 2.0 * m.margin;

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
      << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width)
      << ' ' << num(height) << "\">\n";
  out << "  <rect x=\"" << num(m.margin) << "\" y=\"" << num(m.margin)
      << "\" width=\"" << num(width - 2.0 * m.margin) << "\" height=\""
      << num(height - 2.0 * m.margin)
      << "\" fill=\"#fafafa\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

  if (options.draw_samples) {
    for (const NoisySample& s : samples) {
      std::string style = std::string("stroke=\"") +
                          class_color(s.element.cls) +
                          "\" stroke-width=\"1\" stroke-opacity=\"0.3\"";
      append_polyline(out, s.element.points, m, style);
    }
  }

  for (const MapElement& el : warped_prev) {
    std::string style = std::string("stroke=\"") + class_color(el.cls) +
                        "\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\""
                        " stroke-opacity=\"0.7\"";
    append_polyline(out, el.points, m, style);
  }

  for (const MapElement& el : frame.elements) {
    std::string style = std::string("stroke=\"") + class_color(el.cls) +
                        "\" stroke-width=\"2.5\"";
    append_polyline(out, el.points, m, style);
  }

  for (const MatchResult& match : matches) {
    if (!match.matched) continue;
    const std::size_t ci = static_cast<std::size_t>(match.current_index);
    const std::size_t pi = static_cast<std::size_t>(*match.prev_index);
    if (ci >= frame.elements.size() || pi >= warped_prev.size()) continue;
    const Point2 a = centroid(frame.elements[ci].points);
    const Point2 b = centroid(warped_prev[pi].points);
    out << "  <line x1=\"" << num(m.px(a)) << "\" y1=\"" << num(m.py(a))
        << "\" x2=\"" << num(m.px(b)) << "\" y2=\"" << num(m.py(b))
        << "\" stroke=\"#888888\" stroke-width=\"1\""
           " stroke-dasharray=\"2,2\"/>\n";
  }

  out << "</svg>\n";
  return out.str();
}

}  // namespace sqdmap
