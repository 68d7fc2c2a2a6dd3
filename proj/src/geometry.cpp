#include "sqdmap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sqdmap {

bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

Polyline::Polyline(std::vector<Point2> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw std::invalid_argument("degenerate curve: fewer than 2 points");
  }
  for (const Point2& p : points_) {
    if (!is_finite(p)) {
      throw std::invalid_argument("degenerate curve: non-finite coordinate");
    }
  }
  if (!(arc_length() > 0.0)) {
    throw std::invalid_argument("degenerate curve");
  }
}

double Polyline::arc_length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    total += distance(points_[i - 1], points_[i]);
  }
  return total;
}

bool BoundingRect::contains(Point2 p, double tol) const {
  return std::abs(p.x - x) <= w / 2.0 + tol && std::abs(p.y - y) <= h / 2.0 + tol;
}

SE2Transform::SE2Transform(double rotation, Point2 translation)
    : rotation_(rotation),
      cos_(std::cos(rotation)),
      sin_(std::sin(rotation)),
      translation_(translation) {}

SE2Transform SE2Transform::inverse() const {
  // R^T * (-t); reuse the cached cos/sin so inverse∘self cancels bitwise.
  Point2 t{-(cos_ * translation_.x + sin_ * translation_.y),
           -(-sin_ * translation_.x + cos_ * translation_.y)};
  return SE2Transform(-rotation_, t);
}

SE2Transform SE2Transform::compose(const SE2Transform& other) const {
  return SE2Transform(rotation_ + other.rotation_, apply(other.translation_));
}

std::array<double, 9> SE2Transform::matrix_row_major() const {
  return {cos_, -sin_, translation_.x, sin_, cos_, translation_.y, 0.0, 0.0, 1.0};
}

void PerceptionRange::validate() const {
  if (!(half_length > 0.0) || !(half_width > 0.0)) {
    throw std::invalid_argument("perception range extents must be positive");
  }
}

Polyline resample_polyline(const Polyline& poly, int n) {
  if (n < 2) {
    throw std::invalid_argument("resample count must be >= 2");
  }
  const auto& pts = poly.points();
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    cum[i] = cum[i - 1] + distance(pts[i - 1], pts[i]);
  }
  const double total = cum.back();
  if (!(total > 0.0)) {
    throw std::invalid_argument("degenerate curve");
  }

  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(n));
  std::size_t seg = 0;
  for (int i = 0; i < n; ++i) {
    const double target = total * static_cast<double>(i) / (n - 1);
    while (seg + 2 < pts.size() && cum[seg + 1] < target) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double t = seg_len > 0.0 ? (target - cum[seg]) / seg_len : 0.0;
    out.push_back({pts[seg].x + t * (pts[seg + 1].x - pts[seg].x),
                   pts[seg].y + t * (pts[seg + 1].y - pts[seg].y)});
  }
  out.front() = pts.front();
  out.back() = pts.back();
  return Polyline(std::move(out));
}

BoundingRect min_bounding_rect(std::span<const Point2> points) {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const Point2& p : points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  return {(min_x + max_x) / 2.0, (min_y + max_y) / 2.0, max_x - min_x,
          max_y - min_y};
}

BoundingRect min_bounding_rect(const Polyline& poly) {
  return min_bounding_rect(poly.span());
}

Polyline apply_se2(const SE2Transform& t, const Polyline& poly) {
  std::vector<Point2> out;
  out.reserve(poly.size());
  for (const Point2& p : poly.points()) {
    out.push_back(t.apply(p));
  }
  return Polyline(std::move(out));
}

namespace {

// Liang-Barsky clip of segment a->b against the range rectangle. Returns the
// clipped parameter interval and snaps clipped endpoints onto the binding
// boundary so outputs sit exactly on the rectangle.
struct ClippedSegment {
  Point2 p0, p1;
  bool entered;  // p0 is a boundary entry point rather than the segment start
};

std::optional<ClippedSegment> clip_segment(Point2 a, Point2 b, double xm,
                                           double ym) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  double t0 = 0.0, t1 = 1.0;
  int edge0 = -1, edge1 = -1;  // 0:-x 1:+x 2:-y 3:+y

  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x + xm, xm - a.x, a.y + ym, ym - a.y};
  for (int e = 0; e < 4; ++e) {
    if (p[e] == 0.0) {
      if (q[e] < 0.0) return std::nullopt;  // parallel and outside
      continue;
    }
    const double t = q[e] / p[e];
    if (p[e] < 0.0) {
      if (t > t1) return std::nullopt;
      if (t > t0) {
        t0 = t;
        edge0 = e;
      }
    } else {
      if (t < t0) return std::nullopt;
      if (t < t1) {
        t1 = t;
        edge1 = e;
      }
    }
  }
  if (t0 > t1) return std::nullopt;

  auto at = [&](double t, int edge) {
    Point2 r{a.x + t * dx, a.y + t * dy};
    switch (edge) {
      case 0: r.x = -xm; break;
      case 1: r.x = xm; break;
      case 2: r.y = -ym; break;
      case 3: r.y = ym; break;
      default: break;
    }
    // Clamp residual rounding so outputs never leave the rectangle.
    r.x = std::clamp(r.x, -xm, xm);
    r.y = std::clamp(r.y, -ym, ym);
    return r;
  };

  ClippedSegment out{at(t0, edge0), at(t1, edge1), edge0 >= 0};
  // Unclipped ends pass through verbatim; interpolating at t = 0 or 1 would
  // drift off the original vertex by an ulp.
  if (t0 == 0.0) {
    out.p0 = {std::clamp(a.x, -xm, xm), std::clamp(a.y, -ym, ym)};
  }
  if (t1 == 1.0) {
    out.p1 = {std::clamp(b.x, -xm, xm), std::clamp(b.y, -ym, ym)};
  }
  return out;
}

double piece_length(const std::vector<Point2>& piece) {
  double total = 0.0;
  for (std::size_t i = 1; i < piece.size(); ++i) {
    total += distance(piece[i - 1], piece[i]);
  }
  return total;
}

}  // namespace

std::optional<Polyline> clip_to_range(const Polyline& poly,
                                      const PerceptionRange& range) {
  range.validate();
  const double xm = range.half_length;
  const double ym = range.half_width;

  std::vector<std::vector<Point2>> pieces;
  std::vector<Point2> cur;
  auto flush = [&] {
    if (cur.size() >= 2 && piece_length(cur) > 0.0) pieces.push_back(cur);
    cur.clear();
  };

  const auto& pts = poly.points();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Point2 a = pts[i];
    const Point2 b = pts[i + 1];
    if (a.x == b.x && a.y == b.y) continue;  // zero-length segment
    auto clipped = clip_segment(a, b, xm, ym);
    if (!clipped) {
      flush();
      continue;
    }
    if (cur.empty()) {
      cur.push_back(clipped->p0);
    } else if (clipped->entered) {
      // Re-entry through the boundary starts a new piece unless the entry
      // point coincides with where the previous piece stopped.
      if (distance(cur.back(), clipped->p0) > 1e-12) {
        flush();
        cur.push_back(clipped->p0);
      }
    }
    if (distance(cur.back(), clipped->p1) > 0.0) cur.push_back(clipped->p1);
  }
  flush();

  if (pieces.empty()) return std::nullopt;
  std::size_t best = 0;
  double best_len = piece_length(pieces[0]);
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    const double len = piece_length(pieces[i]);
    if (len > best_len) {
      best = i;
      best_len = len;
    }
  }
  return Polyline(std::move(pieces[best]));
}

SE2Transform relative_transform(const SE2Transform& pose_prev,
                                const SE2Transform& pose_cur) {
  return pose_cur.inverse().compose(pose_prev);
}

}  // namespace sqdmap
