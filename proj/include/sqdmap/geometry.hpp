#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace sqdmap {

/// Ego-frame point: x forward, y left, meters.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Point2 operator+(Point2 r) const { return {x + r.x, y + r.y}; }
  constexpr Point2 operator-(Point2 r) const { return {x - r.x, y - r.y}; }
  constexpr Point2 operator*(double s) const { return {x * s, y * s}; }
};

bool is_finite(Point2 p);
double distance(Point2 a, Point2 b);

/// Ordered point sequence with >= 2 points, finite coordinates and strictly
/// positive total arc length. Zero-length (fully degenerate) inputs are
/// rejected at construction.
class Polyline {
 public:
  explicit Polyline(std::vector<Point2> points);

  const std::vector<Point2>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  const Point2& operator[](std::size_t i) const { return points_[i]; }
  Point2 front() const { return points_.front(); }
  Point2 back() const { return points_.back(); }

  double arc_length() const;

  std::span<const Point2> span() const { return points_; }

 private:
  std::vector<Point2> points_;
};

/// Axis-aligned minimum bounding rectangle, center + extents.
struct BoundingRect {
  double x = 0.0;  // center
  double y = 0.0;  // center
  double w = 0.0;
  double h = 0.0;

  bool contains(Point2 p, double tol = 1e-9) const;
};

/// Planar rigid motion, applied as rotate-then-translate. Composition adds
/// rotation angles, so t.inverse().compose(t) is the bit-exact identity.
class SE2Transform {
 public:
  SE2Transform() = default;
  SE2Transform(double rotation, Point2 translation);

  static SE2Transform identity() { return {}; }

  double rotation() const { return rotation_; }
  Point2 translation() const { return translation_; }

  Point2 apply(Point2 p) const {
    return {cos_ * p.x - sin_ * p.y + translation_.x,
            sin_ * p.x + cos_ * p.y + translation_.y};
  }

  SE2Transform inverse() const;

  /// this ∘ other: apply `other` first, then this transform.
  SE2Transform compose(const SE2Transform& other) const;

  /// 3x3 homogeneous matrix, row-major.
  std::array<double, 9> matrix_row_major() const;

 private:
  double rotation_ = 0.0;
  double cos_ = 1.0;
  double sin_ = 0.0;
  Point2 translation_{};
};

/// Ego-centric annotation rectangle: +/-half_length in x, +/-half_width in y.
struct PerceptionRange {
  double half_length = 30.0;
  double half_width = 15.0;

  void validate() const;
};

/// One map instance: class label plus its polyline in the ego frame.
/// Classes follow the scenario convention (0 ped-crossing, 1 lane-divider,
/// 2 road-boundary) but any non-negative id is accepted.
struct MapElement {
  int cls = 0;
  Polyline points;
};

/// n points at equal arc-length spacing along poly; endpoints preserved
/// exactly. Throws std::invalid_argument("degenerate curve") on zero-length
/// input and requires n >= 2.
Polyline resample_polyline(const Polyline& poly, int n);

BoundingRect min_bounding_rect(std::span<const Point2> points);
BoundingRect min_bounding_rect(const Polyline& poly);

/// Rotate-then-translate every point; count preserved.
Polyline apply_se2(const SE2Transform& t, const Polyline& poly);

/// Portion of poly inside the range rectangle, entry/exit points placed on
/// the boundary. When the rectangle splits the curve into several disjoint
/// pieces, the longest piece (by arc length) is returned. Empty result when
/// nothing of positive length lies inside.
std::optional<Polyline> clip_to_range(const Polyline& poly,
                                      const PerceptionRange& range);

/// T = pose_cur^-1 ∘ pose_prev: maps previous-ego-frame coordinates into the
/// current ego frame. Poses are world-frame ego poses.
SE2Transform relative_transform(const SE2Transform& pose_prev,
                                const SE2Transform& pose_cur);

}  // namespace sqdmap
