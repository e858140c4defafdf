// Planar geometry: poses, oriented boxes, probability grids, polylines, and
// the exact predicates (overlap, distance, sampling) the scoring stack uses.
// Everything is BEV-planar; all functions here are pure.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "planeval/util.hpp"

namespace planeval {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a > kPi) {
    a -= 2.0 * kPi;
  } else if (a <= -kPi) {
    a += 2.0 * kPi;
  }
  return a;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double squared_norm(Vec2 a) { return a.x * a.x + a.y * a.y; }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 rotated(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}
inline Vec2 unit_vector(double heading) { return {std::cos(heading), std::sin(heading)}; }

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians in (-pi, pi]

  Vec2 position() const { return {x, y}; }
  bool operator==(const Pose2&) const = default;
};

inline Pose2 make_pose(double x, double y, double heading) {
  return Pose2{x, y, normalize_angle(heading)};
}

/// Expresses a world-frame point in the pose's local frame (+x along heading).
inline Vec2 to_local(const Pose2& frame, Vec2 world) {
  return rotated(world - frame.position(), -frame.heading);
}

inline Vec2 to_world(const Pose2& frame, Vec2 local) {
  return frame.position() + rotated(local, frame.heading);
}

struct OrientedBox {
  Pose2 pose;               // center
  double half_length = 0.0;  // along heading, > 0
  double half_width = 0.0;   // across heading, > 0

  /// Corners in fixed order: front-left, front-right, rear-right, rear-left.
  std::array<Vec2, 4> corners() const {
    const Vec2 u = unit_vector(pose.heading);
    const Vec2 lon = u * half_length;
    const Vec2 lat = Vec2{-u.y, u.x} * half_width;
    const Vec2 c = pose.position();
    return {c + lon + lat, c + lon - lat, c - lon - lat, c - lon + lat};
  }

  /// Closed-set membership: boundary points count as inside.
  bool contains(Vec2 p) const {
    const Vec2 local = to_local(pose, p);
    return std::abs(local.x) <= half_length && std::abs(local.y) <= half_width;
  }

  OrientedBox inflated(double margin) const {
    return {pose, half_length + margin, half_width + margin};
  }
};

namespace detail {

struct Interval {
  double lo, hi;
};

inline Interval project(const std::array<Vec2, 4>& corners, Vec2 axis) {
  double lo = dot(corners[0], axis), hi = lo;
  for (int i = 1; i < 4; ++i) {
    const double v = dot(corners[i], axis);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

inline std::array<Vec2, 4> separating_axes(const OrientedBox& a, const OrientedBox& b) {
  const Vec2 ua = unit_vector(a.pose.heading);
  const Vec2 ub = unit_vector(b.pose.heading);
  return {ua, Vec2{-ua.y, ua.x}, ub, Vec2{-ub.y, ub.x}};
}

}  // namespace detail

/// Separating-axis test over the four edge normals. Boxes are closed sets:
/// boundary contact counts as overlap.
inline bool obb_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  for (const Vec2 axis : detail::separating_axes(a, b)) {
    const auto ia = detail::project(ca, axis);
    const auto ib = detail::project(cb, axis);
    if (ia.lo > ib.hi || ib.lo > ia.hi) return false;
  }
  return true;
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = squared_norm(ab);
  if (len2 <= 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

inline bool segments_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
  const double d1 = cross(a1 - a0, b0 - a0);
  const double d2 = cross(a1 - a0, b1 - a0);
  const double d3 = cross(b1 - b0, a0 - b0);
  const double d4 = cross(b1 - b0, a1 - b0);
  if (((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) &&
      ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))) {
    return true;
  }
  // Collinear / endpoint contact.
  const auto on = [](Vec2 p, Vec2 q, Vec2 r) {
    return std::abs(cross(q - p, r - p)) == 0.0 && std::min(p.x, q.x) <= r.x &&
           r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y && r.y <= std::max(p.y, q.y);
  };
  return on(a0, a1, b0) || on(a0, a1, b1) || on(b0, b1, a0) || on(b0, b1, a1);
}

inline double segment_segment_distance(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
  if (segments_intersect(a0, a1, b0, b1)) return 0.0;
  return std::min(std::min(point_segment_distance(a0, b0, b1), point_segment_distance(a1, b0, b1)),
                  std::min(point_segment_distance(b0, a0, a1), point_segment_distance(b1, a0, a1)));
}

/// Minimum Euclidean distance between box boundaries; 0 iff the boxes overlap.
inline double min_distance(const OrientedBox& a, const OrientedBox& b) {
  if (obb_overlap(a, b)) return 0.0;
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      best = std::min(best, segment_segment_distance(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4]));
    }
  }
  return best;
}

/// Corner-cached box for hot loops: one trigonometric evaluation at
/// construction, then overlap tests and translations are arithmetic only.
struct BoxShadow {
  std::array<Vec2, 4> corners;  // same order as OrientedBox::corners()
  Vec2 axis_lon, axis_lat;      // unit edge normals
};

inline BoxShadow make_shadow(const OrientedBox& box) {
  BoxShadow s;
  s.corners = box.corners();
  s.axis_lon = unit_vector(box.pose.heading);
  s.axis_lat = {-s.axis_lon.y, s.axis_lon.x};
  return s;
}

inline BoxShadow translated(BoxShadow s, Vec2 d) {
  for (Vec2& c : s.corners) c = c + d;
  return s;
}

inline bool shadow_overlap(const BoxShadow& a, const BoxShadow& b) {
  for (const Vec2 axis : {a.axis_lon, a.axis_lat, b.axis_lon, b.axis_lat}) {
    const auto ia = detail::project(a.corners, axis);
    const auto ib = detail::project(b.corners, axis);
    if (ia.lo > ib.hi || ib.lo > ia.hi) return false;
  }
  return true;
}

inline double shadow_min_distance(const BoxShadow& a, const BoxShadow& b);

/// Positive separation distance, or the negated SAT penetration depth when
/// the boxes overlap. For convex polygons the minimum translation direction
/// is one of the edge normals, so the overlap branch is exact.
inline double signed_clearance(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  double penetration = std::numeric_limits<double>::infinity();
  for (const Vec2 axis : detail::separating_axes(a, b)) {
    const auto ia = detail::project(ca, axis);
    const auto ib = detail::project(cb, axis);
    const double ov = std::min(ia.hi, ib.hi) - std::max(ia.lo, ib.lo);
    if (ov < 0.0) return min_distance(a, b);
    penetration = std::min(penetration, ov);
  }
  return -penetration;
}

inline double shadow_min_distance(const BoxShadow& a, const BoxShadow& b) {
  if (shadow_overlap(a, b)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      best = std::min(best, segment_segment_distance(a.corners[i], a.corners[(i + 1) % 4],
                                                     b.corners[j], b.corners[(j + 1) % 4]));
    }
  }
  return best;
}

/// Axis-aligned probability grid over cell centers. `origin` is the world
/// position of cell (0,0)'s center; heading must be 0. values are row-major:
/// values[row * width + col], rows advance along +y, columns along +x.
struct ProbGrid {
  Pose2 origin;
  double resolution = 1.0;  // meters per cell, > 0
  int width = 0;            // columns, >= 2
  int height = 0;           // rows, >= 2
  std::vector<double> values;

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }

  double max_x() const { return origin.x + (width - 1) * resolution; }
  double max_y() const { return origin.y + (height - 1) * resolution; }

  /// True when the point lies inside the outer cell-center rectangle.
  bool in_footprint(Vec2 p) const {
    return p.x >= origin.x && p.x <= max_x() && p.y >= origin.y && p.y <= max_y();
  }

  void validate() const {
    if (origin.heading != 0.0) throw ValidationError("grid.origin.heading: must be 0");
    if (!(resolution > 0.0)) throw ValidationError("grid.resolution: must be > 0");
    if (width < 2 || height < 2) throw ValidationError("grid.width/height: cell counts must be >= 2");
    if (values.size() != static_cast<std::size_t>(width) * height) {
      throw ValidationError("grid.values: count must equal width*height");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
        throw ValidationError("grid.values[" + std::to_string(i) + "]: probability outside [0,1]");
      }
    }
  }
};

/// Bilinear interpolation of the four surrounding cell-center values.
/// Points outside the cell-center rectangle clamp to the nearest cell center.
inline double bilinear_sample(const ProbGrid& g, Vec2 p) {
  double gx = (p.x - g.origin.x) / g.resolution;
  double gy = (p.y - g.origin.y) / g.resolution;
  gx = std::clamp(gx, 0.0, static_cast<double>(g.width - 1));
  gy = std::clamp(gy, 0.0, static_cast<double>(g.height - 1));
  const int col = std::min(static_cast<int>(gx), g.width - 2);
  const int row = std::min(static_cast<int>(gy), g.height - 2);
  const double fx = gx - col;
  const double fy = gy - row;
  const double v00 = g.at(row, col), v01 = g.at(row, col + 1);
  const double v10 = g.at(row + 1, col), v11 = g.at(row + 1, col + 1);
  return v00 * (1.0 - fx) * (1.0 - fy) + v01 * fx * (1.0 - fy) + v10 * (1.0 - fx) * fy +
         v11 * fx * fy;
}

/// Drivable probability with conservative out-of-map semantics: any point
/// outside the grid footprint is not drivable (0.0).
inline double drivable_prob(const ProbGrid& g, Vec2 p) {
  return g.in_footprint(p) ? bilinear_sample(g, p) : 0.0;
}

/// The nine key points of a box in fixed order: center; corners front-left,
/// front-right, rear-right, rear-left; edge midpoints front, right, rear, left.
inline std::array<Vec2, 9> ego_keypoints(const OrientedBox& box) {
  const Vec2 u = unit_vector(box.pose.heading);
  const Vec2 lon = u * box.half_length;
  const Vec2 lat = Vec2{-u.y, u.x} * box.half_width;
  const Vec2 c = box.pose.position();
  return {c,
          c + lon + lat, c + lon - lat, c - lon - lat, c - lon + lat,
          c + lon, c - lat, c - lon, c + lat};
}

/// Ordered planar path; consecutive points are distinct (> 1e-9 m apart).
struct Polyline {
  std::vector<Vec2> points;

  void validate(const std::string& path = "polyline") const {
    if (points.size() < 2) throw ValidationError(path + ": needs at least 2 points");
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (distance(points[i - 1], points[i]) <= 1e-9) {
        throw ValidationError(path + ".points[" + std::to_string(i) + "]: consecutive points coincide");
      }
    }
  }
};

inline double arc_length(const Polyline& p) {
  double total = 0.0;
  for (std::size_t i = 1; i < p.points.size(); ++i) total += distance(p.points[i - 1], p.points[i]);
  return total;
}

struct PolylineProjection {
  double arc = 0.0;       // arc-length position of the closest point
  double distance = 0.0;  // Euclidean distance to the polyline
  Vec2 point;             // the closest point itself
  int segment = 0;        // index of the segment holding the closest point
};

inline PolylineProjection project_to_polyline(const Polyline& line, Vec2 p) {
  PolylineProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  double arc_so_far = 0.0;
  for (std::size_t i = 0; i + 1 < line.points.size(); ++i) {
    const Vec2 a = line.points[i], b = line.points[i + 1];
    const Vec2 ab = b - a;
    const double len = norm(ab);
    const double t = std::clamp(dot(p - a, ab) / (len * len), 0.0, 1.0);
    const Vec2 q = a + ab * t;
    const double d = distance(p, q);
    if (d < best.distance) {
      best = {arc_so_far + t * len, d, q, static_cast<int>(i)};
    }
    arc_so_far += len;
  }
  return best;
}

inline Vec2 polyline_point_at(const Polyline& line, double s) {
  if (s <= 0.0) return line.points.front();
  for (std::size_t i = 0; i + 1 < line.points.size(); ++i) {
    const double len = distance(line.points[i], line.points[i + 1]);
    if (s <= len) return line.points[i] + (line.points[i + 1] - line.points[i]) * (s / len);
    s -= len;
  }
  return line.points.back();
}

/// Sutherland-Hodgman clip of a convex polygon against an oriented box.
/// Returns the intersection polygon (empty when disjoint).
inline std::vector<Vec2> clip_polygon_to_box(const std::vector<Vec2>& poly, const OrientedBox& box) {
  std::vector<Vec2> current = poly;
  const auto corners = box.corners();
  for (int e = 0; e < 4 && !current.empty(); ++e) {
    const Vec2 a = corners[e], b = corners[(e + 1) % 4];
    const Vec2 edge = b - a;
    std::vector<Vec2> next;
    next.reserve(current.size() + 2);
    for (std::size_t i = 0; i < current.size(); ++i) {
      const Vec2 p = current[i];
      const Vec2 q = current[(i + 1) % current.size()];
      const double sp = cross(edge, p - a);
      const double sq = cross(edge, q - a);
      if (sp <= 0.0) next.push_back(p);  // box corners wind clockwise in this ordering
      if ((sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0)) {
        const double t = sp / (sp - sq);
        next.push_back(p + (q - p) * t);
      }
    }
    current = std::move(next);
  }
  return current;
}

inline Vec2 polygon_centroid(const std::vector<Vec2>& poly) {
  if (poly.empty()) return {};
  Vec2 sum;
  for (const Vec2 p : poly) sum = sum + p;
  return sum / static_cast<double>(poly.size());
}

/// Crossing-number point-in-polygon test (boundary points count as inside).
inline bool point_in_polygon(const std::vector<Vec2>& poly, Vec2 p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (point_segment_distance(p, poly[j], poly[i]) <= 1e-12) return true;
    if ((poly[i].y > p.y) != (poly[j].y > p.y)) {
      const double x_cross = poly[j].x + (poly[i].x - poly[j].x) * (p.y - poly[j].y) / (poly[i].y - poly[j].y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

inline bool box_intersects_segment(const OrientedBox& box, Vec2 a, Vec2 b) {
  if (box.contains(a) || box.contains(b)) return true;
  const auto corners = box.corners();
  for (int i = 0; i < 4; ++i) {
    if (segments_intersect(corners[i], corners[(i + 1) % 4], a, b)) return true;
  }
  return false;
}

}  // namespace planeval
