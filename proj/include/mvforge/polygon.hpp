#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mvforge {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

using Polygon = std::vector<Point2>;

struct Box2 {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void extend(const Point2& p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool contains(const Point2& p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
};

inline Box2 bounding_box(const Polygon& poly) {
  Box2 box;
  for (const auto& p : poly) box.extend(p);
  return box;
}

inline Polygon rectangle(const Box2& box) {
  return {{box.min_x, box.min_y},
          {box.max_x, box.min_y},
          {box.max_x, box.max_y},
          {box.min_x, box.max_y}};
}

/// Shoelace area, positive for counter-clockwise vertex order.
inline double signed_area(const Polygon& poly) {
  double twice = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return twice / 2.0;
}

inline double area(const Polygon& poly) { return std::abs(signed_area(poly)); }

inline double perimeter(const Polygon& poly) {
  double total = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    total += std::hypot(b.x - a.x, b.y - a.y);
  }
  return total;
}

/// Even-odd crossing test. Points exactly on an edge may fall either way.
inline bool contains(const Polygon& poly, const Point2& p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

namespace detail {

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool on_segment(const Point2& p, const Point2& a, const Point2& b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

inline int sign(double v) { return (v > 0.0) - (v < 0.0); }

inline bool segments_intersect(const Point2& p1, const Point2& p2,
                               const Point2& q1, const Point2& q2) {
  const int d1 = sign(cross(q1, q2, p1));
  const int d2 = sign(cross(q1, q2, p2));
  const int d3 = sign(cross(p1, p2, q1));
  const int d4 = sign(cross(p1, p2, q2));
  if (d1 != d2 && d3 != d4 && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0)
    return true;
  return (d1 == 0 && on_segment(p1, q1, q2)) ||
         (d2 == 0 && on_segment(p2, q1, q2)) ||
         (d3 == 0 && on_segment(q1, p1, p2)) ||
         (d4 == 0 && on_segment(q2, p1, p2));
}

}  // namespace detail

/// At least three finite vertices, non-zero area and no two non-adjacent
/// edges touching. O(n^2), fine for hand-drawn ROIs.
inline bool is_simple(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (const auto& p : poly)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (poly[i] == poly[(i + 1) % n]) return false;
  if (!(area(poly) > 0.0)) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (detail::segments_intersect(poly[i], poly[(i + 1) % n], poly[j],
                                     poly[(j + 1) % n]))
        return false;
    }
  }
  return true;
}

}  // namespace mvforge
