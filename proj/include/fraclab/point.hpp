#pragma once

#include <array>
#include <cmath>

namespace fraclab {

/// Planar point, also used as a 2-vector.
struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
inline Point2 operator/(Point2 a, double s) { return {a.x / s, a.y / s}; }
inline Point2 operator-(Point2 a) { return {-a.x, -a.y}; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Point2 a) { return a.x * a.x + a.y * a.y; }
inline double norm(Point2 a) { return std::sqrt(norm2(a)); }
inline double dist(Point2 a, Point2 b) { return norm(a - b); }
inline Point2 normalized(Point2 a) {
  double n = norm(a);
  return {a.x / n, a.y / n};
}
/// Rotate by +90 degrees.
inline Point2 perp(Point2 a) { return {-a.y, a.x}; }

/// Symmetric 2x2 matrix, row major; used for Hessians.
struct Mat2 {
  double a00 = 0.0, a01 = 0.0, a10 = 0.0, a11 = 0.0;

  double frob2() const { return a00 * a00 + a01 * a01 + a10 * a10 + a11 * a11; }
  double trace() const { return a00 + a11; }
};

inline Mat2 operator+(Mat2 a, Mat2 b) { return {a.a00 + b.a00, a.a01 + b.a01, a.a10 + b.a10, a.a11 + b.a11}; }
inline Mat2 operator-(Mat2 a, Mat2 b) { return {a.a00 - b.a00, a.a01 - b.a01, a.a10 - b.a10, a.a11 - b.a11}; }
inline Mat2 operator*(double s, Mat2 a) { return {s * a.a00, s * a.a01, s * a.a10, s * a.a11}; }
inline Point2 operator*(Mat2 m, Point2 v) { return {m.a00 * v.x + m.a01 * v.y, m.a10 * v.x + m.a11 * v.y}; }

/// Euclidean distance from p to the closed segment [a, b].
inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  Point2 ab = b - a;
  double l2 = norm2(ab);
  if (l2 == 0.0) return dist(p, a);
  double t = dot(p - a, ab) / l2;
  if (t < 0.0) t = 0.0;
  if (t > 1.0) t = 1.0;
  return dist(p, a + t * ab);
}

/// Distance between two segments (0 when they intersect).
inline double segment_segment_distance(Point2 a, Point2 b, Point2 c, Point2 d) {
  double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
  double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
  if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0))) return 0.0;
  double m = point_segment_distance(c, a, b);
  m = std::min(m, point_segment_distance(d, a, b));
  m = std::min(m, point_segment_distance(a, c, d));
  m = std::min(m, point_segment_distance(b, c, d));
  return m;
}

} // namespace fraclab
