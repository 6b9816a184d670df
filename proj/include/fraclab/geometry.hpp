#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/point.hpp"

namespace fraclab {

struct CornerAngle {
  std::size_t vertex;
  double omega; // interior angle in radians
};

/// Simple polygon, counter-clockwise, with per-edge tags and corner data.
/// Edge i runs from vertex i to vertex (i+1) mod n.
class Domain {
public:
  Domain() = default;
  Domain(std::vector<Point2> vertices, std::vector<std::string> edge_tags);

  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<std::string>& edge_tags() const { return edge_tags_; }
  const std::vector<CornerAngle>& corner_angles() const { return corner_angles_; }
  double diameter() const { return diameter_; }
  double boundary_length() const { return boundary_length_; }
  std::size_t edge_count() const { return vertices_.size(); }

  bool contains(Point2 p) const;

private:
  std::vector<Point2> vertices_;
  std::vector<std::string> edge_tags_;
  std::vector<CornerAngle> corner_angles_;
  double diameter_ = 0.0;
  double boundary_length_ = 0.0;
};

namespace detail {

inline double polygon_signed_area(const std::vector<Point2>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * s;
}

inline double interior_angle_at(const std::vector<Point2>& v, std::size_t i) {
  std::size_t n = v.size();
  Point2 u = v[i] - v[(i + n - 1) % n];
  Point2 w = v[(i + 1) % n] - v[i];
  double turn = std::atan2(cross(u, w), dot(u, w));
  return std::numbers::pi - turn; // CCW polygon: interior angle in (0, 2pi)
}

} // namespace detail

inline Domain::Domain(std::vector<Point2> vertices, std::vector<std::string> edge_tags)
    : vertices_(std::move(vertices)), edge_tags_(std::move(edge_tags)) {
  std::size_t n = vertices_.size();
  require(n >= 3, errc::bad_param, "polygon needs at least 3 vertices");
  require(edge_tags_.size() == n, errc::bad_param, "one tag slot per edge expected");
  boundary_length_ = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double len = dist(vertices_[i], vertices_[(i + 1) % n]);
    require(len > 0.0, errc::degenerate_edge, "zero-length polygon edge");
    boundary_length_ += len;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) diameter_ = std::max(diameter_, dist(vertices_[i], vertices_[j]));
  corner_angles_.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    corner_angles_.push_back({i, detail::interior_angle_at(vertices_, i)});
}

inline bool Domain::contains(Point2 p) const {
  // crossing number; robust enough for well-separated queries, boundary counts as inside
  std::size_t n = vertices_.size();
  bool in = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    Point2 a = vertices_[j], b = vertices_[i];
    if (point_segment_distance(p, a, b) < 1e-14 * (1.0 + diameter_)) return true;
    if ((b.y > p.y) != (a.y > p.y)) {
      double xint = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
      if (p.x < xint) in = !in;
    }
  }
  return in;
}

/// Build a Domain from a vertex loop. Accepts either orientation (normalized
/// to CCW), merges collinear triples, rejects self-intersections.
inline Domain make_polygon(std::vector<Point2> vertices,
                           std::vector<std::string> edge_tags = {}) {
  std::size_t n = vertices.size();
  require(n >= 3, errc::bad_param, "polygon needs at least 3 vertices");
  if (edge_tags.empty()) edge_tags.assign(n, std::string{});
  require(edge_tags.size() == n, errc::bad_param, "edge_tags size mismatch");

  for (std::size_t i = 0; i < n; ++i)
    require(std::isfinite(vertices[i].x) && std::isfinite(vertices[i].y), errc::bad_param,
            "non-finite vertex");

  if (detail::polygon_signed_area(vertices) < 0.0) {
    std::reverse(vertices.begin(), vertices.end());
    // new edge j runs between old vertices n-1-j and n-2-j, i.e. old edge n-2-j
    std::reverse(edge_tags.begin(), edge_tags.end());
    std::rotate(edge_tags.begin(), edge_tags.begin() + 1, edge_tags.end());
  }

  // drop zero-length edges and collinear vertices (angle within 1e-9 of pi)
  for (bool changed = true; changed && vertices.size() > 3;) {
    changed = false;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      std::size_t m = vertices.size();
      Point2 prev = vertices[(i + m - 1) % m], cur = vertices[i], next = vertices[(i + 1) % m];
      if (dist(prev, cur) < 1e-15) {
        vertices.erase(vertices.begin() + i);
        edge_tags.erase(edge_tags.begin() + (i + m - 1) % m);
        changed = true;
        break;
      }
      double ang = detail::interior_angle_at(vertices, i);
      if (std::abs(ang - std::numbers::pi) < 1e-9 && dist(cur, next) > 0) {
        vertices.erase(vertices.begin() + i);
        edge_tags.erase(edge_tags.begin() + i);
        changed = true;
        break;
      }
    }
  }
  n = vertices.size();
  for (std::size_t i = 0; i < n; ++i)
    require(dist(vertices[i], vertices[(i + 1) % n]) > 1e-15, errc::degenerate_edge,
            "zero-length polygon edge");

  // simplicity: non-adjacent edges must not intersect
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      Point2 a = vertices[i], b = vertices[(i + 1) % n];
      Point2 c = vertices[j], d = vertices[(j + 1) % n];
      if (segment_segment_distance(a, b, c, d) < 1e-14)
        fail(errc::self_intersecting, "polygon edges intersect");
    }
  }
  return Domain(std::move(vertices), std::move(edge_tags));
}

/// Sawtooth parameters; the profile tiles [0, 1/2] only for eps = 1/(4k).
struct SawtoothParams {
  int k = 0;
  double eps = 0.0;
  static SawtoothParams from_k(int k) {
    require(k >= 1, errc::invalid_eps, "sawtooth k must be >= 1");
    return {k, 1.0 / (4.0 * k)};
  }
};

/// Square (0,1/2)^2 with the bottom edge replaced by the slope +-1 zigzag
/// y = eps * lambda(x/eps); the zigzag edges carry the tag "gamma_eps".
inline Domain make_sawtooth(SawtoothParams params) {
  require(params.k >= 1, errc::invalid_eps, "sawtooth k must be >= 1");
  double expected = 1.0 / (4.0 * params.k);
  require(std::abs(params.eps - expected) <= 1e-15, errc::invalid_eps,
          "eps must equal 1/(4k) exactly");
  double eps = expected;
  std::vector<Point2> v;
  std::vector<std::string> tags;
  // bottom zigzag: 2k flanks, apexes at odd multiples of eps
  int segments = 2 * params.k;
  for (int i = 0; i < segments; ++i) {
    double x = i * eps;
    double y = (i % 2 == 0) ? 0.0 : eps;
    v.push_back({x, y});
    tags.push_back("gamma_eps");
  }
  v.push_back({0.5, 0.0});
  tags.push_back(""); // right wall
  v.push_back({0.5, 0.5});
  tags.push_back(""); // top
  v.push_back({0.0, 0.5});
  tags.push_back(""); // left wall
  return Domain(std::move(v), std::move(tags));
}

/// Exact Euclidean distance to the polygon boundary; 0 on or outside.
inline double distance_to_boundary(const Domain& d, Point2 p) {
  if (!d.contains(p)) return 0.0;
  const auto& v = d.vertices();
  std::size_t n = v.size();
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::min(m, point_segment_distance(p, v[i], v[(i + 1) % n]));
  return m;
}

/// Smooth surrogate of the distance function: soft-min over edge distances
/// with sharpness tied to the local distance, so that rho/2 <= sigma <= rho.
inline double regularized_distance(const Domain& d, Point2 p) {
  double rho = distance_to_boundary(d, p);
  if (rho <= 0.0) return 0.0;
  const auto& v = d.vertices();
  std::size_t n = v.size();
  double beta = 2.0 * std::log(double(n) + 1.0) / rho;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double di = point_segment_distance(p, v[i], v[(i + 1) % n]);
    acc += std::exp(-beta * (di - rho)); // shifted for stability
  }
  return rho - std::log(acc) / beta;
}

/// Interior angles sorted ascending; original vertex indices retained.
inline std::vector<CornerAngle> interior_angles(const Domain& d) {
  auto out = d.corner_angles();
  std::sort(out.begin(), out.end(), [](const CornerAngle& a, const CornerAngle& b) {
    return a.omega < b.omega || (a.omega == b.omega && a.vertex < b.vertex);
  });
  return out;
}

struct BoundarySegment {
  Point2 a, b;
  Point2 tangent;        // unit, in walk direction (CCW)
  Point2 normal;         // unit outward
  double s0 = 0, s1 = 0; // cumulative arc length over the *selected* segments
  std::string tag;
  std::size_t edge_index = 0;
};

/// Ordered boundary segments with tangents, outward normals and cumulative
/// arc length; optionally restricted to edges carrying a given tag.
inline std::vector<BoundarySegment> boundary_parametrization(
    const Domain& d, const std::optional<std::string>& tag = std::nullopt) {
  std::vector<BoundarySegment> out;
  const auto& v = d.vertices();
  std::size_t n = v.size();
  double s = 0.0;
  bool matched = false;
  for (std::size_t i = 0; i < n; ++i) {
    // untagged edges are not addressable; an empty filter never matches
    if (tag && (tag->empty() || d.edge_tags()[i] != *tag)) continue;
    matched = true;
    Point2 a = v[i], b = v[(i + 1) % n];
    Point2 t = normalized(b - a);
    BoundarySegment seg;
    seg.a = a;
    seg.b = b;
    seg.tangent = t;
    seg.normal = {t.y, -t.x}; // outward for CCW
    seg.s0 = s;
    s += dist(a, b);
    seg.s1 = s;
    seg.tag = d.edge_tags()[i];
    seg.edge_index = i;
    out.push_back(seg);
  }
  if (tag && !matched) fail(errc::unknown_tag, "no boundary edge carries tag '" + *tag + "'");
  return out;
}

// Builtin domains used throughout the experiments.
inline Domain unit_square() {
  return make_polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
}

/// L-shape with the reentrant corner (omega = 3pi/2) at the origin.
inline Domain lshape() {
  return make_polygon({{0, 0}, {1, 0}, {1, 1}, {-1, 1}, {-1, -1}, {0, -1}});
}

/// Polygonal approximation of the sector {0<r<1, 0<theta<omega}.
inline Domain sector_polygon(double omega, int arc_points = 64) {
  std::vector<Point2> v;
  v.push_back({0, 0});
  for (int i = 0; i <= arc_points; ++i) {
    double th = omega * double(i) / arc_points;
    v.push_back({std::cos(th), std::sin(th)});
  }
  return make_polygon(std::move(v));
}

// Plain-text polygon file: "v x y" per vertex, optional "tag i name" lines.
inline void save_polygon(const Domain& d, const std::filesystem::path& path) {
  std::ofstream os(path);
  require(bool(os), errc::io_error, "cannot open " + path.string());
  char buf[80];
  for (const auto& p : d.vertices()) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", p.x, p.y);
    os << buf;
  }
  for (std::size_t i = 0; i < d.edge_count(); ++i)
    if (!d.edge_tags()[i].empty()) os << "tag " << i << " " << d.edge_tags()[i] << "\n";
  require(bool(os), errc::io_error, "write failed: " + path.string());
}

inline Domain load_polygon(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(bool(is), errc::io_error, "cannot open " + path.string());
  std::vector<Point2> v;
  std::vector<std::pair<std::size_t, std::string>> tags;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (kind == "v") {
      Point2 p;
      require(bool(ls >> p.x >> p.y), errc::io_error, "bad vertex line: " + line);
      v.push_back(p);
    } else if (kind == "tag") {
      std::size_t i;
      std::string name;
      require(bool(ls >> i >> name), errc::io_error, "bad tag line: " + line);
      tags.emplace_back(i, name);
    }
  }
  std::vector<std::string> et(v.size());
  for (auto& [i, name] : tags) {
    require(i < et.size(), errc::io_error, "tag index out of range");
    et[i] = name;
  }
  return Domain(std::move(v), std::move(et));
}

} // namespace fraclab
