#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/geometry.hpp"
#include "fraclab/point.hpp"

namespace fraclab {

struct MeshBoundaryEdge {
  std::size_t a = 0, b = 0; // node indices, oriented CCW along the boundary
  std::string tag;
};

/// Conforming triangulation. Triangles are CCW; every Domain vertex is a node.
struct Mesh {
  std::vector<Point2> nodes;
  std::vector<std::array<std::size_t, 3>> triangles;
  std::vector<MeshBoundaryEdge> boundary_edges;
  std::vector<std::pair<std::size_t, double>> corner_nodes; // (node, omega)
  double h_max = 0.0;

  double tri_area(std::size_t t) const {
    const auto& tr = triangles[t];
    return 0.5 * cross(nodes[tr[1]] - nodes[tr[0]], nodes[tr[2]] - nodes[tr[0]]);
  }
  double tri_diameter(std::size_t t) const {
    const auto& tr = triangles[t];
    double d = dist(nodes[tr[0]], nodes[tr[1]]);
    d = std::max(d, dist(nodes[tr[1]], nodes[tr[2]]));
    return std::max(d, dist(nodes[tr[2]], nodes[tr[0]]));
  }
  Point2 tri_centroid(std::size_t t) const {
    const auto& tr = triangles[t];
    return (nodes[tr[0]] + nodes[tr[1]] + nodes[tr[2]]) / 3.0;
  }
  double min_angle() const {
    double worst = std::numbers::pi;
    for (const auto& tr : triangles) {
      for (int i = 0; i < 3; ++i) {
        Point2 a = nodes[tr[i]], b = nodes[tr[(i + 1) % 3]], c = nodes[tr[(i + 2) % 3]];
        double ang = std::acos(std::clamp(dot(normalized(b - a), normalized(c - a)), -1.0, 1.0));
        worst = std::min(worst, ang);
      }
    }
    return worst;
  }
  double total_area() const {
    double s = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) s += tri_area(t);
    return s;
  }
};

namespace detail {

// ---------------------------------------------------------------------------
// Bowyer-Watson incremental Delaunay with neighbor tracking.
// ---------------------------------------------------------------------------
class Delaunay {
public:
  explicit Delaunay(const std::vector<Point2>& pts) : pts_(pts) {
    double lo = 1e300, hi = -1e300;
    for (auto& p : pts) {
      lo = std::min({lo, p.x, p.y});
      hi = std::max({hi, p.x, p.y});
    }
    double c = 0.5 * (lo + hi), span = std::max(hi - lo, 1e-12);
    // super-triangle well outside the data
    base_ = pts_.size();
    pts_.push_back({c - 20 * span, c - 10 * span});
    pts_.push_back({c + 20 * span, c - 10 * span});
    pts_.push_back({c, c + 20 * span});
    make_triangle({base_, base_ + 1, base_ + 2}, {SIZE_MAX, SIZE_MAX, SIZE_MAX});
    for (std::size_t i = 0; i < base_; ++i) insert(i);
  }

  bool is_super(std::size_t raw) const { return raw >= base_ && raw < base_ + 3; }
  std::size_t compact(std::size_t raw) const { return raw < base_ ? raw : raw - 3; }

  /// Points without the super-triangle slots, in compact numbering.
  std::vector<Point2> real_points() const {
    std::vector<Point2> out;
    out.reserve(pts_.size() - 3);
    for (std::size_t i = 0; i < pts_.size(); ++i)
      if (!is_super(i)) out.push_back(pts_[i]);
    return out;
  }

  /// Triangles on real points only, CCW, compact numbering.
  std::vector<std::array<std::size_t, 3>> real_triangles() const {
    std::vector<std::array<std::size_t, 3>> out;
    for (const auto& t : tris_) {
      if (!t.alive) continue;
      if (is_super(t.v[0]) || is_super(t.v[1]) || is_super(t.v[2])) continue;
      out.push_back({compact(t.v[0]), compact(t.v[1]), compact(t.v[2])});
    }
    return out;
  }

  bool has_edge(std::size_t a, std::size_t b) const { return edge_exists(a, b); }

  /// Insert a new point (used for midpoint splitting of missing segments).
  std::size_t add_point(Point2 p) {
    std::size_t id = pts_.size();
    pts_.push_back(p);
    insert(id);
    return id;
  }

private:
  struct Tri {
    std::array<std::size_t, 3> v;
    std::array<std::size_t, 3> n; // neighbor opposite v[i]
    bool alive = false;
  };

  std::vector<Point2> pts_;
  std::vector<Tri> tris_;
  std::vector<std::vector<std::size_t>> vert_tris_; // alive incidence
  std::vector<std::uint64_t> seen_, cavity_mark_;
  std::uint64_t epoch_ = 0;
  std::size_t base_ = 0;
  std::size_t last_alive_ = 0;

  std::size_t make_triangle(std::array<std::size_t, 3> v, std::array<std::size_t, 3> n) {
    std::size_t id = tris_.size();
    tris_.push_back({v, n, true});
    for (auto vi : v) {
      if (vi >= vert_tris_.size()) vert_tris_.resize(vi + 1);
      vert_tris_[vi].push_back(id);
    }
    return id;
  }

  void kill_triangle(std::size_t t) {
    tris_[t].alive = false;
    for (auto vi : tris_[t].v) {
      auto& lst = vert_tris_[vi];
      lst.erase(std::remove(lst.begin(), lst.end(), t), lst.end());
    }
  }

  static double orient(Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); }

  bool in_circumcircle(const Tri& t, Point2 p) const {
    Point2 a = pts_[t.v[0]], b = pts_[t.v[1]], c = pts_[t.v[2]];
    double ax = a.x - p.x, ay = a.y - p.y;
    double bx = b.x - p.x, by = b.y - p.y;
    double cx = c.x - p.x, cy = c.y - p.y;
    double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                 (bx * bx + by * by) * (ax * cy - cx * ay) +
                 (cx * cx + cy * cy) * (ax * by - bx * ay);
    return det > 0.0;
  }

  std::size_t locate(Point2 p) const {
    // walk from the last alive triangle
    std::size_t cur = last_alive_;
    if (cur >= tris_.size() || !tris_[cur].alive) {
      for (cur = 0; cur < tris_.size() && !tris_[cur].alive; ++cur) {}
    }
    for (int steps = 0; steps < 1 << 22; ++steps) {
      const Tri& t = tris_[cur];
      bool moved = false;
      for (int e = 0; e < 3; ++e) {
        Point2 a = pts_[t.v[(e + 1) % 3]], b = pts_[t.v[(e + 2) % 3]];
        if (orient(a, b, p) < -1e-14 * (norm2(b - a) + 1e-30)) {
          std::size_t nb = t.n[e];
          if (nb == SIZE_MAX) break;
          cur = nb;
          moved = true;
          break;
        }
      }
      if (!moved) return cur;
    }
    fail(errc::mesh_failure, "point location walk did not terminate");
  }

  void insert(std::size_t ip) {
    Point2 p = pts_[ip];
    std::size_t seed = locate(p);
    // grow cavity of triangles whose circumcircle contains p
    ++epoch_;
    seen_.resize(tris_.size() + 8, 0);
    cavity_mark_.resize(tris_.size() + 8, 0);
    std::vector<std::size_t> cavity;
    std::vector<std::size_t> stack{seed};
    seen_[seed] = epoch_;
    while (!stack.empty()) {
      std::size_t t = stack.back();
      stack.pop_back();
      if (!tris_[t].alive || !in_circumcircle(tris_[t], p)) continue;
      cavity.push_back(t);
      cavity_mark_[t] = epoch_;
      for (int e = 0; e < 3; ++e) {
        std::size_t nb = tris_[t].n[e];
        if (nb != SIZE_MAX && seen_[nb] != epoch_) {
          seen_[nb] = epoch_;
          stack.push_back(nb);
        }
      }
    }
    require(!cavity.empty(), errc::mesh_failure, "empty Delaunay cavity (duplicate point?)");

    // boundary of the cavity: edges whose opposite triangle is outside;
    // shrink the cavity until it is star shaped around p, otherwise the fan
    // would contain degenerate or inverted triangles
    struct Bnd {
      std::size_t a, b, outside;
    };
    std::vector<Bnd> edges;
    for (bool repaired = true; repaired;) {
      repaired = false;
      edges.clear();
      for (auto it = cavity.begin(); it != cavity.end(); ++it) {
        std::size_t t = *it;
        for (int e = 0; e < 3; ++e) {
          std::size_t nb = tris_[t].n[e];
          if (nb != SIZE_MAX && cavity_mark_[nb] == epoch_) continue;
          Point2 a = pts_[tris_[t].v[(e + 1) % 3]], b = pts_[tris_[t].v[(e + 2) % 3]];
          double scale = norm2(b - a) + norm2(p - a);
          if (orient(a, b, p) <= 1e-13 * scale) {
            if (cavity.size() == 1)
              fail(errc::mesh_failure, "degenerate Delaunay insertion");
            cavity_mark_[t] = 0;
            cavity.erase(it);
            repaired = true;
            break;
          }
          edges.push_back({tris_[t].v[(e + 1) % 3], tris_[t].v[(e + 2) % 3], nb});
        }
        if (repaired) break;
      }
    }
    for (auto t : cavity) kill_triangle(t);

    // fan of new triangles around p
    std::vector<std::size_t> fresh(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      fresh[i] = make_triangle({ip, edges[i].a, edges[i].b},
                               {edges[i].outside, SIZE_MAX, SIZE_MAX});
      if (edges[i].outside != SIZE_MAX) set_neighbor(edges[i].outside, edges[i].a, edges[i].b, fresh[i]);
    }
    // link the fan: neighbor across (p, a) and (p, b)
    std::unordered_map<std::size_t, std::size_t> by_first, by_second;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      by_first[edges[i].a] = i;
      by_second[edges[i].b] = i;
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
      // edge (p, edges[i].b) shared with the fan triangle whose .a == edges[i].b
      auto it = by_first.find(edges[i].b);
      if (it != by_first.end()) tris_[fresh[i]].n[1] = fresh[it->second];
      auto it2 = by_second.find(edges[i].a);
      if (it2 != by_second.end()) tris_[fresh[i]].n[2] = fresh[it2->second];
    }
    last_alive_ = fresh.empty() ? last_alive_ : fresh[0];
  }

  void set_neighbor(std::size_t t, std::size_t va, std::size_t vb, std::size_t nb) {
    for (int e = 0; e < 3; ++e) {
      std::size_t a = tris_[t].v[(e + 1) % 3], b = tris_[t].v[(e + 2) % 3];
      if ((a == va && b == vb) || (a == vb && b == va)) {
        tris_[t].n[e] = nb;
        return;
      }
    }
  }

  bool edge_exists(std::size_t a, std::size_t b) const {
    if (a >= vert_tris_.size()) return false;
    for (auto t : vert_tris_[a]) {
      if (!tris_[t].alive) continue;
      for (int e = 0; e < 3; ++e)
        if (tris_[t].v[e] == b) return true;
    }
    return false;
  }

};

/// Hash grid for deterministic minimum-spacing enforcement.
class SpacingGrid {
public:
  explicit SpacingGrid(double cell) : cell_(cell) {}
  bool far_enough(Point2 p, double r) const {
    long cx = key(p.x), cy = key(p.y);
    long rad = long(std::ceil(r / cell_)) + 1;
    for (long i = cx - rad; i <= cx + rad; ++i)
      for (long j = cy - rad; j <= cy + rad; ++j) {
        auto it = cells_.find({i, j});
        if (it == cells_.end()) continue;
        for (auto& q : it->second)
          if (dist(p, q) < r) return false;
      }
    return true;
  }
  void add(Point2 p) { cells_[{key(p.x), key(p.y)}].push_back(p); }

private:
  long key(double v) const { return long(std::floor(v / cell_)); }
  struct H {
    std::size_t operator()(const std::pair<long, long>& k) const {
      return std::hash<long>()(k.first * 2654435761L) ^ std::hash<long>()(k.second);
    }
  };
  double cell_;
  std::unordered_map<std::pair<long, long>, std::vector<Point2>, H> cells_;
};

/// Spacing enforcement over several dyadic scales: each point goes into every
/// level, queries pick the level whose cell size matches the query radius.
class MultiScaleSpacing {
public:
  explicit MultiScaleSpacing(std::vector<double> cells) {
    for (double c : cells) grids_.emplace_back(c), cell_sizes_.push_back(c);
  }
  void add(Point2 p) {
    for (auto& g : grids_) g.add(p);
  }
  bool far_enough(Point2 p, double r) const {
    // coarsest level whose cell size does not exceed the radius
    std::size_t best = grids_.size() - 1;
    for (std::size_t i = 0; i < grids_.size(); ++i)
      if (cell_sizes_[i] <= r) {
        best = i;
        break;
      }
    return grids_[best].far_enough(p, r);
  }

private:
  std::vector<SpacingGrid> grids_;
  std::vector<double> cell_sizes_;
};

} // namespace detail

using SizeField = std::function<double(Point2)>;

namespace detail {

inline Mesh triangulate_attempt(const Domain& d, const SizeField& size_raw, double shrink) {
  auto size = [&](Point2 p) {
    double s = shrink * size_raw(p);
    require(std::isfinite(s) && s > 0, errc::bad_param, "size field must be positive");
    return s;
  };

  const auto& verts = d.vertices();
  std::size_t nv = verts.size();

  std::vector<Point2> pts;
  std::vector<std::pair<std::size_t, std::size_t>> chain; // constrained segments
  std::vector<std::size_t> chain_edge;                    // polygon edge of each segment
  double min_size = 1e300;

  // boundary chains, polygon vertices first so their ids are 0..nv-1
  for (auto& v : verts) pts.push_back(v);
  for (std::size_t e = 0; e < nv; ++e) {
    Point2 a = verts[e], b = verts[(e + 1) % nv];
    double len = dist(a, b);
    // choose a subdivision count from the size field sampled along the edge
    int probe = 8;
    double s_avg = 0.0;
    for (int i = 0; i <= probe; ++i) s_avg += size(a + (double(i) / probe) * (b - a));
    s_avg /= probe + 1;
    // equidistribute the density len/size(t) along the edge (two passes: the
    // first estimates the count, the second resolves the fine end)
    int fine = 64;
    std::vector<double> cum;
    int nseg = 1;
    for (int pass = 0; pass < 2; ++pass) {
      cum.assign(fine + 1, 0.0);
      for (int i = 0; i < fine; ++i) {
        Point2 mid = a + ((i + 0.5) / fine) * (b - a);
        cum[i + 1] = cum[i] + (len / fine) / size(mid);
      }
      nseg = std::max<int>(1, int(std::lround(cum[fine])));
      if (pass == 0) fine = std::min(16 * nseg + 64, 1 << 14);
    }
    std::vector<double> t(nseg + 1);
    t[0] = 0.0;
    t[nseg] = 1.0;
    for (int i = 1, j = 0; i < nseg; ++i) {
      double target = cum[fine] * double(i) / nseg;
      while (j < fine && cum[j + 1] < target) ++j;
      double frac = (target - cum[j]) / (cum[j + 1] - cum[j]);
      t[i] = (double(j) + frac) / fine;
    }
    std::size_t prev = e;
    for (int i = 1; i < nseg; ++i) {
      pts.push_back(a + t[i] * (b - a));
      chain.push_back({prev, pts.size() - 1});
      chain_edge.push_back(e);
      prev = pts.size() - 1;
    }
    chain.push_back({prev, (e + 1) % nv});
    chain_edge.push_back(e);
    for (int i = 0; i < nseg; ++i) min_size = std::min(min_size, len * (t[i + 1] - t[i]));
  }

  double lox = 1e300, loy = 1e300, hix = -1e300, hiy = -1e300;
  for (auto& v : verts) {
    lox = std::min(lox, v.x);
    loy = std::min(loy, v.y);
    hix = std::max(hix, v.x);
    hiy = std::max(hiy, v.y);
  }
  double sig_min = 0.88 * min_size, sig_max = 0.0;
  {
    int P = 64;
    for (int i = 0; i <= P; ++i)
      for (int j = 0; j <= P; ++j) {
        Point2 p{lox + (hix - lox) * i / P, loy + (hiy - loy) * j / P};
        if (!d.contains(p)) continue;
        double s = 0.88 * size(p);
        sig_min = std::min(sig_min, s);
        sig_max = std::max(sig_max, s);
      }
    sig_max = std::max(sig_max, sig_min);
  }

  // dyadic lattice levels, each responsible for one band of the size field
  std::vector<double> steps;
  for (double t = 0.5 * sig_max;; t *= 0.5) {
    steps.push_back(t);
    if (t <= 0.5 * sig_min || steps.size() >= 24) break;
  }
  detail::MultiScaleSpacing grid(steps);
  for (auto& p : pts) grid.add(p);

  auto home_level = [&](double sigma) {
    double t0 = steps[0];
    int j = int(std::floor(std::log2(t0 / (0.5 * sigma)) + 0.5));
    return std::size_t(std::clamp<int>(j, 0, int(steps.size()) - 1));
  };

  for (std::size_t lvl = 0; lvl < steps.size(); ++lvl) {
    double step = steps[lvl];
    double row_h = step * std::sqrt(3.0) / 2.0;
    long nrows = long((hiy - loy) / row_h) + 2;
    require(nrows < (1L << 22), errc::bad_param, "size field too fine for the lattice fill");
    for (long r = 0; r <= nrows; ++r) {
      double y = loy + r * row_h;
      double x0 = lox + (r % 2 ? 0.5 * step : 0.0);
      for (double x = x0; x <= hix + step; x += step) {
        Point2 p{x, y};
        if (!d.contains(p)) continue;
        double s = size(p);
        double sigma = 0.88 * s;
        if (home_level(sigma) != lvl) continue;
        if (distance_to_boundary(d, p) < 0.62 * s) continue;
        if (!grid.far_enough(p, sigma)) continue;
        grid.add(p);
        pts.push_back(p);
      }
    }
  }

  require(pts.size() < 500000, errc::mesh_failure,
          "size field yields more than 500k points (desk scale exceeded)");

  // Delaunay, then recover missing boundary segments by midpoint splitting
  detail::Delaunay del(pts);
  std::vector<Point2> rawpts = pts;
  rawpts.resize(rawpts.size() + 3); // align with the super-triangle slots
  struct Seg {
    std::size_t a, b, edge;
  };
  std::vector<Seg> final_chain;
  for (std::size_t i = 0; i < chain.size(); ++i)
    final_chain.push_back({chain[i].first, chain[i].second, chain_edge[i]});
  // splitting one segment can evict another recovered one, so sweep to a fixed point
  std::size_t splits = 0, cap = 4 * final_chain.size() + 64;
  for (bool dirty = true; dirty;) {
    dirty = false;
    std::vector<Seg> next;
    next.reserve(final_chain.size());
    for (const Seg& seg : final_chain) {
      if (del.has_edge(seg.a, seg.b)) {
        next.push_back(seg);
        continue;
      }
      require(splits++ < cap, errc::mesh_failure, "boundary recovery stalled");
      Point2 mp = 0.5 * (rawpts[seg.a] + rawpts[seg.b]);
      std::size_t mid = del.add_point(mp);
      rawpts.push_back(mp);
      next.push_back({seg.a, mid, seg.edge});
      next.push_back({mid, seg.b, seg.edge});
      dirty = true;
    }
    final_chain = std::move(next);
  }

  auto tris = del.real_triangles();

  // keep interior triangles only
  Mesh m;
  m.nodes = del.real_points();
  for (auto& t : tris)
    if (d.contains((m.nodes[t[0]] + m.nodes[t[1]] + m.nodes[t[2]]) / 3.0))
      m.triangles.push_back(t);
  require(!m.triangles.empty(), errc::mesh_failure, "no interior triangles");

  // orient CCW
  for (auto& t : m.triangles)
    if (cross(m.nodes[t[1]] - m.nodes[t[0]], m.nodes[t[2]] - m.nodes[t[0]]) < 0)
      std::swap(t[1], t[2]);

  // boundary edges = edges with exactly one adjacent kept triangle
  std::map<std::pair<std::size_t, std::size_t>, int> ecount;
  for (auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      auto a = t[e], b = t[(e + 1) % 3];
      ecount[{std::min(a, b), std::max(a, b)}]++;
    }
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> chain_lookup;
  for (auto& seg : final_chain) {
    std::size_t a = del.compact(seg.a), b = del.compact(seg.b);
    chain_lookup[{std::min(a, b), std::max(a, b)}] = seg.edge;
  }
  for (auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      auto a = t[e], b = t[(e + 1) % 3];
      if (ecount[{std::min(a, b), std::max(a, b)}] == 1) {
        auto it = chain_lookup.find({std::min(a, b), std::max(a, b)});
        require(it != chain_lookup.end(), errc::mesh_failure,
                "boundary edge does not lie on the polygon");
        // (a,b) traversed CCW by the interior triangle
        m.boundary_edges.push_back({a, b, d.edge_tags()[it->second]});
      }
    }

  for (std::size_t i = 0; i < nv; ++i) m.corner_nodes.push_back({i, d.corner_angles()[i].omega});

  m.h_max = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    m.h_max = std::max(m.h_max, m.tri_diameter(t));
  return m;
}

} // namespace detail

/// Triangulate with a spatially varying target element size. Boundary chains
/// honor the size field; interior fill is a thinned multi-scale hex lattice;
/// the polygon edges are recovered as constrained Delaunay edges. Element
/// diameters stay below the local size (retries with a smaller spacing when a
/// coarse attempt overshoots).
inline Mesh triangulate_sized(const Domain& d, const SizeField& size_raw,
                              double min_angle_deg = 20.0) {
  double shrink = 0.72;
  Mesh m;
  double overshoot = 0.0;
  for (int attempt = 0; attempt < 3; ++attempt) {
    m = detail::triangulate_attempt(d, size_raw, shrink);
    // local size bound, sampled over the whole triangle (the field may vary
    // steeply across one element near a graded corner)
    overshoot = 0.0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      const auto& tr = m.triangles[t];
      double s = size_raw(m.tri_centroid(t));
      for (int k = 0; k < 3; ++k) s = std::max(s, size_raw(m.nodes[tr[k]]));
      overshoot = std::max(overshoot, m.tri_diameter(t) / s);
    }
    if (overshoot <= 1.0) break;
    shrink *= std::max(0.92 / overshoot, 0.55);
  }
  require(overshoot <= 1.02, errc::mesh_failure, "element size bound not met after retries");
  double ang = m.min_angle() * 180.0 / std::numbers::pi;
  require(ang >= min_angle_deg, errc::mesh_failure,
          "mesh quality below the minimum angle floor (" + std::to_string(ang) + " deg)");
  return m;
}

/// Uniform (grading = 1) or corner-graded triangulation. For grading < 1 the
/// target size behaves like h * dist(p, reentrant corner)^(1-grading).
inline Mesh triangulate(const Domain& d, double h, double grading = 1.0) {
  require(h > 0 && std::isfinite(h), errc::bad_param, "h must be positive");
  require(grading > 0 && grading <= 1.0, errc::bad_param, "grading must lie in (0, 1]");
  std::vector<Point2> reentrant;
  for (auto& c : d.corner_angles())
    if (c.omega > std::numbers::pi + 1e-9) reentrant.push_back(d.vertices()[c.vertex]);
  if (grading == 1.0 || reentrant.empty())
    return triangulate_sized(d, [h](Point2) { return h; });
  double floor_sz = 0.35 * std::pow(h, 1.0 / grading);
  auto size = [=](Point2 p) {
    double rc = 1e300;
    for (auto& c : reentrant) rc = std::min(rc, dist(p, c));
    return std::clamp(h * std::pow(rc, 1.0 - grading), floor_sz, h);
  };
  return triangulate_sized(d, size);
}

/// Regular red refinement: each triangle splits into four via edge midpoints.
inline Mesh refine(const Mesh& m) {
  Mesh out;
  out.nodes = m.nodes;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> midpoint;
  auto mid = [&](std::size_t a, std::size_t b) {
    auto key = std::make_pair(std::min(a, b), std::max(a, b));
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    out.nodes.push_back(0.5 * (m.nodes[a] + m.nodes[b]));
    midpoint[key] = out.nodes.size() - 1;
    return out.nodes.size() - 1;
  };
  for (auto& t : m.triangles) {
    std::size_t m01 = mid(t[0], t[1]), m12 = mid(t[1], t[2]), m20 = mid(t[2], t[0]);
    out.triangles.push_back({t[0], m01, m20});
    out.triangles.push_back({t[1], m12, m01});
    out.triangles.push_back({t[2], m20, m12});
    out.triangles.push_back({m01, m12, m20});
  }
  for (auto& be : m.boundary_edges) {
    std::size_t c = mid(be.a, be.b);
    out.boundary_edges.push_back({be.a, c, be.tag});
    out.boundary_edges.push_back({c, be.b, be.tag});
  }
  out.corner_nodes = m.corner_nodes;
  out.h_max = 0.0;
  for (std::size_t t = 0; t < out.triangles.size(); ++t)
    out.h_max = std::max(out.h_max, out.tri_diameter(t));
  return out;
}

struct OrientedBoundaryEdge {
  std::size_t a, b;
  Point2 tangent, normal; // unit; normal points outward
  double length;
  std::string tag;
};

/// Boundary edges with outward normals and lengths, optionally tag-filtered.
inline std::vector<OrientedBoundaryEdge> boundary_edges(const Mesh& m,
                                                        const std::optional<std::string>& tag =
                                                            std::nullopt) {
  std::vector<OrientedBoundaryEdge> out;
  bool matched = false;
  for (auto& be : m.boundary_edges) {
    // untagged edges are not addressable; an empty filter never matches
    if (tag && (tag->empty() || be.tag != *tag)) continue;
    matched = true;
    Point2 t = normalized(m.nodes[be.b] - m.nodes[be.a]);
    out.push_back({be.a, be.b, t, {t.y, -t.x}, dist(m.nodes[be.a], m.nodes[be.b]), be.tag});
  }
  if (tag && !matched) fail(errc::unknown_tag, "no mesh boundary edge carries tag '" + *tag + "'");
  return out;
}

// ---------------------------------------------------------------------------
// Text format: "nodes N", "tris T", then "n x y", "t i j k", "b i j [tag]".
// Round-trips bit-exactly (doubles printed with %.17g).
// ---------------------------------------------------------------------------

inline void save_mesh(const Mesh& m, const std::filesystem::path& path) {
  std::ofstream os(path);
  require(bool(os), errc::io_error, "cannot open " + path.string());
  os << "nodes " << m.nodes.size() << "\n";
  os << "tris " << m.triangles.size() << "\n";
  char buf[96];
  for (auto& p : m.nodes) {
    std::snprintf(buf, sizeof buf, "n %.17g %.17g\n", p.x, p.y);
    os << buf;
  }
  for (auto& t : m.triangles) os << "t " << t[0] << " " << t[1] << " " << t[2] << "\n";
  for (auto& b : m.boundary_edges) {
    os << "b " << b.a << " " << b.b;
    if (!b.tag.empty()) os << " " << b.tag;
    os << "\n";
  }
  require(bool(os), errc::io_error, "write failed: " + path.string());
}

inline Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(bool(is), errc::io_error, "cannot open " + path.string());
  Mesh m;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (kind == "nodes" || kind == "tris") continue;
    if (kind == "n") {
      Point2 p;
      require(bool(ls >> p.x >> p.y), errc::io_error, "bad node line: " + line);
      m.nodes.push_back(p);
    } else if (kind == "t") {
      std::array<std::size_t, 3> t{};
      require(bool(ls >> t[0] >> t[1] >> t[2]), errc::io_error, "bad tri line: " + line);
      m.triangles.push_back(t);
    } else if (kind == "b") {
      MeshBoundaryEdge b;
      require(bool(ls >> b.a >> b.b), errc::io_error, "bad boundary line: " + line);
      ls >> b.tag; // optional
      m.boundary_edges.push_back(b);
    }
  }
  m.h_max = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    m.h_max = std::max(m.h_max, m.tri_diameter(t));
  // reconstruct corner nodes from boundary turns
  std::map<std::size_t, std::vector<std::size_t>> next;
  std::map<std::size_t, std::size_t> from;
  for (std::size_t i = 0; i < m.boundary_edges.size(); ++i) {
    next[m.boundary_edges[i].a].push_back(i);
    from[m.boundary_edges[i].b] = i;
  }
  for (auto& [node, outs] : next) {
    if (outs.size() != 1 || !from.count(node)) continue;
    auto& ein = m.boundary_edges[from[node]];
    auto& eout = m.boundary_edges[outs[0]];
    Point2 u = m.nodes[ein.b] - m.nodes[ein.a];
    Point2 w = m.nodes[eout.b] - m.nodes[eout.a];
    double turn = std::atan2(cross(u, w), dot(u, w));
    if (std::abs(turn) > 1e-9) m.corner_nodes.push_back({node, std::numbers::pi - turn});
  }
  std::sort(m.corner_nodes.begin(), m.corner_nodes.end());
  return m;
}

} // namespace fraclab
