#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/point.hpp"

namespace fraclab {

/// One quadrature node in barycentric coordinates; weights sum to 1.
struct BaryNode {
  double l0, l1, l2, w;
};

/// Symmetric triangle rules (Dunavant), exact to the stated polynomial degree.
inline const std::vector<BaryNode>& triangle_rule(int degree) {
  static const std::vector<BaryNode> deg1 = {{1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0}};
  static const std::vector<BaryNode> deg2 = {
      {2.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 3},
      {1.0 / 6, 2.0 / 3, 1.0 / 6, 1.0 / 3},
      {1.0 / 6, 1.0 / 6, 2.0 / 3, 1.0 / 3},
  };
  static const std::vector<BaryNode> deg4 = [] {
    std::vector<BaryNode> r;
    const double a1 = 0.108103018168070, b1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.816847572980459, b2 = 0.091576213509771, w2 = 0.109951743655322;
    r.push_back({a1, b1, b1, w1});
    r.push_back({b1, a1, b1, w1});
    r.push_back({b1, b1, a1, w1});
    r.push_back({a2, b2, b2, w2});
    r.push_back({b2, a2, b2, w2});
    r.push_back({b2, b2, a2, w2});
    return r;
  }();
  static const std::vector<BaryNode> deg6 = [] {
    std::vector<BaryNode> r;
    const double a1 = 0.501426509658179, b1 = 0.249286745170910, w1 = 0.116786275726379;
    const double a2 = 0.873821971016996, b2 = 0.063089014491502, w2 = 0.050844906370207;
    const double a3 = 0.053145049844817, b3 = 0.310352451033784, c3 = 0.636502499121399,
                 w3 = 0.082851075618374;
    r.push_back({a1, b1, b1, w1});
    r.push_back({b1, a1, b1, w1});
    r.push_back({b1, b1, a1, w1});
    r.push_back({a2, b2, b2, w2});
    r.push_back({b2, a2, b2, w2});
    r.push_back({b2, b2, a2, w2});
    const double p3[6][3] = {{a3, b3, c3}, {a3, c3, b3}, {b3, a3, c3},
                             {b3, c3, a3}, {c3, a3, b3}, {c3, b3, a3}};
    for (auto& p : p3) r.push_back({p[0], p[1], p[2], w3});
    return r;
  }();
  if (degree <= 1) return deg1;
  if (degree <= 2) return deg2;
  if (degree <= 4) return deg4;
  return deg6;
}

/// Gauss-Legendre nodes/weights on [0,1]; weights sum to 1.
struct GaussNode {
  double t, w;
};

inline const std::vector<GaussNode>& gauss_rule(int npts) {
  auto make = [](std::initializer_list<double> xs, std::initializer_list<double> ws) {
    std::vector<GaussNode> r;
    auto xi = xs.begin();
    auto wi = ws.begin();
    for (; xi != xs.end(); ++xi, ++wi) r.push_back({0.5 * (1.0 + *xi), 0.5 * *wi});
    return r;
  };
  static const std::vector<GaussNode> g1 = make({0.0}, {2.0});
  static const std::vector<GaussNode> g2 =
      make({-0.5773502691896257, 0.5773502691896257}, {1.0, 1.0});
  static const std::vector<GaussNode> g3 = make({-0.7745966692414834, 0.0, 0.7745966692414834},
                                                {5.0 / 9, 8.0 / 9, 5.0 / 9});
  static const std::vector<GaussNode> g4 =
      make({-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526},
           {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538});
  static const std::vector<GaussNode> g5 = make(
      {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640},
      {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
       0.2369268850561891});
  static const std::vector<GaussNode> g8 =
      make({-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
            0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363},
           {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
            0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763});
  switch (npts) {
    case 1: return g1;
    case 2: return g2;
    case 3: return g3;
    case 4: return g4;
    case 5: return g5;
    default: return g8;
  }
}

/// Adaptive Simpson on [a,b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-11, int max_depth = 40) {
  auto simpson = [&](double x0, double x2, double f0, double f1, double f2) {
    return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2);
  };
  struct Rec {
    double a, b, fa, fm, fb, whole;
    int depth;
  };
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = simpson(a, b, fa, fm, fb);
  std::vector<Rec> stack{{a, b, fa, fm, fb, whole, 0}};
  double total = 0.0;
  while (!stack.empty()) {
    Rec r = stack.back();
    stack.pop_back();
    double m = 0.5 * (r.a + r.b);
    double flm = f(0.5 * (r.a + m)), frm = f(0.5 * (m + r.b));
    double left = simpson(r.a, m, r.fa, flm, r.fm);
    double right = simpson(m, r.b, r.fm, frm, r.fb);
    double delta = left + right - r.whole;
    if (r.depth >= max_depth || std::abs(delta) <= 15.0 * tol) {
      total += left + right + delta / 15.0;
    } else {
      stack.push_back({r.a, m, r.fa, flm, r.fm, left, r.depth + 1});
      stack.push_back({m, r.b, r.fm, frm, r.fb, right, r.depth + 1});
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Convex polygon helpers used by the singular pair quadrature.
// ---------------------------------------------------------------------------

using Poly = std::vector<Point2>; // convex, counter-clockwise

/// Clip a convex polygon by the half plane { x : dot(n,x) <= c }.
inline Poly clip_halfplane(const Poly& poly, Point2 n, double c) {
  Poly out;
  size_t m = poly.size();
  if (m == 0) return out;
  out.reserve(m + 1);
  for (size_t i = 0; i < m; ++i) {
    Point2 p = poly[i], q = poly[(i + 1) % m];
    double dp = dot(n, p) - c, dq = dot(n, q) - c;
    if (dp <= 0.0) out.push_back(p);
    if ((dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0)) {
      double t = dp / (dp - dq);
      out.push_back(p + t * (q - p));
    }
  }
  return out;
}

/// Intersection of two convex CCW polygons (Sutherland-Hodgman).
inline Poly clip_convex(const Poly& subject, const Poly& clip) {
  Poly out = subject;
  size_t m = clip.size();
  for (size_t i = 0; i < m && !out.empty(); ++i) {
    Point2 a = clip[i], b = clip[(i + 1) % m];
    Point2 n = {-(b - a).y, (b - a).x}; // inward normal for CCW
    // keep dot(n, x - a) >= 0  <=>  dot(-n, x) <= dot(-n, a)
    out = clip_halfplane(out, -1.0 * n, dot(-1.0 * n, a));
  }
  return out;
}

/// Monomial moments int_P x^a y^b dA for a+b <= maxdeg (<=4), CCW polygon.
/// Index layout: m[k] with k enumerating (a,b) in graded lex order:
/// (0,0),(1,0),(0,1),(2,0),(1,1),(0,2),(3,0),(2,1),(1,2),(0,3),(4,0),(3,1),(2,2),(1,3),(0,4).
inline constexpr int moment_index(int a, int b) {
  int d = a + b;
  return d * (d + 1) / 2 + b;
}

template <int MaxDeg>
inline std::array<double, (MaxDeg + 1) * (MaxDeg + 2) / 2> polygon_moments(const Poly& poly) {
  constexpr int N = (MaxDeg + 1) * (MaxDeg + 2) / 2;
  std::array<double, N> mom{};
  size_t m = poly.size();
  if (m < 3) return mom;
  static const double binom[7][7] = {{1, 0, 0, 0, 0, 0, 0},      {1, 1, 0, 0, 0, 0, 0},
                                     {1, 2, 1, 0, 0, 0, 0},      {1, 3, 3, 1, 0, 0, 0},
                                     {1, 4, 6, 4, 1, 0, 0},      {1, 5, 10, 10, 5, 1, 0},
                                     {1, 6, 15, 20, 15, 6, 1}};
  // Green's theorem: int_P x^a y^b dA = 1/(a+1) * oint x^(a+1) y^b dy.
  for (size_t e = 0; e < m; ++e) {
    Point2 p = poly[e], q = poly[(e + 1) % m];
    double dx = q.x - p.x, dy = q.y - p.y;
    if (dy == 0.0) continue;
    // powers of the affine parametrization
    double px[MaxDeg + 2], pdx[MaxDeg + 2], py[MaxDeg + 1], pdy[MaxDeg + 1];
    px[0] = 1;
    pdx[0] = 1;
    for (int i = 1; i <= MaxDeg + 1; ++i) {
      px[i] = px[i - 1] * p.x;
      pdx[i] = pdx[i - 1] * dx;
    }
    py[0] = 1;
    pdy[0] = 1;
    for (int i = 1; i <= MaxDeg; ++i) {
      py[i] = py[i - 1] * p.y;
      pdy[i] = pdy[i - 1] * dy;
    }
    for (int a = 0; a <= MaxDeg; ++a) {
      for (int b = 0; b + a <= MaxDeg; ++b) {
        // int_0^1 (p.x + t dx)^(a+1) (p.y + t dy)^b dt
        double s = 0.0;
        for (int i = 0; i <= a + 1; ++i) {
          double ci = binom[a + 1][i] * px[a + 1 - i] * pdx[i];
          for (int j = 0; j <= b; ++j) {
            double cj = binom[b][j] * py[b - j] * pdy[j];
            s += ci * cj / double(i + j + 1);
          }
        }
        mom[moment_index(a, b)] += dy * s / double(a + 1);
      }
    }
  }
  return mom;
}

inline double polygon_area(const Poly& poly) {
  double s = 0.0;
  size_t m = poly.size();
  for (size_t i = 0; i < m; ++i) s += cross(poly[i], poly[(i + 1) % m]);
  return 0.5 * s;
}

/// Convex hull (monotone chain), CCW output.
inline Poly convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  size_t n = pts.size();
  if (n < 3) return pts;
  Poly h(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

/// Chord of the ray {t*dir : t>=0} inside a convex CCW polygon. Returns false
/// when the intersection is empty or a single point.
inline bool ray_convex_chord(const Poly& poly, Point2 dir, double& t0, double& t1) {
  t0 = 0.0;
  t1 = std::numeric_limits<double>::infinity();
  size_t m = poly.size();
  for (size_t i = 0; i < m; ++i) {
    Point2 a = poly[i], b = poly[(i + 1) % m];
    Point2 n = perp(b - a); // inward for CCW
    double num = dot(n, a); // constraint: dot(n, x) >= dot(n, a), x = t*dir
    double den = dot(n, dir);
    if (std::abs(den) < 1e-300) {
      if (-num > 1e-14 * (std::abs(num) + 1)) return false; // 0 >= num must hold
      continue;
    }
    double t = num / den;
    if (den > 0) t0 = std::max(t0, t);
    else t1 = std::min(t1, t);
  }
  return t1 > t0 * (1 + 1e-14) + 1e-300;
}

} // namespace fraclab
