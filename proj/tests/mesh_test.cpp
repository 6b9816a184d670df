#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "fraclab/mesh.hpp"

using namespace fraclab;
using std::numbers::pi;

namespace {

void check_conforming(const Mesh& m) {
  std::map<std::pair<std::size_t, std::size_t>, int> ecount;
  for (auto& t : m.triangles) {
    EXPECT_GT(0.5 * cross(m.nodes[t[1]] - m.nodes[t[0]], m.nodes[t[2]] - m.nodes[t[0]]), 0.0);
    for (int e = 0; e < 3; ++e) {
      auto a = t[e], b = t[(e + 1) % 3];
      ecount[{std::min(a, b), std::max(a, b)}]++;
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> bset;
  for (auto& be : m.boundary_edges) bset.insert({std::min(be.a, be.b), std::max(be.a, be.b)});
  for (auto& [e, c] : ecount) {
    EXPECT_LE(c, 2);
    if (c == 1) EXPECT_TRUE(bset.count(e)) << "boundary edge not recorded";
    if (c == 2) EXPECT_FALSE(bset.count(e));
  }
}

} // namespace

TEST(Triangulate, CoarseSquareSanity) {
  Domain d = unit_square();
  Mesh m = triangulate(d, 0.5);
  EXPECT_GE(m.triangles.size(), 4u);
  for (auto& p : m.nodes) {
    EXPECT_GE(p.x, -1e-12);
    EXPECT_LE(p.x, 1 + 1e-12);
    EXPECT_GE(p.y, -1e-12);
    EXPECT_LE(p.y, 1 + 1e-12);
  }
  check_conforming(m);
  EXPECT_NEAR(m.total_area(), 1.0, 1e-12);
  EXPECT_LE(m.h_max, 0.5 + 1e-12);
  EXPECT_GE(m.min_angle() * 180 / pi, 20.0);
}

TEST(Triangulate, BadParamOnZeroH) {
  try {
    triangulate(unit_square(), 0.0);
    FAIL() << "expected BadParam";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::bad_param);
  }
}

TEST(Triangulate, DomainsAreaAndQuality) {
  struct Case {
    Domain d;
    double area;
    double h;
  };
  std::vector<Case> cases;
  cases.push_back({unit_square(), 1.0, 0.2});
  cases.push_back({lshape(), 3.0, 0.2});
  cases.push_back({make_sawtooth(SawtoothParams::from_k(2)),
                   0.25 - 0.5 * 0.125 * 0.125 * 4, 0.04});
  for (auto& c : cases) {
    Mesh m = triangulate(c.d, c.h);
    check_conforming(m);
    EXPECT_NEAR(m.total_area(), c.area, 1e-12 * std::max(1.0, c.area));
    EXPECT_GE(m.min_angle() * 180 / pi, 20.0);
    EXPECT_LE(m.h_max, c.h * (1 + 1e-12));
    // every domain vertex is a mesh node
    for (auto& v : c.d.vertices()) {
      bool found = false;
      for (auto& p : m.nodes)
        if (dist(p, v) < 1e-14) found = true;
      EXPECT_TRUE(found);
    }
  }
}

TEST(Triangulate, GradedSlopeNearReentrantCorner) {
  Domain d = lshape();
  double h = 0.1, gamma = 0.5;
  Mesh m = triangulate(d, h, gamma);
  check_conforming(m);
  // log-log fit of element diameter vs corner distance
  std::vector<double> lx, ly;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    Point2 c = m.tri_centroid(t);
    double r = norm(c);
    if (r < 1e-3 || r > 0.5) continue;
    lx.push_back(std::log(r));
    ly.push_back(std::log(m.tri_diameter(t)));
  }
  ASSERT_GT(lx.size(), 50u);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  double n = double(lx.size());
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope, 1.0 - gamma, 0.15 * (1.0 - gamma));
  // diameters adjacent to the corner obey h * rho^{1-gamma} up to a constant
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    Point2 c = m.tri_centroid(t);
    double r = norm(c);
    if (r > 0.3) continue;
    EXPECT_LE(m.tri_diameter(t), 2.0 * h * std::pow(r + m.tri_diameter(t), 1.0 - gamma));
  }
}

TEST(Refine, TwoTriangleSquare) {
  Mesh m;
  m.nodes = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.boundary_edges = {{0, 1, ""}, {1, 2, ""}, {2, 3, ""}, {3, 0, ""}};
  m.h_max = std::sqrt(2.0);
  Mesh r = refine(m);
  EXPECT_EQ(r.triangles.size(), 8u);
  EXPECT_EQ(r.boundary_edges.size(), 8u);
  check_conforming(r);
  EXPECT_NEAR(r.total_area(), 1.0, 1e-14);
  EXPECT_NEAR(r.h_max, m.h_max / 2, 1e-14);
}

TEST(Refine, TwiceQuartersHmaxAndKeepsTags) {
  Domain d = make_sawtooth(SawtoothParams::from_k(2));
  Mesh m = triangulate(d, 0.05);
  Mesh r2 = refine(refine(m));
  EXPECT_NEAR(r2.h_max / m.h_max, 0.25, 0.05 * 0.25);
  check_conforming(r2);
  // tag set preserved as a multiset over subdivided edges
  double len_orig = 0, len_ref = 0;
  for (auto& e : boundary_edges(m, std::string("gamma_eps"))) len_orig += e.length;
  for (auto& e : boundary_edges(r2, std::string("gamma_eps"))) len_ref += e.length;
  EXPECT_NEAR(len_orig, len_ref, 1e-12);
  EXPECT_NEAR(len_ref, std::sqrt(2.0) / 2, 1e-12);
}

TEST(BoundaryEdges, SquareTotalLength) {
  Mesh m = triangulate(unit_square(), 0.3);
  double len = 0;
  for (auto& e : boundary_edges(m)) len += e.length;
  EXPECT_NEAR(len, 4.0, 1e-12);
}

TEST(BoundaryEdges, UnknownTag) {
  Mesh m = triangulate(unit_square(), 0.3);
  try {
    boundary_edges(m, std::string("bogus"));
    FAIL() << "expected UnknownTag";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::unknown_tag);
  }
}

TEST(MeshIo, BitExactRoundTrip) {
  namespace fs = std::filesystem;
  Mesh m = triangulate(make_sawtooth(SawtoothParams::from_k(2)), 0.06);
  auto p1 = fs::temp_directory_path() / "fraclab_mesh_a.txt";
  auto p2 = fs::temp_directory_path() / "fraclab_mesh_b.txt";
  save_mesh(m, p1);
  Mesh m2 = load_mesh(p1);
  save_mesh(m2, p2);
  std::ifstream f1(p1), f2(p2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  EXPECT_EQ(s1.str(), s2.str());
  EXPECT_EQ(m.nodes.size(), m2.nodes.size());
  EXPECT_NEAR(m2.h_max, m.h_max, 1e-15);
  fs::remove(p1);
  fs::remove(p2);
}

TEST(Triangulate, SawtoothFineTeethK8) {
  Domain d = make_sawtooth(SawtoothParams::from_k(8));
  double eps = 1.0 / 32.0;
  double flank = std::sqrt(2.0) * eps;
  // resolve each flank with >= 8 elements
  auto size = [&](Point2 p) {
    double t = std::clamp((p.y - 2 * eps) / 0.2, 0.0, 1.0);
    return flank / 8.0 * (1.0 - t) + 0.04 * t;
  };
  Mesh m = triangulate_sized(d, size);
  check_conforming(m);
  EXPECT_GE(m.min_angle() * 180 / pi, 20.0);
  int worst = 1000;
  std::map<std::pair<long, long>, int> per_flank;
  for (auto& e : boundary_edges(m, std::string("gamma_eps"))) {
    Point2 mid = 0.5 * (m.nodes[e.a] + m.nodes[e.b]);
    long flank_id = long(std::floor(mid.x / eps));
    per_flank[{flank_id, 0}]++;
  }
  for (auto& [k, c] : per_flank) worst = std::min(worst, c);
  EXPECT_GE(worst, 8);
}
