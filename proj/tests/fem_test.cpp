#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fraclab/fem.hpp"
#include "fraclab/singular.hpp"

using namespace fraclab;
using std::numbers::pi;

namespace {

Mesh two_triangle_square() {
  Mesh m;
  m.nodes = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.boundary_edges = {{0, 1, ""}, {1, 2, ""}, {2, 3, ""}, {3, 0, ""}};
  m.h_max = std::sqrt(2.0);
  return m;
}

// L2 and H1-seminorm errors of an FE function against a closed form.
std::pair<double, double> errors_against(const FeFunction& u, const ScalarField& ref,
                                         int corner_subdiv = 0, Point2 corner = {0, 0}) {
  const Mesh& m = u.space.mesh();
  const auto& rule = triangle_rule(6);
  double l2 = 0, h1 = 0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    auto dofs = u.space.element_dofs(t);
    int nd = u.space.dofs_per_element();
    Point2 g0, g1, g2;
    double area;
    u.space.element_geometry(t, g0, g1, g2, area);
    const auto& tr = m.triangles[t];
    Point2 p0 = m.nodes[tr[0]], p1 = m.nodes[tr[1]], p2 = m.nodes[tr[2]];
    int levels = 0;
    if (corner_subdiv > 0) {
      double r = norm(m.tri_centroid(t) - corner);
      if (r < 4.0 * m.tri_diameter(t)) levels = corner_subdiv;
    }
    detail::for_subdivided(p0, p1, p2, levels, [&](Point2 a, Point2 b, Point2 c) {
      double sub_area = 0.5 * cross(b - a, c - a);
      for (const auto& q : rule) {
        Point2 x = q.l0 * a + q.l1 * b + q.l2 * c;
        double det = 2.0 * area;
        double m1 = cross(x - p0, p2 - p0) / det;
        double m2 = cross(p1 - p0, x - p0) / det;
        double m0 = 1.0 - m1 - m2;
        double N[6];
        Point2 G[6];
        u.space.shape(m0, m1, m2, N);
        u.space.shape_grad(m0, m1, m2, g0, g1, g2, G);
        double uv = 0;
        Point2 ug{};
        for (int i = 0; i < nd; ++i) {
          uv += N[i] * u.coeffs[dofs[i]];
          ug = ug + u.coeffs[dofs[i]] * G[i];
        }
        double dv = uv - ref.value(x);
        Point2 dg = ug - ref.grad(x);
        l2 += q.w * sub_area * dv * dv;
        h1 += q.w * sub_area * norm2(dg);
      }
    });
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

double fit_rate(const std::vector<double>& errs) {
  // least-squares slope of log2(err) against refinement level
  int n = int(errs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    double x = i, y = -std::log2(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

TEST(BuildSpace, DofCounts) {
  Mesh m = two_triangle_square();
  EXPECT_EQ(build_space(m, 1).dof_count(), 4u);
  EXPECT_EQ(build_space(m, 2).dof_count(), 9u); // 4 nodes + 5 edges
  try {
    build_space(m, 3);
    FAIL() << "expected BadOrder";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::bad_order);
  }
}

TEST(Assemble, StiffnessKernelIsConstants) {
  for (int order : {1, 2}) {
    FeSpace V = build_space(triangulate(unit_square(), 0.3), order);
    SpMat K = assemble(V, FormKind::stiffness);
    Vec ones = Vec::Ones(V.dof_count());
    EXPECT_LT((K * ones).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(Assemble, MassPartitionOfUnity) {
  for (int order : {1, 2}) {
    FeSpace V = build_space(triangulate(lshape(), 0.25), order);
    SpMat M = assemble(V, FormKind::mass);
    Vec ones = Vec::Ones(V.dof_count());
    EXPECT_NEAR(ones.dot(M * ones), 3.0, 1e-12);
  }
}

TEST(Assemble, WeightedMassDistanceIntegral) {
  Domain d = unit_square();
  FeSpace V = build_space(triangulate(d, 0.1), 2);
  auto rho = [&](Point2 p) { return distance_to_boundary(d, p); };
  SpMat W = assemble(V, FormKind::weighted_mass, rho);
  Vec ones = Vec::Ones(V.dof_count());
  // oracle: int_square dist(x, boundary) dx = 1/6 (four pyramidal wedges)
  EXPECT_NEAR(ones.dot(W * ones), 1.0 / 6.0, 2e-4);
}

TEST(SolveDirichlet, ConstantBoundaryGivesConstant) {
  FeSpace V = build_space(triangulate(unit_square(), 0.25), 2);
  auto u = solve_dirichlet(V, std::function<double(Point2)>([](Point2) { return 0.0; }),
                           [](Point2) { return 1.0; });
  EXPECT_LT((u.coeffs.array() - 1.0).abs().maxCoeff(), 1e-10);
}

TEST(SolveDirichlet, ManufacturedSineRateP1) {
  auto exact = [](Point2 p) { return std::sin(pi * p.x) * std::sin(pi * p.y); };
  ScalarField ref{
      exact,
      [](Point2 p) {
        return Point2{pi * std::cos(pi * p.x) * std::sin(pi * p.y),
                      pi * std::sin(pi * p.x) * std::cos(pi * p.y)};
      },
      {}};
  auto f = [&](Point2 p) { return 2 * pi * pi * exact(p); };
  Mesh m = triangulate(unit_square(), 0.2);
  std::vector<double> errs;
  for (int lvl = 0; lvl < 3; ++lvl) {
    FeSpace V = build_space(m, 1);
    SolveReport rep;
    auto u = solve_dirichlet(V, std::function<double(Point2)>(f), [](Point2) { return 0.0; }, &rep);
    EXPECT_LE(rep.relative_residual, 1e-10);
    errs.push_back(errors_against(u, ref).first);
    if (lvl < 2) m = refine(m);
  }
  double rate = fit_rate(errs);
  EXPECT_GE(rate, 1.8);
  EXPECT_LE(rate, 2.2);
}

TEST(SolveDirichlet, LShapeSingularRateUniform) {
  CornerFrame frame = CornerFrame::at({0, 0}, {1, 0});
  // huge cutoff radius: the plateau eta = 1 covers the whole L-shape
  ScalarField s = singular_function(frame, 2.0 / 3.0, 1e6);
  Mesh m = triangulate(lshape(), 0.25);
  std::vector<double> errs;
  for (int lvl = 0; lvl < 3; ++lvl) {
    FeSpace V = build_space(m, 1);
    auto u = harmonic_extension(V, s.value);
    errs.push_back(errors_against(u, s, 4).second);
    if (lvl < 2) m = refine(m);
  }
  double rate = fit_rate(errs);
  EXPECT_GE(rate, 0.57);
  EXPECT_LE(rate, 0.77);
}

TEST(HarmonicExtension, ReproducesLinears) {
  FeSpace V = build_space(triangulate(lshape(), 0.3), 1);
  auto u = harmonic_extension(V, [](Point2 p) { return p.x; });
  for (std::size_t i = 0; i < V.dof_count(); ++i)
    EXPECT_NEAR(u.coeffs[i], V.dof_coords()[i].x, 1e-10);
}

TEST(HarmonicExtension, ZeroDataGivesZero) {
  FeSpace V = build_space(triangulate(unit_square(), 0.3), 2);
  auto u = harmonic_extension(V, [](Point2) { return 0.0; });
  EXPECT_LT(u.coeffs.lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(HarmonicExtension, DiscreteMaximumPrincipleP1) {
  FeSpace V = build_space(triangulate(lshape(), 0.2), 1);
  auto g = [](Point2 p) { return std::cos(3 * p.x) + 0.5 * p.y; };
  auto u = harmonic_extension(V, g);
  double gmin = 1e300, gmax = -1e300;
  for (std::size_t i = 0; i < V.dof_count(); ++i) {
    if (!V.is_boundary_dof(i)) continue;
    gmin = std::min(gmin, u.coeffs[i]);
    gmax = std::max(gmax, u.coeffs[i]);
  }
  EXPECT_GE(u.coeffs.minCoeff(), gmin - 1e-10);
  EXPECT_LE(u.coeffs.maxCoeff(), gmax + 1e-10);
}

TEST(Eval, QuadraticHessianAndLinearGradient) {
  FeSpace V = build_space(triangulate(unit_square(), 0.3), 2);
  auto uq = interpolate(V, [](Point2 p) { return p.x * p.x; });
  ElementLocator loc(V.mesh());
  for (Point2 p : {Point2{0.3, 0.4}, Point2{0.71, 0.2}, Point2{0.5, 0.9}}) {
    Mat2 h = eval_at(uq, loc, p, Deriv::hess).hess;
    EXPECT_NEAR(h.a00, 2.0, 1e-9);
    EXPECT_NEAR(h.a01, 0.0, 1e-9);
    EXPECT_NEAR(h.a11, 0.0, 1e-9);
  }
  auto ul = interpolate(V, [](Point2 p) { return p.x; });
  Point2 g = eval_at(ul, loc, {0.37, 0.62}, Deriv::grad).grad;
  EXPECT_NEAR(g.x, 1.0, 1e-11);
  EXPECT_NEAR(g.y, 0.0, 1e-11);
}

TEST(Eval, HessOnP1Throws) {
  FeSpace V = build_space(triangulate(unit_square(), 0.3), 1);
  auto u = interpolate(V, [](Point2 p) { return p.x; });
  try {
    eval(u, {0.5, 0.5}, Deriv::hess);
    FAIL() << "expected HessOnP1";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::hess_on_p1);
  }
}

TEST(Eval, OutsideMeshThrows) {
  FeSpace V = build_space(triangulate(unit_square(), 0.3), 1);
  auto u = interpolate(V, [](Point2 p) { return p.x; });
  try {
    eval(u, {1.5, 0.5}, Deriv::value);
    FAIL() << "expected OutsideMesh";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::outside_mesh);
  }
}

TEST(WeakLaplacianResidual, SolutionAndPerturbation) {
  FeSpace V = build_space(triangulate(unit_square(), 0.2), 1);
  auto f = [](Point2 p) { return 2 * pi * pi * std::sin(pi * p.x) * std::sin(pi * p.y); };
  auto u = solve_dirichlet(V, std::function<double(Point2)>(f), [](Point2) { return 0.0; });
  EXPECT_LE(weak_laplacian_residual(V, u, f), 1e-9);
  // one interior hat perturbation makes it strictly positive
  FeFunction up = u;
  for (std::size_t i = 0; i < V.dof_count(); ++i)
    if (!V.is_boundary_dof(i)) {
      up.coeffs[i] += 1.0;
      break;
    }
  EXPECT_GT(weak_laplacian_residual(V, up, f), 1e-3);
}

TEST(WeakLaplacianResidual, ManufacturedLoadVector) {
  FeSpace V = build_space(triangulate(lshape(), 0.25), 2);
  Vec c = Vec::LinSpaced(V.dof_count(), -0.7, 1.3);
  FeFunction u{V, c};
  SpMat K = assemble(V, FormKind::stiffness);
  Vec load = K * c;
  EXPECT_LE(weak_laplacian_residual_load(V, u, load), 1e-12);
}

TEST(Energy, MonotoneUnderRefinement) {
  auto f = [](Point2 p) { return 2 * pi * pi * std::sin(pi * p.x) * std::sin(pi * p.y); };
  Mesh m = triangulate(unit_square(), 0.25);
  std::vector<double> energies;
  for (int lvl = 0; lvl < 3; ++lvl) {
    FeSpace V = build_space(m, 1);
    auto u = solve_dirichlet(V, std::function<double(Point2)>(f), [](Point2) { return 0.0; });
    SpMat K = assemble(V, FormKind::stiffness);
    energies.push_back(u.coeffs.dot(K * u.coeffs));
    if (lvl < 2) m = refine(m);
  }
  EXPECT_LT(energies[0], energies[1]);
  EXPECT_LT(energies[1], energies[2]);
  // exact Dirichlet energy of sin sin is pi^2/2
  EXPECT_LT(energies[2], pi * pi / 2);
}
