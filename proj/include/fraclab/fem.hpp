#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <map>
#include <memory>
#include <unordered_map>
#include <variant>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/mesh.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

/// Scalar field given in closed form; grad/hess optional depending on use.
struct ScalarField {
  std::function<double(Point2)> value;
  std::function<Point2(Point2)> grad;
  std::function<Mat2(Point2)> hess;
};

/// P1/P2 Lagrange space on a triangulation. Cheap to copy (shares the mesh).
class FeSpace {
public:
  FeSpace() = default;

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  int order() const { return order_; }
  std::size_t dof_count() const { return dof_coords_.size(); }
  const std::vector<Point2>& dof_coords() const { return dof_coords_; }
  const std::vector<char>& boundary_mask() const { return boundary_mask_; }
  bool is_boundary_dof(std::size_t i) const { return boundary_mask_[i] != 0; }

  /// Global dofs of element t: vertices, then (P2) midside dofs opposite
  /// local order (01, 12, 20).
  std::array<std::size_t, 6> element_dofs(std::size_t t) const {
    const auto& tr = mesh_->triangles[t];
    std::array<std::size_t, 6> out{tr[0], tr[1], tr[2], 0, 0, 0};
    if (order_ == 2) {
      out[3] = edge_dof(tr[0], tr[1]);
      out[4] = edge_dof(tr[1], tr[2]);
      out[5] = edge_dof(tr[2], tr[0]);
    }
    return out;
  }
  int dofs_per_element() const { return order_ == 1 ? 3 : 6; }

  std::size_t edge_dof(std::size_t a, std::size_t b) const {
    auto it = edge_dofs_.find(ekey(a, b));
    require(it != edge_dofs_.end(), errc::bad_param, "unknown edge");
    return it->second;
  }

  /// Basis values at barycentric coordinates, local order matching element_dofs.
  void shape(double l0, double l1, double l2, double* out) const {
    if (order_ == 1) {
      out[0] = l0;
      out[1] = l1;
      out[2] = l2;
    } else {
      out[0] = l0 * (2 * l0 - 1);
      out[1] = l1 * (2 * l1 - 1);
      out[2] = l2 * (2 * l2 - 1);
      out[3] = 4 * l0 * l1;
      out[4] = 4 * l1 * l2;
      out[5] = 4 * l2 * l0;
    }
  }

  /// Gradients of the basis at barycentric coordinates, given the (constant)
  /// barycentric gradients g0,g1,g2 of the element.
  void shape_grad(double l0, double l1, double l2, Point2 g0, Point2 g1, Point2 g2,
                  Point2* out) const {
    if (order_ == 1) {
      out[0] = g0;
      out[1] = g1;
      out[2] = g2;
    } else {
      out[0] = (4 * l0 - 1) * g0;
      out[1] = (4 * l1 - 1) * g1;
      out[2] = (4 * l2 - 1) * g2;
      out[3] = 4.0 * (l1 * g0 + l0 * g1);
      out[4] = 4.0 * (l2 * g1 + l1 * g2);
      out[5] = 4.0 * (l0 * g2 + l2 * g0);
    }
  }

  /// Barycentric gradients of element t and twice its area.
  void element_geometry(std::size_t t, Point2& g0, Point2& g1, Point2& g2, double& area) const {
    const auto& tr = mesh_->triangles[t];
    Point2 p0 = mesh_->nodes[tr[0]], p1 = mesh_->nodes[tr[1]], p2 = mesh_->nodes[tr[2]];
    double det = cross(p1 - p0, p2 - p0);
    area = 0.5 * det;
    g0 = perp(p2 - p1) * (1.0 / det);
    g1 = perp(p0 - p2) * (1.0 / det);
    g2 = perp(p1 - p0) * (1.0 / det);
  }

  friend FeSpace build_space(std::shared_ptr<const Mesh> mesh, int order);

private:
  static std::uint64_t ekey(std::size_t a, std::size_t b) {
    auto lo = std::min(a, b), hi = std::max(a, b);
    return (std::uint64_t(lo) << 32) | std::uint64_t(hi);
  }

  std::shared_ptr<const Mesh> mesh_;
  int order_ = 1;
  std::vector<Point2> dof_coords_;
  std::vector<char> boundary_mask_;
  std::unordered_map<std::uint64_t, std::size_t> edge_dofs_;
};

inline FeSpace build_space(std::shared_ptr<const Mesh> mesh, int order) {
  require(order == 1 || order == 2, errc::bad_order, "order must be 1 or 2");
  FeSpace s;
  s.mesh_ = std::move(mesh);
  s.order_ = order;
  const Mesh& m = *s.mesh_;
  s.dof_coords_ = m.nodes;
  s.boundary_mask_.assign(m.nodes.size(), 0);
  for (auto& be : m.boundary_edges) {
    s.boundary_mask_[be.a] = 1;
    s.boundary_mask_[be.b] = 1;
  }
  if (order == 2) {
    for (auto& t : m.triangles) {
      for (int e = 0; e < 3; ++e) {
        auto a = t[e], b = t[(e + 1) % 3];
        auto key = FeSpace::ekey(a, b);
        if (!s.edge_dofs_.count(key)) {
          s.edge_dofs_[key] = s.dof_coords_.size();
          s.dof_coords_.push_back(0.5 * (m.nodes[a] + m.nodes[b]));
          s.boundary_mask_.push_back(0);
        }
      }
    }
    for (auto& be : m.boundary_edges) s.boundary_mask_[s.edge_dof(be.a, be.b)] = 1;
  }
  return s;
}

inline FeSpace build_space(const Mesh& m, int order) {
  return build_space(std::make_shared<Mesh>(m), order);
}

/// Coefficient vector over an FeSpace.
struct FeFunction {
  FeSpace space;
  Vec coeffs;
};

// ---------------------------------------------------------------------------
// Point evaluation
// ---------------------------------------------------------------------------

/// Uniform-grid element locator.
class ElementLocator {
public:
  explicit ElementLocator(const Mesh& m) : mesh_(&m) {
    for (auto& p : m.nodes) {
      lo_.x = std::min(lo_.x, p.x);
      lo_.y = std::min(lo_.y, p.y);
      hi_.x = std::max(hi_.x, p.x);
      hi_.y = std::max(hi_.y, p.y);
    }
    double span = std::max(hi_.x - lo_.x, hi_.y - lo_.y);
    cell_ = std::max(2.0 * m.h_max, span / 512);
    nx_ = int((hi_.x - lo_.x) / cell_) + 1;
    ny_ = int((hi_.y - lo_.y) / cell_) + 1;
    cells_.resize(std::size_t(nx_) * ny_);
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      const auto& tr = m.triangles[t];
      Point2 a = m.nodes[tr[0]], b = m.nodes[tr[1]], c = m.nodes[tr[2]];
      double xlo = std::min({a.x, b.x, c.x}), xhi = std::max({a.x, b.x, c.x});
      double ylo = std::min({a.y, b.y, c.y}), yhi = std::max({a.y, b.y, c.y});
      for (int i = ix(xlo); i <= ix(xhi); ++i)
        for (int j = iy(ylo); j <= iy(yhi); ++j) cells_[std::size_t(j) * nx_ + i].push_back(t);
    }
  }

  /// Containing element and barycentric coordinates; OutsideMesh if none.
  std::size_t locate(Point2 p, double& l0, double& l1, double& l2, double tol = 1e-10) const {
    int i = ix(p.x), j = iy(p.y);
    std::size_t best = SIZE_MAX;
    double best_viol = 1e300;
    if (i >= 0 && i < nx_ && j >= 0 && j < ny_) {
      for (auto t : cells_[std::size_t(j) * nx_ + i]) {
        const auto& tr = mesh_->triangles[t];
        Point2 a = mesh_->nodes[tr[0]], b = mesh_->nodes[tr[1]], c = mesh_->nodes[tr[2]];
        double det = cross(b - a, c - a);
        double m1 = cross(p - a, c - a) / det;
        double m2 = cross(b - a, p - a) / det;
        double m0 = 1.0 - m1 - m2;
        double viol = -std::min({m0, m1, m2});
        if (viol < best_viol) {
          best_viol = viol;
          best = t;
          l0 = m0;
          l1 = m1;
          l2 = m2;
        }
      }
    }
    if (best == SIZE_MAX || best_viol > tol) fail(errc::outside_mesh, "point outside mesh");
    return best;
  }

private:
  int ix(double x) const { return std::clamp(int((x - lo_.x) / cell_), 0, nx_ - 1); }
  int iy(double y) const { return std::clamp(int((y - lo_.y) / cell_), 0, ny_ - 1); }
  const Mesh* mesh_;
  Point2 lo_{1e300, 1e300}, hi_{-1e300, -1e300};
  double cell_ = 1;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<std::size_t>> cells_;
};

enum class Deriv { value, grad, hess };

/// Element-wise constant Hessian of a P2 function on element t.
inline Mat2 element_hessian(const FeFunction& u, std::size_t t) {
  require(u.space.order() == 2, errc::hess_on_p1, "Hessian needs a P2 space");
  Point2 g0, g1, g2;
  double area;
  u.space.element_geometry(t, g0, g1, g2, area);
  auto dofs = u.space.element_dofs(t);
  Point2 g[3] = {g0, g1, g2};
  Mat2 h{};
  auto add_outer = [&](Point2 a, Point2 b, double c) {
    h.a00 += c * a.x * b.x;
    h.a01 += c * 0.5 * (a.x * b.y + a.y * b.x);
    h.a10 += c * 0.5 * (a.x * b.y + a.y * b.x);
    h.a11 += c * a.y * b.y;
  };
  for (int i = 0; i < 3; ++i) add_outer(g[i], g[i], 4.0 * u.coeffs[dofs[i]]);
  add_outer(g0, g1, 8.0 * u.coeffs[dofs[3]]);
  add_outer(g1, g2, 8.0 * u.coeffs[dofs[4]]);
  add_outer(g2, g0, 8.0 * u.coeffs[dofs[5]]);
  return h;
}

struct EvalResult {
  double value = 0;
  Point2 grad{};
  Mat2 hess{};
};

inline EvalResult eval_at(const FeFunction& u, const ElementLocator& loc, Point2 p, Deriv d) {
  double l0, l1, l2;
  std::size_t t = loc.locate(p, l0, l1, l2);
  EvalResult r;
  auto dofs = u.space.element_dofs(t);
  int nd = u.space.dofs_per_element();
  if (d == Deriv::value) {
    double N[6];
    u.space.shape(l0, l1, l2, N);
    for (int i = 0; i < nd; ++i) r.value += N[i] * u.coeffs[dofs[i]];
  } else if (d == Deriv::grad) {
    Point2 g0, g1, g2;
    double area;
    u.space.element_geometry(t, g0, g1, g2, area);
    Point2 G[6];
    u.space.shape_grad(l0, l1, l2, g0, g1, g2, G);
    for (int i = 0; i < nd; ++i) r.grad = r.grad + u.coeffs[dofs[i]] * G[i];
  } else {
    r.hess = element_hessian(u, t);
  }
  return r;
}

/// One-off evaluation (builds a locator; prefer ElementLocator for loops).
inline EvalResult eval(const FeFunction& u, Point2 p, Deriv d) {
  ElementLocator loc(u.space.mesh());
  return eval_at(u, loc, p, d);
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

enum class FormKind { stiffness, mass, weighted_mass };

struct AssemblyOptions {
  int quad_degree = 6;
  // weighted forms: red-subdivide elements touching the boundary this many
  // times before applying the rule (the weights rho^beta vary fastest there)
  int boundary_subdiv = 3;
};

namespace detail {

template <class F>
void for_subdivided(Point2 a, Point2 b, Point2 c, int levels, const F& f) {
  if (levels <= 0) {
    f(a, b, c);
    return;
  }
  Point2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
  for_subdivided(a, ab, ca, levels - 1, f);
  for_subdivided(b, bc, ab, levels - 1, f);
  for_subdivided(c, ca, bc, levels - 1, f);
  for_subdivided(ab, bc, ca, levels - 1, f);
}

} // namespace detail

/// Assemble stiffness, mass, or weighted mass. Weighted forms take a positive
/// weight evaluated at physical quadrature points.
inline SpMat assemble(const FeSpace& space, FormKind kind,
                      const std::function<double(Point2)>& weight = {},
                      const AssemblyOptions& opts = {}) {
  const Mesh& m = space.mesh();
  std::size_t n = space.dof_count();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(m.triangles.size() * 36);
  const auto& rule = triangle_rule(opts.quad_degree);
  int nd = space.dofs_per_element();

  std::vector<char> touches_boundary(m.triangles.size(), 0);
  if (kind == FormKind::weighted_mass) {
    require(bool(weight), errc::bad_param, "weighted_mass needs a weight");
    std::vector<char> bnode(m.nodes.size(), 0);
    for (auto& be : m.boundary_edges) bnode[be.a] = bnode[be.b] = 1;
    for (std::size_t t = 0; t < m.triangles.size(); ++t)
      for (auto v : m.triangles[t])
        if (bnode[v]) touches_boundary[t] = 1;
  }

  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    auto dofs = space.element_dofs(t);
    Point2 g0, g1, g2;
    double area;
    space.element_geometry(t, g0, g1, g2, area);
    double local[36] = {0};
    const auto& tr = m.triangles[t];
    Point2 p0 = m.nodes[tr[0]], p1 = m.nodes[tr[1]], p2 = m.nodes[tr[2]];

    if (kind == FormKind::stiffness) {
      for (const auto& q : rule) {
        Point2 G[6];
        space.shape_grad(q.l0, q.l1, q.l2, g0, g1, g2, G);
        double w = q.w * area;
        for (int i = 0; i < nd; ++i)
          for (int j = 0; j <= i; ++j) local[i * 6 + j] += w * dot(G[i], G[j]);
      }
    } else if (kind == FormKind::mass) {
      for (const auto& q : rule) {
        double N[6];
        space.shape(q.l0, q.l1, q.l2, N);
        double w = q.w * area;
        for (int i = 0; i < nd; ++i)
          for (int j = 0; j <= i; ++j) local[i * 6 + j] += w * N[i] * N[j];
      }
    } else {
      int levels = touches_boundary[t] ? opts.boundary_subdiv : 0;
      detail::for_subdivided(p0, p1, p2, levels, [&](Point2 a, Point2 b, Point2 c) {
        double sub_area = 0.5 * cross(b - a, c - a);
        for (const auto& q : rule) {
          Point2 x = q.l0 * a + q.l1 * b + q.l2 * c;
          // barycentric of x within the parent element
          double det = 2.0 * area;
          double m1 = cross(x - p0, p2 - p0) / det;
          double m2 = cross(p1 - p0, x - p0) / det;
          double m0 = 1.0 - m1 - m2;
          double wv = weight(x);
          require(std::isfinite(wv) && wv >= 0, errc::quadrature_failure,
                  "weight not finite at quadrature point");
          double N[6];
          space.shape(m0, m1, m2, N);
          double w = q.w * sub_area * wv;
          for (int i = 0; i < nd; ++i)
            for (int j = 0; j <= i; ++j) local[i * 6 + j] += w * N[i] * N[j];
        }
      });
    }
    for (int i = 0; i < nd; ++i)
      for (int j = 0; j <= i; ++j) {
        trips.emplace_back(dofs[i], dofs[j], local[i * 6 + j]);
        if (i != j) trips.emplace_back(dofs[j], dofs[i], local[i * 6 + j]);
      }
  }
  SpMat A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

/// Load vector int f phi_i; f in closed form.
inline Vec assemble_load(const FeSpace& space, const std::function<double(Point2)>& f,
                         const AssemblyOptions& opts = {}) {
  const Mesh& m = space.mesh();
  Vec b = Vec::Zero(space.dof_count());
  const auto& rule = triangle_rule(opts.quad_degree);
  int nd = space.dofs_per_element();
  std::vector<char> bnode(m.nodes.size(), 0);
  for (auto& be : m.boundary_edges) bnode[be.a] = bnode[be.b] = 1;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    auto dofs = space.element_dofs(t);
    const auto& tr = m.triangles[t];
    Point2 p0 = m.nodes[tr[0]], p1 = m.nodes[tr[1]], p2 = m.nodes[tr[2]];
    double area = 0.5 * cross(p1 - p0, p2 - p0);
    bool touches = bnode[tr[0]] || bnode[tr[1]] || bnode[tr[2]];
    int levels = touches ? opts.boundary_subdiv : 0;
    detail::for_subdivided(p0, p1, p2, levels, [&](Point2 a, Point2 b2, Point2 c) {
      double sub_area = 0.5 * cross(b2 - a, c - a);
      for (const auto& q : rule) {
        Point2 x = q.l0 * a + q.l1 * b2 + q.l2 * c;
        double det = 2.0 * area;
        double m1 = cross(x - p0, p2 - p0) / det;
        double m2 = cross(p1 - p0, x - p0) / det;
        double m0 = 1.0 - m1 - m2;
        double fv = f(x);
        require(std::isfinite(fv), errc::quadrature_failure, "load not finite");
        double N[6];
        space.shape(m0, m1, m2, N);
        for (int i = 0; i < nd; ++i) b[dofs[i]] += q.w * sub_area * fv * N[i];
      }
    });
  }
  return b;
}

// ---------------------------------------------------------------------------
// Dirichlet solves
// ---------------------------------------------------------------------------

struct SolveReport {
  double relative_residual = 0;
  int dofs = 0;
};

/// Solve -Laplace u = f with u = g on the boundary (dof interpolation).
/// f may be a closed form or an FeFunction on the same space.
inline FeFunction solve_dirichlet(const FeSpace& space,
                                  const std::variant<std::function<double(Point2)>, FeFunction>& f,
                                  const std::function<double(Point2)>& g,
                                  SolveReport* report = nullptr,
                                  const AssemblyOptions& opts = {}) {
  std::size_t n = space.dof_count();
  SpMat K = assemble(space, FormKind::stiffness, {}, opts);

  Vec load;
  if (std::holds_alternative<FeFunction>(f)) {
    const FeFunction& ff = std::get<FeFunction>(f);
    require(ff.space.dof_count() == n, errc::bad_param, "rhs space mismatch");
    SpMat M = assemble(space, FormKind::mass, {}, opts);
    load = M * ff.coeffs;
  } else {
    load = assemble_load(space, std::get<0>(f), opts);
  }

  // boundary values by interpolation
  Vec u = Vec::Zero(n);
  std::vector<std::size_t> interior;
  interior.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (space.is_boundary_dof(i)) {
      double gv = g ? g(space.dof_coords()[i]) : 0.0;
      require(std::isfinite(gv), errc::bad_param, "boundary data not finite");
      u[i] = gv;
    } else {
      interior.push_back(i);
    }
  }

  // reduced SPD system on interior dofs
  std::vector<int> redidx(n, -1);
  for (std::size_t k = 0; k < interior.size(); ++k) redidx[interior[k]] = int(k);
  std::vector<Eigen::Triplet<double>> trips;
  Vec rhs(interior.size());
  for (std::size_t k = 0; k < interior.size(); ++k) rhs[k] = load[interior[k]];
  for (int col = 0; col < K.outerSize(); ++col) {
    for (SpMat::InnerIterator it(K, col); it; ++it) {
      int i = int(it.row()), j = col;
      if (redidx[i] >= 0 && redidx[j] >= 0)
        trips.emplace_back(redidx[i], redidx[j], it.value());
      else if (redidx[i] >= 0 && redidx[j] < 0)
        rhs[redidx[i]] -= it.value() * u[j];
    }
  }
  SpMat Kred(interior.size(), interior.size());
  Kred.setFromTriplets(trips.begin(), trips.end());

  Vec sol;
  if (interior.empty()) {
    sol.resize(0);
  } else {
    Eigen::SimplicialLDLT<SpMat> ldlt(Kred);
    require(ldlt.info() == Eigen::Success, errc::solver_failure, "factorization failed");
    sol = ldlt.solve(rhs);
    double denom = rhs.norm();
    double rel = denom > 0 ? (Kred * sol - rhs).norm() / denom : 0.0;
    if (rel > 1e-10) {
      // one refinement sweep, then give up with diagnostics
      Vec corr = ldlt.solve(rhs - Kred * sol);
      sol += corr;
      rel = denom > 0 ? (Kred * sol - rhs).norm() / denom : 0.0;
      require(rel <= 1e-10, errc::solver_failure,
              "relative residual " + std::to_string(rel) + " after refinement");
    }
    if (report) {
      report->relative_residual = rel;
      report->dofs = int(interior.size());
    }
  }
  for (std::size_t k = 0; k < interior.size(); ++k) u[interior[k]] = sol[k];
  return {space, std::move(u)};
}

/// Harmonic extension of g: the f = 0 Dirichlet solve.
inline FeFunction harmonic_extension(const FeSpace& space, const std::function<double(Point2)>& g,
                                     SolveReport* report = nullptr,
                                     const AssemblyOptions& opts = {}) {
  return solve_dirichlet(space, std::function<double(Point2)>([](Point2) { return 0.0; }), g,
                         report, opts);
}

/// Interpolate a closed form onto the space (dof evaluation).
inline FeFunction interpolate(const FeSpace& space, const std::function<double(Point2)>& f) {
  Vec c(space.dof_count());
  for (std::size_t i = 0; i < space.dof_count(); ++i) c[i] = f(space.dof_coords()[i]);
  return {space, std::move(c)};
}

/// || K u - load || over interior dofs in the lumped-mass discrete H^-1
/// norm: sqrt(sum r_i^2 / m_i).
inline double weak_laplacian_residual_load(const FeSpace& space, const FeFunction& u,
                                           const Vec& load, const AssemblyOptions& opts = {}) {
  SpMat K = assemble(space, FormKind::stiffness, {}, opts);
  SpMat M = assemble(space, FormKind::mass, {}, opts);
  Vec r = K * u.coeffs - load;
  Vec lumped = M * Vec::Ones(space.dof_count());
  double acc = 0;
  for (std::size_t i = 0; i < space.dof_count(); ++i) {
    if (space.is_boundary_dof(i)) continue;
    acc += r[i] * r[i] / lumped[i];
  }
  return std::sqrt(acc);
}

inline double weak_laplacian_residual(const FeSpace& space, const FeFunction& u,
                                      const std::function<double(Point2)>& f,
                                      const AssemblyOptions& opts = {}) {
  Vec load = f ? assemble_load(space, f, opts) : Vec(Vec::Zero(space.dof_count()));
  return weak_laplacian_residual_load(space, u, load, opts);
}

} // namespace fraclab
