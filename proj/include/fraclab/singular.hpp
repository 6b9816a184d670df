#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/fem.hpp"
#include "fraclab/geometry.hpp"

namespace fraclab {

/// alpha = pi / omega for a corner of interior angle omega.
struct SingularExponent {
  double omega = 0;
  double alpha = 0;
  static SingularExponent from_omega(double omega) {
    require(omega > 0 && omega < 2 * std::numbers::pi, errc::bad_param,
            "omega must lie in (0, 2pi)");
    return {omega, std::numbers::pi / omega};
  }
};

/// Local polar frame at a corner: theta = 0 along `direction0`, increasing
/// counter-clockwise (orientation +1) or clockwise (-1) into the domain.
struct CornerFrame {
  Point2 vertex{};
  double theta0 = 0; // angle of the theta = 0 edge
  int orientation = 1;

  void polar(Point2 p, double& r, double& theta) const {
    Point2 d = p - vertex;
    r = norm(d);
    double a = std::atan2(d.y, d.x);
    theta = orientation * (a - theta0);
    double twopi = 2 * std::numbers::pi;
    while (theta < 0) theta += twopi;
    while (theta >= twopi) theta -= twopi;
  }

  static CornerFrame at(Point2 vertex, Point2 direction0, int orientation = 1) {
    return {vertex, std::atan2(direction0.y, direction0.x), orientation};
  }
};

namespace detail {

// quintic smoothstep cutoff: 1 on [0, a/2], 0 on [a, inf), C^2
struct Cutoff {
  double a;
  double eta(double r) const {
    if (r <= 0.5 * a) return 1.0;
    if (r >= a) return 0.0;
    double t = (r - 0.5 * a) / (0.5 * a);
    return 1.0 - t * t * t * (10 - 15 * t + 6 * t * t);
  }
  double deta(double r) const {
    if (r <= 0.5 * a || r >= a) return 0.0;
    double t = (r - 0.5 * a) / (0.5 * a);
    return -(30 * t * t - 60 * t * t * t + 30 * t * t * t * t) / (0.5 * a);
  }
  double ddeta(double r) const {
    if (r <= 0.5 * a || r >= a) return 0.0;
    double t = (r - 0.5 * a) / (0.5 * a);
    return -(60 * t - 180 * t * t + 120 * t * t * t) / (0.25 * a * a);
  }
};

/// Assemble value/gradient/Hessian of f(r) * sin(alpha*theta) in the frame.
/// fr, dfr, ddfr are f and its radial derivatives at r.
inline EvalResult polar_eval(const CornerFrame& frame, Point2 p, double alpha, double fr,
                             double dfr, double ddfr) {
  double r, th;
  frame.polar(p, r, th);
  double g = std::sin(alpha * th), dg = alpha * std::cos(alpha * th),
         ddg = -alpha * alpha * std::sin(alpha * th);
  EvalResult out;
  out.value = fr * g;
  if (r == 0) return out; // gradient/Hessian singular or zero; caller guards
  // polar ->cartesian; e_r at global angle phi, orientation flips e_theta
  double phi = frame.orientation * th + frame.theta0;
  Point2 er{std::cos(phi), std::sin(phi)};
  Point2 et = double(frame.orientation) * perp(er);
  double ur = dfr * g, ut = fr * dg; // du/dr, du/dtheta
  out.grad = ur * er + (ut / r) * et;
  double urr = ddfr * g;
  double urt = dfr * dg;
  double utt = fr * ddg;
  auto outer = [](Point2 a, Point2 b) {
    return Mat2{a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y};
  };
  Mat2 ee = outer(er, er), tt = outer(et, et);
  Mat2 et_sym = outer(er, et) + outer(et, er);
  out.hess = urr * ee + (urt / r - ut / (r * r)) * et_sym + (ur / r + utt / (r * r)) * tt;
  return out;
}

} // namespace detail

/// Corner singular function S(r,theta) = r^alpha sin(alpha theta) eta(r) with
/// a C^2 cutoff eta equal to 1 on [0, a/2] and 0 beyond a.
inline ScalarField singular_function(const CornerFrame& frame, double alpha, double cutoff_a) {
  require(cutoff_a > 0, errc::cutoff_too_large, "cutoff radius must be positive");
  detail::Cutoff eta{cutoff_a};
  auto fr = [=](double r, double& f, double& df, double& ddf) {
    double ra = std::pow(r, alpha);
    double dra = r > 0 ? alpha * ra / r : 0.0;
    double ddra = r > 0 ? alpha * (alpha - 1) * ra / (r * r) : 0.0;
    double e = eta.eta(r), de = eta.deta(r), dde = eta.ddeta(r);
    f = ra * e;
    df = dra * e + ra * de;
    ddf = ddra * e + 2 * dra * de + ra * dde;
  };
  ScalarField out;
  out.value = [=](Point2 p) {
    double f, df, ddf;
    double r, th;
    frame.polar(p, r, th);
    fr(r, f, df, ddf);
    return f * std::sin(alpha * th);
  };
  out.grad = [=](Point2 p) {
    double f, df, ddf;
    double r, th;
    frame.polar(p, r, th);
    fr(r, f, df, ddf);
    return detail::polar_eval(frame, p, alpha, f, df, ddf).grad;
  };
  out.hess = [=](Point2 p) {
    double f, df, ddf;
    double r, th;
    frame.polar(p, r, th);
    fr(r, f, df, ddf);
    return detail::polar_eval(frame, p, alpha, f, df, ddf).hess;
  };
  return out;
}

/// Kernel singular function z = (r^-alpha - r^alpha) sin(alpha theta):
/// harmonic, vanishing on both corner edges and on the unit arc r = 1.
inline ScalarField kernel_function(const CornerFrame& frame, double alpha) {
  auto fr = [=](double r, double& f, double& df, double& ddf) {
    double rp = std::pow(r, alpha), rm = std::pow(r, -alpha);
    f = rm - rp;
    df = (-alpha * rm - alpha * rp) / r;
    ddf = (alpha * (alpha + 1) * rm - alpha * (alpha - 1) * rp) / (r * r);
  };
  ScalarField out;
  out.value = [=](Point2 p) {
    double f, df, ddf;
    double r, th;
    frame.polar(p, r, th);
    if (r == 0) return std::numeric_limits<double>::infinity();
    fr(r, f, df, ddf);
    return f * std::sin(alpha * th);
  };
  out.grad = [=](Point2 p) {
    double f, df, ddf;
    double r, th;
    frame.polar(p, r, th);
    fr(r, f, df, ddf);
    return detail::polar_eval(frame, p, alpha, f, df, ddf).grad;
  };
  out.hess = [=](Point2 p) {
    double f, df, ddf;
    double r, th;
    frame.polar(p, r, th);
    fr(r, f, df, ddf);
    return detail::polar_eval(frame, p, alpha, f, df, ddf).hess;
  };
  return out;
}

/// Largest integer strictly below (1+s)/alpha, with an epsilon guard for
/// values landing on integers.
inline int nu_s(double omega, double s) {
  require(omega > 0 && omega < 2 * std::numbers::pi, errc::bad_param, "omega out of range");
  require(s >= -0.5, errc::bad_param, "s must be >= -1/2");
  double alpha = std::numbers::pi / omega;
  double x = (1.0 + s) / alpha;
  double r = std::round(x);
  if (std::abs(x - r) <= 1e-12 * std::max(1.0, std::abs(x))) return int(r) - 1;
  return int(std::floor(x));
}

/// Exact-rational variant: omega = (op/oq) * pi, s = sn/sd.
inline long long nu_s_exact(long long op, long long oq, long long sn, long long sd) {
  require(oq > 0 && sd > 0 && op > 0, errc::bad_param, "bad rational");
  // (1+s)/alpha = (1+s) * omega / pi = (sd+sn) * op / (sd * oq)
  long long num = (sd + sn) * op, den = sd * oq;
  require(num > 0, errc::bad_param, "s must be > -1");
  if (num % den == 0) return num / den - 1;
  return num / den; // positive operands: C++ division truncates = floor
}

struct KernelDimension {
  int dim = 0;
  bool formula_applicable = true; // false when some omega hits the excluded set
};

/// Grisvard's corner count: dim N_s = sum_j nu_s(omega_j) for s > 0 (with the
/// excluded-angle flag), and the number of reentrant corners for -1/2<=s<=0.
inline KernelDimension kernel_dimension(const Domain& d, double s) {
  require(s >= -0.5, errc::bad_param, "s must be >= -1/2");
  KernelDimension out;
  if (s <= 0.0) {
    for (auto& c : d.corner_angles())
      if (c.omega > std::numbers::pi + 1e-12) ++out.dim;
    return out;
  }
  for (auto& c : d.corner_angles()) {
    double x = (1.0 + s) * c.omega / std::numbers::pi;
    double r = std::round(x);
    if (r >= 1 && std::abs(x - r) <= 1e-9 * std::max(1.0, x)) out.formula_applicable = false;
    out.dim += nu_s(c.omega, s);
  }
  return out;
}

struct CriticalP {
  bool convex = false; // no reentrant corner: no finite threshold below 4/3
  double p0 = 0;       // 2/(alpha* + 1) otherwise
};

inline CriticalP critical_p(const Domain& d) {
  double omega_max = 0;
  for (auto& c : d.corner_angles()) omega_max = std::max(omega_max, c.omega);
  if (omega_max <= std::numbers::pi + 1e-12) return {true, 0};
  double alpha = std::numbers::pi / omega_max;
  return {false, 2.0 / (alpha + 1.0)};
}

struct W1pMembership {
  bool member = false;
  double margin = 0; // 2 - p(alpha+1); positive means member
};

/// z is in W^{1,p} near the corner iff p(alpha+1) < 2 (strict; floating
/// values landing on the threshold count as excluded).
inline W1pMembership w1p_membership(double alpha, double p) {
  require(alpha > 0.5 && alpha < 1.0, errc::bad_param, "alpha must lie in (1/2, 1)");
  require(p > 1.0 && p < 2.0, errc::bad_param, "p must lie in (1, 2)");
  double margin = 2.0 - p * (alpha + 1.0);
  return {margin > 1e-12, margin};
}

/// Independent detector: integrate |grad z|^p r dr over dyadic radial shells
/// and classify by the growth of the partial sums toward r = 0.
inline W1pMembership w1p_quadrature_detector(double alpha, double p, int shells = 24) {
  require(alpha > 0.5 && alpha < 1.0, errc::bad_param, "alpha out of range");
  double omega = std::numbers::pi / alpha;
  CornerFrame frame = CornerFrame::at({0, 0}, {1, 0});
  ScalarField z = kernel_function(frame, alpha);
  auto shell_integral = [&](double r0, double r1) {
    double acc = 0;
    int nr = 8, nt = 12;
    for (auto& qr : gauss_rule(nr)) {
      double r = r0 + qr.t * (r1 - r0);
      for (auto& qt : gauss_rule(nt)) {
        double th = qt.t * omega;
        Point2 pt{r * std::cos(th), r * std::sin(th)};
        Point2 gr = z.grad(pt);
        acc += qr.w * qt.w * (r1 - r0) * omega * std::pow(norm(gr), p) * r;
      }
    }
    return acc;
  };
  // shells [2^-(j+1), 2^-j]; ratio -> 2^-(2 - p(alpha+1)) asymptotically
  std::vector<double> I(shells);
  for (int j = 0; j < shells; ++j) I[j] = shell_integral(std::pow(2.0, -j - 1), std::pow(2.0, -j));
  double ratio = I[shells - 1] / I[shells - 2];
  double margin_hat = -std::log2(ratio);
  return {margin_hat > 0.0, margin_hat};
}

} // namespace fraclab
