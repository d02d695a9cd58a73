#pragma once

// Differential geometry of the zero surface Z(P): unit normal, tangent
// frame, second fundamental form A (from the Hessian, A(v,w) = v^T Hess w /
// |grad P| on tangent vectors), Gauss sign, straight and principal
// directions, the straightness measure S(x, v), and the polynomial detectors
// Tan, Str, Eig and A(H).

#include "kakeya/field.hpp"
#include "kakeya/poly3.hpp"
#include "kakeya/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace kakeya {

struct SurfaceTolerances {
  double on_surface = 1e-8;  // |P(x)| accepted as a point of Z(P)
  double grad = 1e-7;        // |grad P| below this: near-singular, rejected
  double det_rel = 1e-9;     // |det A| <= det_rel |A|^2: zero Gauss band
  double umbilic_rel = 1e-9; // eigenvalue gap <= umbilic_rel |A|: umbilic
};

/// Newton steps along grad P onto Z(P).
template <Field F>
Vec3 project_to_surface(const F& P, const Vec3& x0, double tol = 1e-12, const SurfaceTolerances& t = {}) {
  Vec3 x = x0;
  for (int it = 0; it <= 50; ++it) {
    Jet j = P.jet(x);
    if (std::abs(j.value) <= tol) return x;
    const double g2 = j.grad.squaredNorm();
    if (std::sqrt(g2) <= t.grad) throw NumericalError("project_to_surface: vanishing gradient");
    const Vec3 step = (j.value / g2) * j.grad;
    x -= step;
    // Stagnation at the round-off floor counts as convergence.
    if (step.norm() <= 1e-15 * (1.0 + x.norm())) return x;
  }
  throw NumericalError("project_to_surface: no convergence in 50 steps");
}

struct TangentFrame {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 e1 = Vec3::UnitX(), e2 = Vec3::UnitY();  // (e1, e2, normal) right-handed
  Mat2 shape = Mat2::Zero();                    // A(e_i, e_j)
  double grad_norm = 0.0;

  Vec3 tangent(const Vec2& c) const { return c.x() * e1 + c.y() * e2; }
  Vec2 coords(const Vec3& v) const { return {v.dot(e1), v.dot(e2)}; }
  double A(const Vec3& v, const Vec3& w) const { return coords(v).dot(shape * coords(w)); }
};

template <Field F>
TangentFrame tangent_frame(const F& P, const Vec3& x, const SurfaceTolerances& t = {}) {
  Jet j = P.jet(x);
  TangentFrame f;
  f.point = x;
  f.grad_norm = j.grad.norm();
  if (f.grad_norm <= t.grad) throw NumericalError("tangent_frame: vanishing gradient");
  require(std::abs(j.value) <= t.on_surface, "tangent_frame: point is not on Z(P)");
  f.normal = j.grad / f.grad_norm;
  std::tie(f.e1, f.e2) = orthonormal_complement(f.normal);
  f.shape(0, 0) = f.e1.dot(j.hess * f.e1) / f.grad_norm;
  f.shape(1, 1) = f.e2.dot(j.hess * f.e2) / f.grad_norm;
  f.shape(0, 1) = f.shape(1, 0) = 0.5 * (f.e1.dot(j.hess * f.e2) + f.e2.dot(j.hess * f.e1)) / f.grad_norm;
  return f;
}

/// |A_x| from the coordinate-free expression
/// |grad P|^-6 sum_ij [ (grad P x e_i)^T Hess (grad P x e_j) ]^2,
/// independent of any tangent basis.
template <Field F>
double sff_norm(const F& P, const Vec3& x, const SurfaceTolerances& t = {}) {
  Jet j = P.jet(x);
  const double g = j.grad.norm();
  if (g <= t.grad) throw NumericalError("sff_norm: vanishing gradient");
  Vec3 u[3];
  for (int i = 0; i < 3; ++i) u[i] = j.grad.cross(Vec3::Unit(i));
  double s = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double v = u[a].dot(j.hess * u[b]);
      s += v * v;
    }
  return std::sqrt(s) / (g * g * g);
}

enum class GaussSign { Negative, Zero, Positive };

inline const char* to_string(GaussSign s) {
  switch (s) {
    case GaussSign::Negative: return "negative";
    case GaussSign::Zero: return "zero";
    default: return "positive";
  }
}

inline GaussSign gauss_sign(const TangentFrame& f, const SurfaceTolerances& t = {}) {
  const double det = f.shape.determinant();
  const double n2 = f.shape.squaredNorm();
  if (std::abs(det) <= t.det_rel * n2) return GaussSign::Zero;
  return det < 0 ? GaussSign::Negative : GaussSign::Positive;
}

namespace detail {
/// Unit vector with its largest-magnitude component positive.
inline Vec3 canonical_sign(Vec3 v) {
  Eigen::Index k;
  v.cwiseAbs().maxCoeff(&k);
  return v[k] < 0 ? Vec3(-v) : v;
}
}  // namespace detail

struct StraightDirections {
  std::vector<Vec3> dirs;       // unit tangent vectors, up to sign
  bool degenerate_flat = false; // A = 0: every direction is straight
};

/// Unit tangent v with A(v, v) = 0: two for negative Gauss sign, one for a
/// rank-one shape in the zero band, none for positive.
inline StraightDirections straight_directions(const TangentFrame& f, const SurfaceTolerances& t = {}) {
  StraightDirections out;
  const double n = f.shape.norm();
  if (n == 0.0) {
    out.degenerate_flat = true;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Mat2> es;
  es.computeDirect(f.shape);
  const double l1 = es.eigenvalues()[0], l2 = es.eigenvalues()[1];  // ascending
  const Vec2 u1 = es.eigenvectors().col(0), u2 = es.eigenvectors().col(1);
  switch (gauss_sign(f, t)) {
    case GaussSign::Negative: {
      const double a = std::sqrt(l2), b = std::sqrt(-l1);
      for (double sgn : {1.0, -1.0})
        out.dirs.push_back(detail::canonical_sign(f.tangent((a * u1 + sgn * b * u2).normalized())));
      break;
    }
    case GaussSign::Zero:
      out.dirs.push_back(detail::canonical_sign(f.tangent(std::abs(l1) <= std::abs(l2) ? u1 : u2)));
      break;
    case GaussSign::Positive: break;
  }
  return out;
}

struct EigenDirections {
  bool umbilic = false;
  std::vector<Vec3> dirs;    // principal directions, ascending curvature
  Vec2 curvatures = Vec2::Zero();
};

inline EigenDirections eigen_directions(const TangentFrame& f, const SurfaceTolerances& t = {}) {
  EigenDirections out;
  Eigen::SelfAdjointEigenSolver<Mat2> es;
  es.computeDirect(f.shape);
  out.curvatures = es.eigenvalues();
  if (out.curvatures[1] - out.curvatures[0] <= t.umbilic_rel * f.shape.norm()) {
    out.umbilic = true;
    return out;
  }
  for (int i = 0; i < 2; ++i) out.dirs.push_back(detail::canonical_sign(f.tangent(es.eigenvectors().col(i))));
  return out;
}

/// S(x, v): distance from v to the nearest straight unit vector (negative
/// Gauss sign), else to the nearest principal direction, and 1 at umbilics.
inline double straightness_measure(const TangentFrame& f, const Vec3& v, const SurfaceTolerances& t = {}) {
  require(std::abs(v.dot(f.normal)) <= 1e-6, "straightness_measure: v is not tangent");
  require(std::abs(v.norm() - 1.0) <= 1e-6, "straightness_measure: v must be a unit vector");
  auto nearest = [&](const std::vector<Vec3>& ws) {
    double best = 1e300;
    for (const auto& w : ws) best = std::min({best, (v - w).norm(), (v + w).norm()});
    return best;
  };
  if (gauss_sign(f, t) == GaussSign::Negative) return nearest(straight_directions(f, t).dirs);
  EigenDirections e = eigen_directions(f, t);
  if (e.umbilic) return 1.0;
  return nearest(e.dirs);
}

// Point-based forms of the frame queries.
template <Field F>
GaussSign gauss_sign(const F& P, const Vec3& x, const SurfaceTolerances& t = {}) {
  return gauss_sign(tangent_frame(P, x, t), t);
}
template <Field F>
StraightDirections straight_directions(const F& P, const Vec3& x, const SurfaceTolerances& t = {}) {
  return straight_directions(tangent_frame(P, x, t), t);
}
template <Field F>
EigenDirections eigen_directions(const F& P, const Vec3& x, const SurfaceTolerances& t = {}) {
  return eigen_directions(tangent_frame(P, x, t), t);
}
template <Field F>
double straightness_measure(const F& P, const Vec3& x, const Vec3& v, const SurfaceTolerances& t = {}) {
  return straightness_measure(tangent_frame(P, x, t), v, t);
}

struct DetectorValues {
  double tan = 0.0;  // grad P . w
  double str = 0.0;  // (grad P x w)^T Hess (grad P x w)
  double eig = 0.0;  // (grad P x w)^T Hess (grad P x (grad P x w))
  double aH = 0.0;   // H^2 |grad P|^6 - sum_ij [(grad P x e_i)^T Hess (grad P x e_j)]^2
  // Degree bounds of the detector polynomials for deg P = D: D, 3D, 4D, 6D.
  int deg_tan = 0, deg_str = 0, deg_eig = 0, deg_aH = 0;
};

template <Field F>
DetectorValues detector_values(const F& P, const Vec3& x, const Vec3& w, double H) {
  Jet j = P.jet(x);
  DetectorValues d;
  const Vec3& g = j.grad;
  const Vec3 u = g.cross(w);
  d.tan = g.dot(w);
  d.str = u.dot(j.hess * u);
  d.eig = u.dot(j.hess * g.cross(u));
  double s = 0.0;
  Vec3 c[3];
  for (int i = 0; i < 3; ++i) c[i] = g.cross(Vec3::Unit(i));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double v = c[a].dot(j.hess * c[b]);
      s += v * v;
    }
  const double g2 = g.squaredNorm();
  d.aH = H * H * g2 * g2 * g2 - s;
  const int D = P.degree();
  d.deg_tan = D;
  d.deg_str = 3 * D;
  d.deg_eig = 4 * D;
  d.deg_aH = 6 * D;
  return d;
}

/// Up to `count` points of Z(P) found by projecting uniform seeds from the
/// box; projections leaving the box, failing to converge or landing near
/// singular points are discarded. `attempts` bounds the number of seeds.
template <Field F>
std::vector<Vec3> surface_points_in_box(const F& P, const Vec3& lo, const Vec3& hi, std::size_t count,
                                        std::size_t attempts, Rng& rng, const SurfaceTolerances& t = {}) {
  std::vector<Vec3> out;
  for (std::size_t a = 0; a < attempts && out.size() < count; ++a) {
    const Vec3 x0 = rng.in_box(lo, hi);
    try {
      const Vec3 x = project_to_surface(P, x0, 1e-12, t);
      if ((x.array() < lo.array()).any() || (x.array() > hi.array()).any()) continue;
      if (std::abs(P(x)) > t.on_surface || P.jet(x).grad.norm() <= t.grad) continue;
      out.push_back(x);
    } catch (const NumericalError&) {
    }
  }
  return out;
}

}  // namespace kakeya
