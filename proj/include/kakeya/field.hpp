#pragma once

// Polynomials given as products of dense factors, and the small interface
// shared by Poly3 and ProductPoly3 so that estimators accept either.
//
// The product form matters for the alternating-sheet polynomials used to
// exercise the cutting definition: prod (x1 - k*delta) over a few hundred k
// has no usable dense representation, but its sign, derivatives and line
// roots are cheap factor by factor.

#include "kakeya/core.hpp"
#include "kakeya/poly1.hpp"
#include "kakeya/poly3.hpp"

#include <algorithm>
#include <concepts>
#include <vector>

namespace kakeya {

class ProductPoly3 {
 public:
  ProductPoly3() = default;
  explicit ProductPoly3(std::vector<Poly3> factors) : factors_(std::move(factors)) {
    for (const auto& f : factors_) {
      if (f.degree_bound() > 1) {
        affine_.clear();
        break;
      }
      const Poly3 g = f.with_degree_bound(1);
      affine_.push_back({Vec3(g.coeff(1, 0, 0), g.coeff(0, 1, 0), g.coeff(0, 0, 1)), g.coeff(0, 0, 0)});
    }
  }

  /// prod_{k=lo}^{hi} (n·x - k*spacing) for a unit normal n.
  static ProductPoly3 parallel_planes(const Vec3& n, double spacing, int lo, int hi) {
    require(lo <= hi, "parallel_planes: empty range");
    std::vector<Poly3> f;
    f.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (int k = lo; k <= hi; ++k) f.push_back(Poly3::affine(n, -k * spacing));
    return ProductPoly3(std::move(f));
  }

  const std::vector<Poly3>& factors() const { return factors_; }
  /// (gradient, constant) per factor when every factor is affine, else empty.
  const std::vector<std::pair<Vec3, double>>& affine_factors() const { return affine_; }

  int degree() const {
    int d = 0;
    for (const auto& f : factors_) d += std::max(f.degree(), 0);
    return d;
  }

  double operator()(const Vec3& x) const {
    double v = 1.0;
    for (const auto& f : factors_) v *= f(x);
    return v;
  }

  int sign(const Vec3& x) const {
    int s = 1;
    if (!affine_.empty()) {
      for (const auto& [n, c] : affine_) {
        double v = n.dot(x) + c;
        if (v == 0.0) return 0;
        if (v < 0.0) s = -s;
      }
      return s;
    }
    for (const auto& f : factors_) {
      double v = f(x);
      if (v == 0.0) return 0;
      if (v < 0.0) s = -s;
    }
    return s;
  }

  /// Product rule, folded pairwise. Values of long products can overflow;
  /// geometric quantities built from ratios are unaffected only while they
  /// stay finite.
  Jet jet(const Vec3& x) const {
    Jet acc;
    acc.value = 1.0;
    for (const auto& f : factors_) {
      Jet j = f.jet(x);
      Jet next;
      next.value = acc.value * j.value;
      next.grad = acc.value * j.grad + j.value * acc.grad;
      next.hess = acc.value * j.hess + j.value * acc.hess + acc.grad * j.grad.transpose() +
                  j.grad * acc.grad.transpose();
      acc = next;
    }
    return acc;
  }

  /// Dense expansion; only sensible for a handful of low-degree factors.
  Poly3 expand() const {
    Poly3 p = Poly3::constant(1.0);
    for (const auto& f : factors_) p = p * f;
    return p;
  }

 private:
  std::vector<Poly3> factors_;
  std::vector<std::pair<Vec3, double>> affine_;  // all factors affine: (gradient, constant)
};

template <class F>
concept Field = requires(const F& f, const Vec3& x) {
  { f(x) } -> std::convertible_to<double>;
  { f.jet(x) } -> std::same_as<Jet>;
  { f.degree() } -> std::convertible_to<int>;
};

inline int sign_at(const Poly3& P, const Vec3& x) {
  double v = P(x);
  return (v > 0) - (v < 0);
}
inline int sign_at(const ProductPoly3& P, const Vec3& x) { return P.sign(x); }

/// Relative size below which a restriction counts as identically zero.
inline constexpr double kLineZeroTol = 1e-12;

struct LineRoots {
  std::vector<double> roots;  // distinct, ascending
  bool line_in_zero_set = false;
};

inline LineRoots line_roots(const Poly3& P, const Vec3& base, const Vec3& dir, double t0, double t1) {
  Poly1 q = restrict_to_line(P, base, dir);
  double scale = restriction_majorant(P, base, dir).max_abs_coeff();
  if (q.max_abs_coeff() <= kLineZeroTol * scale) return {{}, true};
  return {isolate_real_roots(q, t0, t1), false};
}

inline LineRoots line_roots(const ProductPoly3& P, const Vec3& base, const Vec3& dir, double t0, double t1) {
  LineRoots out;
  for (const auto& [n, c] : P.affine_factors()) {
    const double slope = n.dot(dir), value = n.dot(base) + c;
    const double scale = n.cwiseAbs().dot(base.cwiseAbs()) + std::abs(c) + n.cwiseAbs().dot(dir.cwiseAbs());
    if (std::abs(slope) <= kLineZeroTol * n.cwiseAbs().sum()) {
      if (std::abs(value) <= kLineZeroTol * scale) return {{}, true};
      continue;
    }
    const double t = -value / slope;
    if (t >= t0 && t <= t1) out.roots.push_back(t);
  }
  if (P.affine_factors().empty()) {
    for (const auto& f : P.factors()) {
      LineRoots r = line_roots(f, base, dir, t0, t1);
      if (r.line_in_zero_set) return {{}, true};
      out.roots.insert(out.roots.end(), r.roots.begin(), r.roots.end());
    }
  }
  std::sort(out.roots.begin(), out.roots.end());
  const double merge = 1e-12 * (t1 - t0);
  std::vector<double> distinct;
  for (double r : out.roots)
    if (distinct.empty() || r - distinct.back() > merge) distinct.push_back(r);
  out.roots = std::move(distinct);
  return out;
}

}  // namespace kakeya
