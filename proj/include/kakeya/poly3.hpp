#pragma once

// Dense trivariate polynomials.
//
// Coefficients are stored in graded-lexicographic order: degree d = 0..D,
// within a degree by descending power of x1, then descending power of x2.
// For D = 2 the order is
//   1, x1, x2, x3, x1^2, x1x2, x1x3, x2^2, x2x3, x3^2.

#include "kakeya/core.hpp"
#include "kakeya/poly1.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace kakeya {

/// (D+3 choose 3), the number of monomials of degree at most D in three variables.
inline std::size_t dim_poly_space(int D) {
  require(D >= 0, "dim_poly_space: negative degree");
  auto d = static_cast<std::size_t>(D);
  return (d + 1) * (d + 2) * (d + 3) / 6;
}

/// Value, gradient and Hessian at one point.
struct Jet {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
  Mat3 hess = Mat3::Zero();
};

namespace detail {

/// Storage indices in the visiting order of nested Horner evaluation
/// (a = D..0, b = D-a..0, c = D-a-b..0), cached per degree.
inline const std::vector<std::uint32_t>& horner_order(int D) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<std::vector<std::uint32_t>>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[D];
  if (!slot) {
    slot = std::make_unique<std::vector<std::uint32_t>>();
    slot->reserve(dim_poly_space(D));
    for (int a = D; a >= 0; --a)
      for (int b = D - a; b >= 0; --b)
        for (int c = D - a - b; c >= 0; --c) {
          auto d = static_cast<std::size_t>(a + b + c), bc = static_cast<std::size_t>(b + c);
          slot->push_back(static_cast<std::uint32_t>(d * (d + 1) * (d + 2) / 6 + bc * (bc + 1) / 2 +
                                                     static_cast<std::size_t>(c)));
        }
  }
  return *slot;
}

}  // namespace detail

class Poly3 {
 public:
  Poly3() : Poly3(0) {}
  explicit Poly3(int degree_bound)
      : D_(degree_bound), c_(dim_poly_space(degree_bound), 0.0), order_(&detail::horner_order(degree_bound)) {}
  Poly3(int degree_bound, std::vector<double> coeffs)
      : D_(degree_bound), c_(std::move(coeffs)), order_(&detail::horner_order(degree_bound)) {
    require(c_.size() == dim_poly_space(D_), "Poly3: coefficient count does not match degree bound");
  }

  /// Position of x1^a x2^b x3^c in the coefficient vector.
  static std::size_t index(int a, int b, int c) {
    auto d = static_cast<std::size_t>(a + b + c);
    auto bc = static_cast<std::size_t>(b + c);
    return d * (d + 1) * (d + 2) / 6 + bc * (bc + 1) / 2 + static_cast<std::size_t>(c);
  }

  static Poly3 constant(double v) {
    Poly3 p(0);
    p.c_[0] = v;
    return p;
  }

  static Poly3 monomial(int a, int b, int c, double coeff = 1.0) {
    require(a >= 0 && b >= 0 && c >= 0, "Poly3::monomial: negative exponent");
    Poly3 p(a + b + c);
    p.c_[index(a, b, c)] = coeff;
    return p;
  }

  /// The coordinate function x_{i+1}, i in {0,1,2}.
  static Poly3 variable(int i) {
    require(i >= 0 && i < 3, "Poly3::variable: index out of range");
    return monomial(i == 0, i == 1, i == 2);
  }

  /// a·x + b (an affine function, degree bound 1).
  static Poly3 affine(const Vec3& a, double b) {
    return Poly3(1, {b, a.x(), a.y(), a.z()});
  }

  int degree_bound() const { return D_; }

  /// Largest total degree with a non-zero coefficient; -1 for zero.
  int degree() const {
    for (int d = D_; d >= 0; --d) {
      std::size_t lo = d == 0 ? 0 : dim_poly_space(d - 1);
      for (std::size_t i = lo; i < dim_poly_space(d); ++i)
        if (c_[i] != 0.0) return d;
    }
    return -1;
  }

  const std::vector<double>& coeffs() const { return c_; }
  std::vector<double>& coeffs() { return c_; }

  double coeff(int a, int b, int c) const {
    if (a + b + c > D_) return 0.0;
    return c_[index(a, b, c)];
  }
  double& coeff(int a, int b, int c) { return c_[index(a, b, c)]; }

  double max_abs_coeff() const {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  bool is_zero() const { return max_abs_coeff() == 0.0; }

  /// Copy scaled to max-abs coefficient 1. Throws on the zero polynomial.
  Poly3 normalized() const {
    double m = max_abs_coeff();
    if (m == 0.0) throw NumericalError("Poly3::normalized: zero polynomial");
    return *this * (1.0 / m);
  }

  /// Same polynomial with a larger (or equal) degree bound.
  Poly3 with_degree_bound(int D) const {
    require(D >= degree(), "Poly3::with_degree_bound: would drop terms");
    Poly3 out(D);
    for_each_term([&](int a, int b, int c, double v) {
      if (a + b + c <= D) out.coeff(a, b, c) = v;
    });
    return out;
  }

  /// Calls f(a, b, c, coeff) for every stored monomial, in storage order.
  template <class F>
  void for_each_term(F&& f) const {
    std::size_t i = 0;
    for (int d = 0; d <= D_; ++d)
      for (int a = d; a >= 0; --a)
        for (int b = d - a; b >= 0; --b) f(a, b, d - a - b, c_[i++]);
  }

  /// Nested Horner evaluation: x1 outermost, x3 innermost.
  double operator()(const Vec3& x) const {
    const std::uint32_t* order = order_->data();
    const double* cf = c_.data();
    double r1 = 0.0;
    for (int a = D_; a >= 0; --a) {
      double r2 = 0.0;
      for (int b = D_ - a; b >= 0; --b) {
        double r3 = 0.0;
        for (int c = D_ - a - b; c >= 0; --c) r3 = r3 * x.z() + cf[*order++];
        r2 = r2 * x.y() + r3;
      }
      r1 = r1 * x.x() + r2;
    }
    return r1;
  }

  Jet jet(const Vec3& x) const {
    std::vector<double> px(static_cast<std::size_t>(D_) + 1), py(px.size()), pz(px.size());
    px[0] = py[0] = pz[0] = 1.0;
    for (std::size_t k = 1; k < px.size(); ++k) {
      px[k] = px[k - 1] * x.x();
      py[k] = py[k - 1] * x.y();
      pz[k] = pz[k - 1] * x.z();
    }
    // p(e, k) = x^(e-k) * e!/(e-k)!, or 0 when k > e.
    auto dp = [](const std::vector<double>& pw, int e, int k) {
      if (k > e) return 0.0;
      double f = 1.0;
      for (int j = 0; j < k; ++j) f *= e - j;
      return f * pw[static_cast<std::size_t>(e - k)];
    };
    Jet J;
    for_each_term([&](int a, int b, int c, double v) {
      if (v == 0.0) return;
      const double X0 = px[a], Y0 = py[b], Z0 = pz[c];
      const double X1 = dp(px, a, 1), Y1 = dp(py, b, 1), Z1 = dp(pz, c, 1);
      J.value += v * X0 * Y0 * Z0;
      J.grad.x() += v * X1 * Y0 * Z0;
      J.grad.y() += v * X0 * Y1 * Z0;
      J.grad.z() += v * X0 * Y0 * Z1;
      J.hess(0, 0) += v * dp(px, a, 2) * Y0 * Z0;
      J.hess(1, 1) += v * X0 * dp(py, b, 2) * Z0;
      J.hess(2, 2) += v * X0 * Y0 * dp(pz, c, 2);
      J.hess(0, 1) += v * X1 * Y1 * Z0;
      J.hess(0, 2) += v * X1 * Y0 * Z1;
      J.hess(1, 2) += v * X0 * Y1 * Z1;
    });
    J.hess(1, 0) = J.hess(0, 1);
    J.hess(2, 0) = J.hess(0, 2);
    J.hess(2, 1) = J.hess(1, 2);
    return J;
  }

  Vec3 grad(const Vec3& x) const { return jet(x).grad; }
  Mat3 hessian(const Vec3& x) const { return jet(x).hess; }

  /// Partial derivative with respect to x_{i+1}, as a polynomial.
  Poly3 derivative(int i) const {
    require(i >= 0 && i < 3, "Poly3::derivative: index out of range");
    Poly3 out(std::max(D_ - 1, 0));
    for_each_term([&](int a, int b, int c, double v) {
      int e[3] = {a, b, c};
      if (e[i] == 0 || v == 0.0) return;
      double f = e[i];
      --e[i];
      out.coeff(e[0], e[1], e[2]) += f * v;
    });
    return out;
  }

  Poly3& operator+=(const Poly3& o) {
    if (o.D_ > D_) *this = with_degree_bound(o.D_);
    o.for_each_term([&](int a, int b, int c, double v) { coeff(a, b, c) += v; });
    return *this;
  }
  Poly3& operator-=(const Poly3& o) { return *this += o * -1.0; }
  Poly3& operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
  }

  friend Poly3 operator+(Poly3 p, const Poly3& q) { return p += q; }
  friend Poly3 operator-(Poly3 p, const Poly3& q) { return p -= q; }
  friend Poly3 operator*(Poly3 p, double s) { return p *= s; }
  friend Poly3 operator*(double s, Poly3 p) { return p *= s; }
  friend Poly3 operator+(Poly3 p, double s) {
    p.c_[0] += s;
    return p;
  }
  friend Poly3 operator-(Poly3 p, double s) {
    p.c_[0] -= s;
    return p;
  }

  friend Poly3 operator*(const Poly3& p, const Poly3& q) {
    Poly3 out(p.D_ + q.D_);
    p.for_each_term([&](int a, int b, int c, double u) {
      if (u == 0.0) return;
      q.for_each_term([&](int a2, int b2, int c2, double v) {
        if (v != 0.0) out.coeff(a + a2, b + b2, c + c2) += u * v;
      });
    });
    return out;
  }

 private:
  int D_;
  std::vector<double> c_;
  const std::vector<std::uint32_t>* order_;
};

namespace detail {

// acc <- acc * (p + q t), growing by one degree.
inline void mul_linear(std::vector<double>& acc, double p, double q) {
  acc.push_back(0.0);
  for (std::size_t i = acc.size() - 1; i >= 1; --i) acc[i] = p * acc[i] + q * acc[i - 1];
  acc[0] *= p;
}

inline void add_into(std::vector<double>& acc, const std::vector<double>& v) {
  if (v.size() > acc.size()) acc.resize(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
}

// Nested Horner in the ring of univariate polynomials; `coef` maps a stored
// coefficient (so the absolute-value majorant shares the code).
template <class Coef>
std::vector<double> restrict_impl(const Poly3& P, const Vec3& base, const Vec3& dir, Coef coef) {
  const int D = P.degree_bound();
  std::vector<double> r1{0.0};
  for (int a = D; a >= 0; --a) {
    std::vector<double> r2{0.0};
    for (int b = D - a; b >= 0; --b) {
      std::vector<double> r3{0.0};
      for (int c = D - a - b; c >= 0; --c) {
        mul_linear(r3, base.z(), dir.z());
        r3[0] += coef(P.coeff(a, b, c));
      }
      mul_linear(r2, base.y(), dir.y());
      add_into(r2, r3);
    }
    mul_linear(r1, base.x(), dir.x());
    add_into(r1, r2);
  }
  r1.resize(static_cast<std::size_t>(D) + 1, 0.0);
  return r1;
}

}  // namespace detail

/// q(t) = P(base + t·dir), computed at the coefficient level.
inline Poly1 restrict_to_line(const Poly3& P, const Vec3& base, const Vec3& dir) {
  require(std::abs(dir.norm() - 1.0) <= 1e-9, "restrict_to_line: direction must be a unit vector");
  return Poly1(detail::restrict_impl(P, base, dir, [](double v) { return v; }));
}

/// Coefficientwise majorant of restrict_to_line: the same composition with
/// |coeffs|, |base| and |dir|. Its size is the round-off scale of the
/// restriction and separates "identically zero" from "small".
inline Poly1 restriction_majorant(const Poly3& P, const Vec3& base, const Vec3& dir) {
  return Poly1(detail::restrict_impl(P, base.cwiseAbs(), dir.cwiseAbs(), [](double v) { return std::abs(v); }));
}

/// P(M x + t) as a polynomial in x.
inline Poly3 compose_affine(const Poly3& P, const Mat3& M, const Vec3& t) {
  const int D = P.degree_bound();
  Poly3 L[3] = {Poly3::affine(M.row(0).transpose(), t.x()), Poly3::affine(M.row(1).transpose(), t.y()),
                Poly3::affine(M.row(2).transpose(), t.z())};
  Poly3 r1(0);
  for (int a = D; a >= 0; --a) {
    Poly3 r2(0);
    for (int b = D - a; b >= 0; --b) {
      Poly3 r3(0);
      for (int c = D - a - b; c >= 0; --c) r3 = r3 * L[2] + Poly3::constant(P.coeff(a, b, c));
      r2 = r2 * L[1] + r3;
    }
    r1 = r1 * L[0] + r2;
  }
  return r1.with_degree_bound(D);
}

}  // namespace kakeya
