#pragma once

// Univariate polynomials (restrictions of trivariate ones to lines) and
// real-root isolation by Bernstein sign variations with midpoint bisection.
//
// Root counting reports *distinct* roots. A cluster of roots narrower than
// the isolation resolution (a tangential double root, or two roots closer
// than about 1e-12 of the interval width) is reported as one root.

#include "kakeya/core.hpp"

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace kakeya {

/// Dense univariate polynomial, coefficients in ascending powers.
class Poly1 {
 public:
  Poly1() : coeffs_(1, 0.0) {}
  explicit Poly1(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.push_back(0.0);
  }

  /// Product of (t - r) over the given roots, times `lead`.
  static Poly1 from_roots(std::span<const double> roots, double lead = 1.0) {
    std::vector<double> c{lead};
    for (double r : roots) {
      std::vector<double> next(c.size() + 1, 0.0);
      for (std::size_t i = 0; i < c.size(); ++i) {
        next[i + 1] += c[i];
        next[i] -= r * c[i];
      }
      c = std::move(next);
    }
    return Poly1(std::move(c));
  }

  int degree_bound() const { return static_cast<int>(coeffs_.size()) - 1; }

  /// Highest power with a non-zero coefficient; -1 for the zero polynomial.
  int degree() const {
    for (int i = degree_bound(); i >= 0; --i)
      if (coeffs_[static_cast<std::size_t>(i)] != 0.0) return i;
    return -1;
  }

  std::span<const double> coeffs() const { return coeffs_; }
  double operator[](std::size_t i) const { return coeffs_[i]; }

  double max_abs_coeff() const {
    double m = 0.0;
    for (double c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

  double operator()(double t) const {
    double r = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) r = r * t + *it;
    return r;
  }

 private:
  std::vector<double> coeffs_;
};

/// Outcome of root counting on an interval. When the restriction is the zero
/// polynomial the line lies in the zero set and `count` is meaningless.
struct RootCount {
  std::size_t count = 0;
  bool line_in_zero_set = false;
};

namespace detail {

template <class T>
std::size_t sign_variations(std::span<const T> b) {
  std::size_t v = 0;
  int prev = 0;
  for (T x : b) {
    int s = (x > 0) - (x < 0);
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++v;
    prev = s;
  }
  return v;
}

/// de Casteljau split of Bernstein coefficients at 1/2.
template <class T>
void bernstein_split(std::span<const T> b, std::vector<T>& left, std::vector<T>& right) {
  const std::size_t n = b.size();
  std::vector<T> w(b.begin(), b.end());
  left.resize(n);
  right.resize(n);
  left[0] = w[0];
  right[n - 1] = w[n - 1];
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t i = 0; i + k < n; ++i) w[i] = (w[i] + w[i + 1]) / 2;
    left[k] = w[0];
    right[n - 1 - k] = w[n - 1 - k];
  }
}

template <class T>
T bernstein_eval(std::span<const T> b, T s) {
  std::vector<T> w(b.begin(), b.end());
  for (std::size_t k = 1; k < w.size(); ++k)
    for (std::size_t i = 0; i + k < w.size(); ++i) w[i] = (1 - s) * w[i] + s * w[i + 1];
  return w[0];
}

template <class T>
int first_sign(std::span<const T> b) {
  for (T x : b)
    if (x != 0) return x > 0 ? 1 : -1;
  return 0;
}

template <class T>
int last_sign(std::span<const T> b) {
  for (auto it = b.rbegin(); it != b.rend(); ++it)
    if (*it != 0) return *it > 0 ? 1 : -1;
  return 0;
}

template <class T>
struct Isolator {
  T t0, width;            // parameter s in [0,1] maps to t0 + s*width
  T resolution;           // smallest subinterval width (in s) before clustering
  std::vector<double>* roots;

  void refine_single(std::span<const T> b, T lo, T hi) {
    // Exactly one sign change between lo+ and hi-; bisect on the local form.
    int s_lo = first_sign(b);
    std::vector<T> local(b.begin(), b.end());
    T a = 0, c = 1;
    for (int it = 0; it < 80 && (c - a) * (hi - lo) > resolution * T(1e-3); ++it) {
      T m = (a + c) / 2;
      T v = bernstein_eval<T>(local, m);
      if (v == 0) {
        a = c = m;
        break;
      }
      int s = v > 0 ? 1 : -1;
      if (s == s_lo)
        a = m;
      else
        c = m;
    }
    T s = lo + (hi - lo) * (a + c) / 2;
    roots->push_back(static_cast<double>(t0 + width * s));
  }

  void run(std::span<const T> b, T lo, T hi, int depth) {
    std::size_t v = sign_variations(b);
    if (v == 0) return;
    if (v == 1) {
      refine_single(b, lo, hi);
      return;
    }
    if (hi - lo <= resolution || depth >= 60) {
      roots->push_back(static_cast<double>(t0 + width * (lo + hi) / 2));
      return;
    }
    std::vector<T> left, right;
    bernstein_split(b, left, right);
    T mid = (lo + hi) / 2;
    run(left, lo, mid, depth + 1);
    if (right.front() == 0) roots->push_back(static_cast<double>(t0 + width * mid));
    run(right, mid, hi, depth + 1);
  }
};

template <class T>
std::vector<double> isolate_impl(const Poly1& q, double t0, double t1) {
  const int n = std::max(q.degree(), 0);
  // Coefficients of q(t0 + s*h) in powers of s (Horner in the ring).
  std::vector<T> a(static_cast<std::size_t>(n) + 1, T(0));
  const T h = T(t1) - T(t0);
  for (int k = n; k >= 0; --k) {
    for (int i = n; i >= 1; --i) a[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] * T(t0) + a[static_cast<std::size_t>(i - 1)] * h;
    a[0] = a[0] * T(t0) + T(q[static_cast<std::size_t>(k)]);
  }
  // Power basis on [0,1] to Bernstein basis: b_k = sum_{i<=k} C(k,i)/C(n,i) a_i.
  std::vector<T> b(static_cast<std::size_t>(n) + 1, T(0));
  for (int k = 0; k <= n; ++k) {
    T ratio = 1;  // C(k,i)/C(n,i) for i = 0
    T acc = 0;
    for (int i = 0; i <= k; ++i) {
      acc += ratio * a[static_cast<std::size_t>(i)];
      ratio = ratio * T(k - i) / T(n - i);
    }
    b[static_cast<std::size_t>(k)] = acc;
  }
  std::vector<double> roots;
  if (b.front() == 0) roots.push_back(t0);
  Isolator<T> iso{T(t0), h, T(1e-13), &roots};
  iso.run(b, T(0), T(1), 0);
  if (b.back() == 0 && n > 0) roots.push_back(t1);
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace detail

/// True when q vanishes identically on [t0, t1]: every coefficient magnitude
/// is at most `zero_tol` and no sampled value exceeds it.
inline bool is_zero_on(const Poly1& q, double t0, double t1, double zero_tol = 0.0) {
  if (q.max_abs_coeff() <= zero_tol) return true;
  const int samples = 2 * std::max(q.degree_bound(), 1) + 3;
  double peak = 0.0;
  for (int i = 0; i < samples; ++i) {
    double t = t0 + (t1 - t0) * (i + 0.5) / samples;
    peak = std::max(peak, std::abs(q(t)));
  }
  return peak <= zero_tol;
}

/// Approximate locations of the distinct real roots of q in [t0, t1],
/// ascending. Empty for the zero polynomial (check is_zero_on first).
/// Degrees above 30 are processed in binary128: with 40 clustered roots the
/// monomial-to-Bernstein conversion cancels far below long double precision.
inline std::vector<double> isolate_real_roots(const Poly1& q, double t0, double t1) {
  require(t0 < t1, "isolate_real_roots: empty interval");
  if (q.degree() <= 0) return {};
  if (q.degree() > 30) return detail::isolate_impl<__float128>(q, t0, t1);
  return detail::isolate_impl<double>(q, t0, t1);
}

/// Number of distinct real roots of q in the closed interval [t0, t1].
inline RootCount count_real_roots(const Poly1& q, double t0, double t1, double zero_tol = 0.0) {
  require(t0 < t1, "count_real_roots: requires t0 < t1");
  if (is_zero_on(q, t0, t1, zero_tol)) return {0, true};
  return {isolate_real_roots(q, t0, t1).size(), false};
}

}  // namespace kakeya
