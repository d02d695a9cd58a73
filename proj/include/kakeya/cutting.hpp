#pragma once

// Polynomials that vanish at points or have zero mean on cells, and the
// Monte Carlo test of "P cuts Q at scale r".

#include "kakeya/field.hpp"
#include "kakeya/geometry.hpp"
#include "kakeya/linalg.hpp"
#include "kakeya/parallel.hpp"
#include "kakeya/poly3.hpp"
#include "kakeya/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace kakeya {

// ---------------------------------------------------------------------------
// Fitting

struct FitReport {
  int degree_used = 0;
  std::size_t cells = 0;
  double residual = 0.0;  // max |cell mean| (or |value| at points) of the normalized P
  double scale = 0.0;     // max over cells of sum |c_a| |mean of x^a|: the round-off scale of the residual
  int kernel_dim = 0;
};

namespace detail {

/// Largest coordinate magnitude, used to map the data into [-1, 1]^3.
inline double coordinate_scale(const std::vector<Vec3>& pts) {
  double s = 0.0;
  for (const auto& p : pts) s = std::max(s, p.cwiseAbs().maxCoeff());
  return s > 0 ? s : 1.0;
}

/// Undo the substitution x -> x / s in the coefficients.
inline Poly3 unscale(const Eigen::VectorXd& q, int D, double s) {
  Poly3 P(D);
  std::size_t i = 0;
  for (int d = 0; d <= D; ++d) {
    const double f = std::pow(s, -d);
    for (std::size_t k = 0; k < static_cast<std::size_t>((d + 1) * (d + 2) / 2); ++k, ++i)
      P.coeffs()[i] = q[static_cast<Eigen::Index>(i)] * f;
  }
  return P;
}

/// Means of 1, x, ..., x^D over [lo, hi], written without the cancelling
/// difference of powers.
inline std::vector<double> interval_moments(double lo, double hi, int D) {
  std::vector<double> m(static_cast<std::size_t>(D) + 1);
  std::vector<double> hp(static_cast<std::size_t>(D) + 1), lp(static_cast<std::size_t>(D) + 1);
  hp[0] = lp[0] = 1.0;
  for (int k = 1; k <= D; ++k) {
    hp[k] = hp[k - 1] * hi;
    lp[k] = lp[k - 1] * lo;
  }
  for (int a = 0; a <= D; ++a) {
    double s = 0.0;
    for (int k = 0; k <= a; ++k) s += hp[k] * lp[a - k];
    m[a] = s / (a + 1);
  }
  return m;
}

}  // namespace detail

/// Mean of every monomial of degree <= D over an axis-aligned box, in
/// graded-lex order.
inline std::vector<double> box_moments(const Vec3& lo, const Vec3& hi, int D) {
  auto mx = detail::interval_moments(lo.x(), hi.x(), D);
  auto my = detail::interval_moments(lo.y(), hi.y(), D);
  auto mz = detail::interval_moments(lo.z(), hi.z(), D);
  std::vector<double> out(dim_poly_space(D));
  for (int d = 0; d <= D; ++d)
    for (int bc = 0; bc <= d; ++bc)
      for (int c = 0; c <= bc; ++c) out[Poly3::index(d - bc, bc - c, c)] = mx[d - bc] * my[bc - c] * mz[c];
  return out;
}

/// Exact mean of P over the cell.
inline double cell_mean(const Poly3& P, const UnitCube& cell, double* magnitude = nullptr) {
  auto m = box_moments(cell.lo(), cell.hi(), P.degree_bound());
  double s = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    s += P.coeffs()[i] * m[i];
    mag += std::abs(P.coeffs()[i] * m[i]);
  }
  if (magnitude) *magnitude = mag;
  return s;
}

/// Non-zero P of degree <= D vanishing at every point.
///
/// Fewer points than dim Poly_D always admit such a P. More points are
/// accepted only when the evaluation matrix has a numerical kernel (points
/// on a low-degree variety); otherwise PreconditionError.
inline Poly3 fit_vanishing_poly(const std::vector<Vec3>& points, int D, FitReport* report = nullptr) {
  require(D >= 0, "fit_vanishing_poly: negative degree");
  const double s = detail::coordinate_scale(points);
  const auto m = static_cast<Eigen::Index>(dim_poly_space(D));
  Eigen::MatrixXd A(static_cast<Eigen::Index>(points.size()), m);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 x = points[i] / s;
    Poly3(D).for_each_term([&](int a, int b, int c, double) {
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(Poly3::index(a, b, c))) =
          std::pow(x.x(), a) * std::pow(x.y(), b) * std::pow(x.z(), c);
    });
  }
  KernelResult k = kernel_vector(A);
  Poly3 P = detail::unscale(k.vector, D, s).normalized();
  if (report) {
    report->degree_used = D;
    report->cells = points.size();
    report->kernel_dim = k.kernel_dim;
    report->residual = 0.0;
    for (const auto& p : points) {
      report->residual = std::max(report->residual, std::abs(P(p)));
      report->scale = std::max(report->scale, restriction_majorant(P, p, Vec3::UnitX())(0.0));
    }
  }
  return P;
}

/// Non-zero P of degree <= D whose exact mean over every cell is zero.
inline std::pair<Poly3, FitReport> fit_cutting_poly(const std::vector<UnitCube>& cells, int D) {
  require(D >= 0, "fit_cutting_poly: negative degree");
  const std::size_t m = dim_poly_space(D);
  require(cells.size() < m, "fit_cutting_poly: " + std::to_string(cells.size()) + " cells need more than dim Poly_" +
                                std::to_string(D) + " = " + std::to_string(m) + " coefficients");
  std::vector<Vec3> corners;
  for (const auto& c : cells) {
    corners.push_back(c.lo());
    corners.push_back(c.hi());
  }
  const double s = detail::coordinate_scale(corners);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(m));
  parallel_for(cells.size(), [&](std::size_t i) {
    auto row = box_moments(cells[i].lo() / s, cells[i].hi() / s, D);
    for (std::size_t j = 0; j < m; ++j) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  });
  KernelResult k = kernel_vector(A);
  Poly3 P = detail::unscale(k.vector, D, s).normalized();
  FitReport rep;
  rep.degree_used = D;
  rep.cells = cells.size();
  rep.kernel_dim = k.kernel_dim;
  for (const auto& c : cells) {
    double mag = 0.0;
    rep.residual = std::max(rep.residual, std::abs(cell_mean(P, c, &mag)));
    rep.scale = std::max(rep.scale, mag);
  }
  return {std::move(P), rep};
}

// ---------------------------------------------------------------------------
// Cutting at scale r

template <Field F>
double positive_fraction(const F& P, const Ball& ball, std::size_t samples, Rng& rng) {
  require(samples >= 1000, "positive_fraction: at least 1000 samples required");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < samples; ++i) pos += sign_at(P, rng.in_ball(ball.center, ball.radius)) > 0;
  return static_cast<double>(pos) / static_cast<double>(samples);
}

/// Fraction of the ball where P > 0, estimated from uniform samples.
template <Field F>
double positive_fraction(const F& P, const Ball& ball, std::size_t samples, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "positive-fraction");
  return positive_fraction(P, ball, samples, rng);
}

struct BallFraction {
  Ball ball;
  double positive_fraction = 0.5;
};

struct CutVerdict {
  std::size_t cube = 0;
  double scale_r = 0.0;
  bool passed = true;
  BallFraction worst_ball;
  std::size_t balls_tested = 0;
  std::size_t samples_per_ball = 0;
  double tolerance = 0.0;  // r (or its override) plus the statistical margin
};

/// The three roles of r in the definition can be overridden separately;
/// zero means "use r".
struct CutOptions {
  double radius_floor = 0.0;  // smallest ball radius
  double reach = 0.0;         // balls lie within this distance of the cube center
  double tolerance = 0.0;     // allowed |fraction - 1/2| before the margin
  bool stop_at_first_failure = false;
  std::size_t cube_index = 0;  // recorded in the verdict and used to derive the stream
};

/// Test balls: radii r, 2r, 4r, ... below 1, then 1; per radius, the cube
/// center, the 6 axis and 8 diagonal offsets at full and half reach, then
/// seeded random centers. Every ball lies inside the ball of radius `reach`
/// about the cube center.
inline std::vector<Ball> cut_ball_family(const UnitCube& Q, double radius_floor, double reach, std::size_t budget,
                                         Rng& rng) {
  std::vector<double> radii;
  for (double rad = radius_floor; rad < 1.0; rad *= 2) radii.push_back(rad);
  radii.push_back(1.0);
  const std::size_t per = (budget + radii.size() - 1) / radii.size();
  std::vector<Vec3> dirs;
  for (int i = 0; i < 3; ++i) {
    dirs.push_back(Vec3::Unit(i));
    dirs.push_back(-Vec3::Unit(i));
  }
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      for (int sz : {1, -1}) dirs.push_back(Vec3(sx, sy, sz) / std::sqrt(3.0));

  std::vector<Ball> out;
  for (double rad : radii) {
    const double room = std::max(0.0, reach - rad);
    std::vector<Vec3> centers{Q.center};
    for (double f : {1.0, 0.5})
      for (const auto& d : dirs) centers.push_back(Q.center + f * room * d);
    const std::size_t fixed = std::min(centers.size(), (per + 1) / 2);
    centers.resize(fixed);
    while (centers.size() < per) centers.push_back(rng.in_ball(Q.center, room));
    for (const auto& c : centers) out.push_back({c, rad});
  }
  return out;
}

/// Monte Carlo verdict for "P cuts Q at scale r" over a finite ball family.
template <Field F>
CutVerdict cuts_at_scale(const F& P, const UnitCube& Q, double r, std::size_t ball_budget, std::size_t samples,
                         std::uint64_t seed, const CutOptions& opt = {}) {
  require(r > 0 && r < 0.5, "cuts_at_scale: r must lie in (0, 1/2)");
  const double floor = opt.radius_floor > 0 ? opt.radius_floor : r;
  const double reach = opt.reach > 0 ? opt.reach : 1.0 / r;
  const double margin = 3.0 / (2.0 * std::sqrt(static_cast<double>(samples)));
  CutVerdict v;
  v.cube = opt.cube_index;
  v.scale_r = r;
  v.samples_per_ball = samples;
  v.tolerance = (opt.tolerance > 0 ? opt.tolerance : r) + margin;

  Rng family_rng = Rng::stream(seed, "cut-family", opt.cube_index);
  const auto balls = cut_ball_family(Q, floor, reach, ball_budget, family_rng);
  double worst = -1.0;
  for (std::size_t b = 0; b < balls.size(); ++b) {
    Rng rng = Rng::stream(seed, "cut-ball", (static_cast<std::uint64_t>(opt.cube_index) << 20) + b);
    const double f = positive_fraction(P, balls[b], samples, rng);
    ++v.balls_tested;
    const double dev = std::abs(f - 0.5);
    if (dev > worst) {
      worst = dev;
      v.worst_ball = {balls[b], f};
    }
    if (dev > v.tolerance) {
      v.passed = false;
      if (opt.stop_at_first_failure) break;
    }
  }
  return v;
}

}  // namespace kakeya
