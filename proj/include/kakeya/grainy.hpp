#pragma once

// Planiness and graininess analyzers: a plane pi(Q) per cube, angle
// statistics between tube directions and pi(Q) and between pi(Q) and pi(Q')
// along tubes, the cylinder tangency check, and the curvature census.

#include "kakeya/crofton.hpp"
#include "kakeya/field.hpp"
#include "kakeya/geometry.hpp"
#include "kakeya/parallel.hpp"
#include "kakeya/poly3.hpp"
#include "kakeya/rng.hpp"
#include "kakeya/surfgeom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace kakeya {

enum class PlaneSource { TwoTransverseTubes, NormalAverage, Unassigned };

inline const char* to_string(PlaneSource s) {
  switch (s) {
    case PlaneSource::TwoTransverseTubes: return "two-transverse-tubes";
    case PlaneSource::NormalAverage: return "normal-average";
    default: return "unassigned";
  }
}

struct PlaneAssignment {
  std::size_t cube = 0;
  Vec3 normal = Vec3::UnitZ();  // unit normal of pi(Q), largest component positive
  PlaneSource source = PlaneSource::Unassigned;
  std::size_t sample_count = 0;  // surface points found in Q+
  std::size_t tube1 = 0, tube2 = 0;  // the spanning pair, when source is TwoTransverseTubes
  double tangency = 0.0;             // sampled mean of |v(T1).N| + |v(T2).N|

  bool assigned() const { return source != PlaneSource::Unassigned; }
};

/// Dihedral angle in [0, pi/2]; symmetric in its arguments bit for bit.
inline double plane_angle(const Vec3& n1, const Vec3& n2) { return line_angle(n1, n2); }

struct PlaneOptions {
  double q_plus_side = 3.0;  // side of the concentric cube Q+ searched for Z(P)
  std::size_t attempts_per_sample = 4;
};

/// pi(Q) for every cube of X from the surface normals of Z(P) sampled in Q+.
///
/// Primary: among tubes meeting Q with mutual angle >= 1/E, the pair with
/// the least sampled tangency |v(T1).N| + |v(T2).N|; ties go to the lower
/// tube indices. Fallback: the plane orthogonal to the sign-aligned mean
/// normal. Cubes without surface points in Q+ stay unassigned.
template <Field F>
std::vector<PlaneAssignment> assign_planes(const F& P, const TubeConfig& cfg, const Incidences& inc,
                                           std::size_t samples_per_cube, std::uint64_t seed,
                                           const PlaneOptions& opt = {}) {
  require(samples_per_cube >= 1, "assign_planes: need at least one sample per cube");
  const double min_angle = 1.0 / cfg.params.E;
  return parallel_map<PlaneAssignment>(cfg.cubes.size(), [&](std::size_t q) {
    PlaneAssignment a;
    a.cube = q;
    const UnitCube& Q = cfg.cubes[q];
    const Vec3 half = Vec3::Constant(opt.q_plus_side * Q.side / 2);
    Rng rng = Rng::stream(seed, "assign-planes", q);
    const auto pts = surface_points_in_box(P, Q.center - half, Q.center + half, samples_per_cube,
                                           samples_per_cube * opt.attempts_per_sample, rng);
    a.sample_count = pts.size();
    if (pts.empty()) return a;
    std::vector<Vec3> normals;
    normals.reserve(pts.size());
    for (const auto& x : pts) normals.push_back(P.jet(x).grad.normalized());

    const auto& tubes = inc.by_cube[q];
    std::vector<double> score(tubes.size(), 0.0);
    for (std::size_t i = 0; i < tubes.size(); ++i) {
      const Vec3& v = cfg.tubes[tubes[i]].dir;
      for (const auto& n : normals) score[i] += std::abs(v.dot(n));
      score[i] /= static_cast<double>(normals.size());
    }
    // Pairs in tube-index order, so the strict comparison keeps the lowest
    // indices among equal scores.
    std::vector<std::size_t> order(tubes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return tubes[x] < tubes[y]; });
    double best = 1e300;
    for (std::size_t ii = 0; ii < order.size(); ++ii)
      for (std::size_t jj = ii + 1; jj < order.size(); ++jj) {
        const std::size_t i = order[ii], j = order[jj];
        const double s = score[i] + score[j];
        if (s >= best) continue;
        if (line_angle(cfg.tubes[tubes[i]].dir, cfg.tubes[tubes[j]].dir) < min_angle) continue;
        best = s;
        a.tube1 = tubes[i];
        a.tube2 = tubes[j];
      }
    if (best < 1e300) {
      a.source = PlaneSource::TwoTransverseTubes;
      a.normal = detail::canonical_sign(cfg.tubes[a.tube1].dir.cross(cfg.tubes[a.tube2].dir).normalized());
      a.tangency = best;
      return a;
    }
    Vec3 mean = Vec3::Zero();
    for (const auto& n : normals) mean += n.dot(normals.front()) < 0 ? Vec3(-n) : n;
    if (mean.norm() == 0.0) return a;
    a.source = PlaneSource::NormalAverage;
    a.normal = detail::canonical_sign(mean.normalized());
    return a;
  });
}

template <Field F>
std::vector<PlaneAssignment> assign_planes(const F& P, const TubeConfig& cfg, std::size_t samples_per_cube,
                                           std::uint64_t seed, const PlaneOptions& opt = {}) {
  return assign_planes(P, cfg, incidences(cfg), samples_per_cube, seed, opt);
}

/// The exact surfaces of the reference configurations: the planes
/// x1 = i + 1/2 carrying the slab layers, and the regulus x3 = x1 x2 / N.
inline ProductPoly3 slab_surface(const TubeConfig& cfg) {
  double top = 0.0;
  for (const auto& c : cfg.cubes) top = std::max(top, c.center.x());
  std::vector<Poly3> f;
  for (int k = 0; k + 0.5 <= top + 1e-9; ++k) f.push_back(Poly3::affine(Vec3::UnitX(), -(k + 0.5)));
  return ProductPoly3(std::move(f));
}

inline Poly3 regulus_surface(double N) { return Poly3::variable(2) - Poly3::monomial(1, 1, 0) * (1.0 / N); }

// ---------------------------------------------------------------------------
// Angle statistics

struct AngleRecord {
  std::size_t cube = 0;   // Q
  std::size_t tube = 0;   // T
  std::size_t other = 0;  // Q' (graininess only; equals cube otherwise)
  double angle = 0.0;
  double distance = 0.0;  // graininess: Dist(Q, Q'); planiness: Q center to the axis of T
};

struct AngleStats {
  std::vector<AngleRecord> records;
  double p50 = 0.0, p90 = 0.0, p99 = 0.0;
  double threshold = 0.0;
  double fraction_within = 0.0;
  double epsilon = 0.0;
  bool meets_fraction = false;  // fraction_within >= 1 - epsilon
  bool empty = true;            // no eligible pairs
  std::size_t incidences_total = 0;
  std::size_t incidences_used = 0;  // after the stride cap
  std::size_t unassigned_skipped = 0;
};

struct StatsOptions {
  double epsilon = 0.1;
  std::size_t max_incidences = 10000;   // evenly strided subset of (Q, T) pairs beyond this; 0 = all
};

namespace detail {

/// Nearest-rank quantile of sorted data.
inline double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
  return sorted[std::min(sorted.size(), std::max<std::size_t>(k, 1)) - 1];
}

inline void finish_stats(AngleStats& s, double threshold, double epsilon) {
  s.threshold = threshold;
  s.epsilon = epsilon;
  s.empty = s.records.empty();
  if (s.empty) return;
  std::vector<double> a;
  a.reserve(s.records.size());
  std::size_t within = 0;
  for (const auto& r : s.records) {
    a.push_back(r.angle);
    within += r.angle <= threshold;
  }
  std::sort(a.begin(), a.end());
  s.p50 = quantile(a, 0.5);
  s.p90 = quantile(a, 0.9);
  s.p99 = quantile(a, 0.99);
  s.fraction_within = static_cast<double>(within) / static_cast<double>(a.size());
  s.meets_fraction = s.fraction_within >= 1.0 - epsilon;
}

/// Flattened (tube, position) incidences, thinned to at most `cap` by an
/// even stride.
inline std::vector<std::pair<std::size_t, std::size_t>> strided_incidences(const Incidences& inc, std::size_t cap,
                                                                           std::size_t* total) {
  std::size_t n = 0;
  for (const auto& v : inc.by_tube) n += v.size();
  *total = n;
  std::vector<std::pair<std::size_t, std::size_t>> all;
  all.reserve(cap > 0 ? std::min(cap, n) : n);
  const bool thin = cap > 0 && n > cap;
  std::size_t k = 0, next = 0, taken = 0;
  for (std::size_t t = 0; t < inc.by_tube.size(); ++t)
    for (std::size_t i = 0; i < inc.by_tube[t].size(); ++i, ++k) {
      if (thin) {
        if (k != next) continue;
        ++taken;
        next = static_cast<std::size_t>(static_cast<long double>(taken) * n / cap);
      }
      all.push_back({t, i});
    }
  return all;
}

}  // namespace detail

/// Angle between v(T) and pi(Q) over the incidences of X, against c N^-sigma.
inline AngleStats planiness_stats(const TubeConfig& cfg, const Incidences& inc,
                                  const std::vector<PlaneAssignment>& planes, double c, const StatsOptions& opt = {}) {
  require(planes.size() == cfg.cubes.size(), "planiness_stats: one plane assignment per cube required");
  AngleStats s;
  const auto pairs = detail::strided_incidences(inc, opt.max_incidences, &s.incidences_total);
  s.incidences_used = pairs.size();
  for (const auto& [t, i] : pairs) {
    const std::size_t q = inc.by_tube[t][i];
    if (!planes[q].assigned()) {
      ++s.unassigned_skipped;
      continue;
    }
    const Tube& T = cfg.tubes[t];
    s.records.push_back(
        {q, t, q, line_plane_angle(T.dir, planes[q].normal), distance_to_axis(T, cfg.cubes[q].center)});
  }
  detail::finish_stats(s, c * std::pow(cfg.params.N, -cfg.params.sigma), opt.epsilon);
  return s;
}

/// Angle between pi(Q) and pi(Q') for Q, Q' on a common tube with
/// Dist(Q, Q') <= K^-1 N^sigma (center to center), against K N^-sigma.
inline AngleStats graininess_stats(const TubeConfig& cfg, const Incidences& inc,
                                   const std::vector<PlaneAssignment>& planes, double K, const StatsOptions& opt = {}) {
  require(planes.size() == cfg.cubes.size(), "graininess_stats: one plane assignment per cube required");
  require(K > 0, "graininess_stats: K must be positive");
  const double N = cfg.params.N, sigma = cfg.params.sigma;
  const double reach = std::pow(N, sigma) / K;
  AngleStats s;
  const auto pairs = detail::strided_incidences(inc, opt.max_incidences, &s.incidences_total);
  s.incidences_used = pairs.size();

  struct Local {
    std::vector<AngleRecord> recs;
    bool skipped = false;
  };
  auto per = parallel_map<Local>(pairs.size(), [&](std::size_t p) {
    Local out;
    const auto [t, i] = pairs[p];
    const auto& along = inc.by_tube[t];
    const std::size_t q = along[i];
    if (!planes[q].assigned()) {
      out.skipped = true;
      return out;
    }
    const Tube& T = cfg.tubes[t];
    const double h = T.height(cfg.cubes[q].center);
    auto visit = [&](std::size_t j) {
      const std::size_t q2 = along[j];
      if (!planes[q2].assigned()) return;
      const double d = (cfg.cubes[q2].center - cfg.cubes[q].center).norm();
      if (d <= reach) out.recs.push_back({q, t, q2, plane_angle(planes[q].normal, planes[q2].normal), d});
    };
    // Heights are sorted and bound the distance from below.
    for (std::size_t j = i; j-- > 0;) {
      if (h - T.height(cfg.cubes[along[j]].center) > reach) break;
      visit(j);
    }
    for (std::size_t j = i + 1; j < along.size(); ++j) {
      if (T.height(cfg.cubes[along[j]].center) - h > reach) break;
      visit(j);
    }
    return out;
  });
  for (auto& l : per) {
    s.unassigned_skipped += l.skipped;
    s.records.insert(s.records.end(), l.recs.begin(), l.recs.end());
  }
  detail::finish_stats(s, K * std::pow(N, -sigma), opt.epsilon);
  return s;
}

// ---------------------------------------------------------------------------
// Cylinder tangency

struct TangencyCheck {
  double integral_estimate = 0.0;  // of |v(T).N| over Z(P) inside T
  double bound = 0.0;              // pi R^2 deg P
  double ratio = 0.0;
  bool flagged = false;            // ratio > 1 + tolerance
  SliceAverage slices;
};

/// Estimates the integral of |v(T).N| over Z(P) in the solid cylinder T by
/// random-plane slices in tube coordinates.
inline TangencyCheck cylinder_tangency_check(const Poly3& P, const Tube& T, std::size_t slices, std::uint64_t seed,
                                             double tolerance = 0.1, const SliceOptions& opt = {}) {
  T.validate();
  auto [e1, e2] = orthonormal_complement(T.dir);
  Mat3 M;
  M.col(0) = e1;
  M.col(1) = e2;
  M.col(2) = T.dir;
  const Poly3 Pt = compose_affine(P, M, T.base);  // P in coordinates where T is the x3-axis
  auto f = [&Pt](const Vec3& y) {
    const Vec3 g = Pt.grad(y);
    const double n = g.norm();
    return n > 0 ? std::abs(g.z()) / n : 0.0;
  };
  TangencyCheck out;
  out.slices = slice_average(Pt, f, SliceCylinder{T.radius, 0.0, T.length}, slices, seed, opt);
  out.integral_estimate = out.slices.estimate;
  out.bound = kPi * T.radius * T.radius * P.degree();
  out.ratio = out.bound > 0 ? out.integral_estimate / out.bound : 0.0;
  out.flagged = out.ratio > 1.0 + tolerance;
  return out;
}

// ---------------------------------------------------------------------------
// Curvature census

struct CubeCensus {
  std::size_t cube = 0;
  std::size_t points = 0;
  std::size_t exceeding = 0;  // points with |A| > H
};

struct CurvatureCensus {
  double H = 0.0;
  std::size_t points = 0;
  std::size_t exceeding = 0;
  double fraction_exceeding = 0.0;
  std::vector<CubeCensus> per_cube;  // cubes with at least one surface point
  std::size_t skipped_cubes = 0;
  std::vector<double> bin_edges;           // histogram of |A|, last bin open
  std::vector<std::size_t> bin_counts;
};

struct CensusOptions {
  std::size_t bins = 20;
  double hist_max = 0.0;  // 0 = 4 H
  std::size_t attempts_per_sample = 4;
};

/// |A| at points of Z(P) projected from seeds inside each cube of X.
template <Field F>
CurvatureCensus curvature_census(const F& P, const TubeConfig& cfg, double H, std::size_t samples,
                                 std::uint64_t seed, const CensusOptions& opt = {}) {
  require(H > 0, "curvature_census: H must be positive");
  require(opt.bins >= 1, "curvature_census: need at least one bin");
  CurvatureCensus c;
  c.H = H;
  const double top = opt.hist_max > 0 ? opt.hist_max : 4 * H;
  for (std::size_t b = 0; b <= opt.bins; ++b) c.bin_edges.push_back(top * static_cast<double>(b) / opt.bins);
  c.bin_counts.assign(opt.bins, 0);

  auto norms = parallel_map<std::vector<double>>(cfg.cubes.size(), [&](std::size_t q) {
    Rng rng = Rng::stream(seed, "census", q);
    const UnitCube& Q = cfg.cubes[q];
    std::vector<double> out;
    for (const auto& x : surface_points_in_box(P, Q.lo(), Q.hi(), samples, samples * opt.attempts_per_sample, rng))
      out.push_back(sff_norm(P, x));
    return out;
  });
  for (std::size_t q = 0; q < norms.size(); ++q) {
    if (norms[q].empty()) {
      ++c.skipped_cubes;
      continue;
    }
    CubeCensus cc{q, norms[q].size(), 0};
    for (double a : norms[q]) {
      cc.exceeding += a > H;
      auto b = static_cast<std::size_t>(a / top * static_cast<double>(opt.bins));
      ++c.bin_counts[std::min(b, opt.bins - 1)];
    }
    c.points += cc.points;
    c.exceeding += cc.exceeding;
    c.per_cube.push_back(cc);
  }
  c.fraction_exceeding = c.points ? static_cast<double>(c.exceeding) / static_cast<double>(c.points) : 0.0;
  return c;
}

}  // namespace kakeya
