#pragma once

// Randomized degree reduction for tubes as a seeded experiment, and the
// exact lines-mode analogue.
//
// Tube pipeline: subsample tubes, pick evenly spaced incident cubes on each,
// fit a polynomial with zero mean on every chosen cube (more cells than
// coefficients is impossible, so the degree follows from the cell count),
// then measure which cubes of X the polynomial cuts at scale r.

#include "kakeya/cutting.hpp"
#include "kakeya/geometry.hpp"
#include "kakeya/parallel.hpp"
#include "kakeya/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

namespace kakeya {

struct DegRedPlan {
  double K = 0.0;
  int D = 1;                     // ceil(K |X| / N^2)
  double subsample_prob = 1.0;   // K^-1/2 D^2 / |T|, clipped to (0, 1]
  std::size_t cubes_per_tube = 1;  // ceil(K^1/2 D)
  double scale_r = 0.0;
};

inline DegRedPlan plan_degree_reduction(const TubeConfig& cfg, double K, double r) {
  require(K > 0, "plan_degree_reduction: K must be positive");
  require(!cfg.tubes.empty(), "plan_degree_reduction: no tubes");
  const double N = cfg.params.N;
  DegRedPlan p;
  p.K = K;
  p.scale_r = r;
  p.D = static_cast<int>(std::ceil(K * static_cast<double>(cfg.cubes.size()) / (N * N) - 1e-12));
  require(p.D >= 1, "plan_degree_reduction: K |X| / N^2 rounds to degree 0");
  p.subsample_prob = std::min(1.0, std::pow(K, -0.5) * p.D * p.D / static_cast<double>(cfg.tubes.size()));
  p.cubes_per_tube = static_cast<std::size_t>(std::ceil(std::sqrt(K) * p.D - 1e-12));
  return p;
}

/// Smallest D' with dim Poly_D' > cells.
inline int fitting_degree(std::size_t cells) {
  int D = 0;
  while (dim_poly_space(D) <= cells) ++D;
  return D;
}

/// Every cube split into m^3 congruent cells.
inline std::vector<UnitCube> subdivide(const UnitCube& Q, int m) {
  std::vector<UnitCube> out;
  const double s = Q.side / m;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) out.push_back({Q.lo() + Vec3(i + 0.5, j + 0.5, k + 0.5) * s, s});
  return out;
}

/// `k` of the `count` height-sorted positions, stride floor(count / k) from
/// the lowest; all of them when k >= count.
inline std::vector<std::size_t> evenly_spaced(std::size_t count, std::size_t k) {
  std::vector<std::size_t> out;
  if (k >= count) {
    out.resize(count);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  const std::size_t stride = count / k;
  for (std::size_t i = 0; i < k; ++i) out.push_back(i * stride);
  return out;
}

/// `k` distinct indices of [0, n) drawn by a partial Fisher-Yates shuffle
/// and returned sorted; all of them when k >= n.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed,
                                               std::string_view tag) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (k >= n) return all;
  Rng rng = Rng::stream(seed, tag);
  for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + rng.below(n - i)]);
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

struct DegRedOptions {
  std::size_t verify_sample = 256;  // cubes of X checked at scale r (all if fewer)
  std::size_t ball_budget = 64;
  std::size_t samples = 2000;       // per ball
  int cells_per_cube = 1;           // per axis
  bool stop_at_first_failure = true;
  int max_draws = 8;
  CutOptions cut;  // overrides of the roles of r in the verification
};

struct StepTimings {
  double select = 0.0, fit = 0.0, verify = 0.0;  // seconds
};

struct DegRedReport {
  DegRedPlan plan;
  std::uint64_t seed = 0;
  int draws = 0;
  std::size_t selected_tubes = 0;
  std::size_t chosen_cubes = 0;
  std::size_t cells = 0;
  int degree_used = 0;
  bool degree_above_plan = false;  // parameter counting forced degree_used > plan.D
  FitReport fit;
  Poly3 poly;
  std::vector<std::size_t> verified_cubes;
  std::vector<CutVerdict> verdicts;
  double fraction_cut = 0.0;
  StepTimings timings;
};

namespace detail {
inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace detail

/// Cuts verdicts for the given cubes of X under a fixed polynomial.
inline std::vector<CutVerdict> verify_cuts(const Poly3& P, const TubeConfig& cfg, const std::vector<std::size_t>& cubes,
                                           double r, std::uint64_t seed, const DegRedOptions& opt = {}) {
  return parallel_map<CutVerdict>(cubes.size(), [&](std::size_t i) {
    CutOptions co = opt.cut;
    co.cube_index = cubes[i];
    co.stop_at_first_failure = opt.stop_at_first_failure;
    return cuts_at_scale(P, cfg.cubes[cubes[i]], r, opt.ball_budget, opt.samples, seed, co);
  });
}

inline DegRedReport run_degree_reduction(const TubeConfig& cfg, double K, double r, std::uint64_t seed,
                                         const DegRedOptions& opt = {}) {
  require(opt.cells_per_cube >= 1, "run_degree_reduction: cells per cube must be positive");
  DegRedReport rep;
  rep.seed = seed;
  auto t0 = std::chrono::steady_clock::now();

  const Incidences inc = incidences(cfg);
  HypothesesOptions ho;
  ho.counts_only = true;
  const HypothesesReport hyp = check_hypotheses(cfg, inc, ho);
  for (int c = 0; c < 2; ++c)
    if (!hyp.conditions[c].passed)
      throw PreconditionError("run_degree_reduction: hypothesis condition " + std::to_string(c + 1) +
                              " fails: " + hyp.conditions[c].detail);
  rep.plan = plan_degree_reduction(cfg, K, r);

  // Step 1: Bernoulli subsample of the tubes, redrawn while empty.
  std::vector<std::size_t> selected;
  for (rep.draws = 1; rep.draws <= opt.max_draws; ++rep.draws) {
    Rng rng = Rng::stream(seed, "degred-subsample", static_cast<std::uint64_t>(rep.draws));
    selected.clear();
    for (std::size_t t = 0; t < cfg.tubes.size(); ++t)
      if (rng.bernoulli(rep.plan.subsample_prob)) selected.push_back(t);
    if (!selected.empty()) break;
  }
  if (selected.empty())
    throw PreconditionError("run_degree_reduction: empty tube subsample in " + std::to_string(opt.max_draws) +
                            " draws (probability " + std::to_string(rep.plan.subsample_prob) + ")");
  rep.draws = std::min(rep.draws, opt.max_draws);
  rep.selected_tubes = selected.size();

  std::vector<char> chosen(cfg.cubes.size(), 0);
  for (std::size_t t : selected) {
    const auto& along = inc.by_tube[t];  // sorted by axis height
    for (std::size_t i : evenly_spaced(along.size(), rep.plan.cubes_per_tube)) chosen[along[i]] = 1;
  }
  std::vector<UnitCube> cells;
  for (std::size_t q = 0; q < cfg.cubes.size(); ++q) {
    if (!chosen[q]) continue;
    ++rep.chosen_cubes;
    for (const auto& c : subdivide(cfg.cubes[q], opt.cells_per_cube)) cells.push_back(c);
  }
  rep.cells = cells.size();
  rep.timings.select = detail::seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  rep.degree_used = fitting_degree(cells.size());
  rep.degree_above_plan = rep.degree_used > rep.plan.D;
  std::tie(rep.poly, rep.fit) = fit_cutting_poly(cells, rep.degree_used);
  rep.timings.fit = detail::seconds_since(t0);

  // Steps 2-4 are measured, not proved: check cutting on a sample of X.
  t0 = std::chrono::steady_clock::now();
  const auto all = sample_indices(cfg.cubes.size(), opt.verify_sample, seed, "degred-verify-sample");
  rep.verified_cubes = all;
  rep.verdicts = verify_cuts(rep.poly, cfg, all, r, seed, opt);
  std::size_t cut = 0;
  for (const auto& v : rep.verdicts) cut += v.passed;
  rep.fraction_cut = all.empty() ? 0.0 : static_cast<double>(cut) / static_cast<double>(all.size());
  rep.timings.verify = detail::seconds_since(t0);
  return rep;
}

// ---------------------------------------------------------------------------
// Lines mode

struct Line {
  Vec3 base = Vec3::Zero();
  Vec3 dir = Vec3::UnitX();
};

struct LinesReport {
  int D_target = 0;
  std::size_t points = 0;
  Poly3 poly;
  FitReport fit;
  std::vector<double> restriction_max;  // max |coefficient| of P restricted to each line
  std::size_t vanished = 0;             // lines whose restriction is zero to 1e-8
};

/// Fits P of degree <= D_target through points_per_line seeded points on
/// every line (parameter t uniform in [-1, 1] along the unit direction) and
/// checks that P restricts to zero on each line.
inline LinesReport run_lines_mode(const std::vector<Line>& lines, std::size_t points_per_line, int D_target,
                                  std::uint64_t seed) {
  require(points_per_line > static_cast<std::size_t>(D_target),
          "run_lines_mode: need more than D_target points per line");
  require(!lines.empty(), "run_lines_mode: no lines");
  LinesReport rep;
  rep.D_target = D_target;
  std::vector<Vec3> pts;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    Rng rng = Rng::stream(seed, "lines-mode", l);
    const Vec3 u = lines[l].dir.normalized();
    for (std::size_t k = 0; k < points_per_line; ++k) pts.push_back(lines[l].base + rng.uniform(-1.0, 1.0) * u);
  }
  rep.points = pts.size();
  rep.poly = fit_vanishing_poly(pts, D_target, &rep.fit);
  for (const auto& L : lines) {
    const double m = restrict_to_line(rep.poly, L.base, L.dir.normalized()).max_abs_coeff();
    rep.restriction_max.push_back(m);
    rep.vanished += m <= 1e-8;
  }
  return rep;
}

}  // namespace kakeya
