#pragma once

// The vanishing lemma for tubes as a measurement: projected shadows of Z(P)
// along tube segments, good/bad classification, and a contagion check that
// cubes on good segments are cut at the doubled scale.

#include "kakeya/cutting.hpp"
#include "kakeya/field.hpp"
#include "kakeya/geometry.hpp"
#include "kakeya/parallel.hpp"
#include "kakeya/rng.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace kakeya {

struct ShadowResult {
  double area = 0.0;
  std::size_t lines = 0;       // lines used in the estimate
  std::size_t hits = 0;
  std::size_t zero_lines = 0;  // lines lying in Z(P), excluded
};

namespace detail {
inline constexpr std::size_t kLineBlock = 1024;
}

/// Area of the projection of Z(P) ∩ N_R(T) restricted to the segment's
/// heights, onto the plane orthogonal to the tube: the fraction of
/// axis-parallel lines through the radius-(R+1) disk that meet Z(P) in
/// [t0, t1], times the disk area.
template <Field F>
ShadowResult shadow_area(const F& P, const Tube& T, const Segment& seg, double R, std::size_t lines,
                         std::uint64_t seed, std::uint64_t stream = 0) {
  require(R >= 1, "shadow_area: R must be at least 1");
  require(seg.t0 < seg.t1, "shadow_area: empty segment");
  const auto [e1, e2] = orthonormal_complement(T.dir);
  const double rad = R + 1;
  const std::size_t blocks = (lines + detail::kLineBlock - 1) / detail::kLineBlock;
  struct Tally {
    std::size_t hits = 0, zero = 0;
  };
  auto tallies = parallel_map<Tally>(blocks, [&](std::size_t b) {
    Rng rng = Rng::stream(seed, "shadow", (stream << 24) + b);
    Tally t;
    const std::size_t end = std::min(lines, (b + 1) * detail::kLineBlock);
    for (std::size_t i = b * detail::kLineBlock; i < end; ++i) {
      const Vec2 o = rng.in_disk(rad);
      const Vec3 base = T.base + o.x() * e1 + o.y() * e2;
      LineRoots lr = line_roots(P, base, T.dir, seg.t0, seg.t1);
      if (lr.line_in_zero_set)
        ++t.zero;
      else
        t.hits += !lr.roots.empty();
    }
    return t;
  });
  ShadowResult out;
  for (const auto& t : tallies) {
    out.hits += t.hits;
    out.zero_lines += t.zero;
  }
  out.lines = lines - out.zero_lines;
  if (out.lines) out.area = static_cast<double>(out.hits) / static_cast<double>(out.lines) * kPi * rad * rad;
  return out;
}

struct SegmentReport {
  Segment segment;
  double shadow_area = 0.0;
  bool is_good = true;
  double threshold = 0.0;
  std::size_t lines_sampled = 0;
  std::size_t zero_lines = 0;
};

struct VanishingOptions {
  double R = 0.0;              // 0: 3 + 1/r, capped by R_cap
  double R_cap = 0.0;          // 0: no cap (callers pass the config radius E*N)
  std::size_t lines = 4000;    // per segment
  int n = 3;                   // dimension entering the threshold (100n)^-n r^2n
  double threshold = 0.0;      // 0: the lemma's threshold
  double bad_constant = 1.0;   // c in the reference bound c * r^-4n * D
  std::size_t ball_budget = 64;
  std::size_t samples = 10000;
};

struct SegmentClassification {
  std::vector<SegmentReport> segments;
  std::size_t bad_count = 0;
  double bad_bound = 0.0;  // c * r^-4n * D
  double R = 0.0;
};

inline double vanishing_radius(double r, const VanishingOptions& opt) {
  double R = opt.R > 0 ? opt.R : 3.0 + 1.0 / r;
  if (opt.R_cap > 0) R = std::min(R, opt.R_cap);
  return R;
}

inline double good_threshold(double r, const VanishingOptions& opt) {
  if (opt.threshold > 0) return opt.threshold;
  return std::pow(100.0 * opt.n, -opt.n) * std::pow(r, 2 * opt.n);
}

/// Splits T at the marked cubes and sorts the pieces into good and bad by
/// their shadows.
template <Field F>
SegmentClassification classify_segments(const F& P, const Tube& T, const std::vector<UnitCube>& marked, double r,
                                        std::uint64_t seed, const VanishingOptions& opt = {},
                                        std::size_t tube_index = 0) {
  require(r > 0, "classify_segments: r must be positive");
  SegmentClassification out;
  out.R = vanishing_radius(r, opt);
  const double threshold = good_threshold(r, opt);
  out.bad_bound = opt.bad_constant * std::pow(r, -4.0 * opt.n) * P.degree();
  auto segs = segments_between_cubes(T, marked, tube_index);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    ShadowResult s = shadow_area(P, T, segs[i], out.R, opt.lines, seed, i);
    SegmentReport rep;
    rep.segment = segs[i];
    rep.shadow_area = s.area;
    rep.threshold = threshold;
    rep.is_good = s.area <= threshold;
    rep.lines_sampled = s.lines;
    rep.zero_lines = s.zero_lines;
    out.bad_count += !rep.is_good;
    out.segments.push_back(rep);
  }
  return out;
}

struct ProbeResult {
  UnitCube cube;
  std::size_t segment = 0;  // index into the classification
  CutVerdict verdict;
};

struct ContagionReport {
  std::vector<CutVerdict> premise;  // marked cubes at scale r
  SegmentClassification classification;
  std::vector<ProbeResult> probes;  // cubes on good segments at scale 2r
  std::size_t passed = 0;
  double pass_fraction = 0.0;  // 0 probes: reported as 0 with an empty list
};

/// Checks that cubes meeting good segments are cut at scale 2r, given that
/// every marked cube is cut at scale r.
template <Field F>
ContagionReport verify_contagion(const F& P, const Tube& T, const std::vector<UnitCube>& marked, double r,
                                 std::size_t probe_cubes, std::uint64_t seed, const VanishingOptions& opt = {}) {
  require(2 * r < 0.5, "verify_contagion: 2r must lie below 1/2");
  ContagionReport out;
  out.premise = parallel_map<CutVerdict>(marked.size(), [&](std::size_t i) {
    CutOptions co;
    co.cube_index = i;
    return cuts_at_scale(P, marked[i], r, opt.ball_budget, opt.samples, seed ^ tag_hash("premise"), co);
  });
  for (std::size_t i = 0; i < out.premise.size(); ++i)
    if (!out.premise[i].passed)
      throw PreconditionError("verify_contagion: P does not cut marked cube " + std::to_string(i) + " at scale r");

  out.classification = classify_segments(P, T, marked, r, seed, opt);
  std::vector<std::size_t> good;
  double total = 0.0;
  for (std::size_t i = 0; i < out.classification.segments.size(); ++i)
    if (out.classification.segments[i].is_good) {
      good.push_back(i);
      total += out.classification.segments[i].segment.length();
    }
  if (good.empty()) return out;

  // Probe cubes: a length-weighted good segment, a uniform height in it and
  // a uniform offset in the tube's cross-section.
  Rng rng = Rng::stream(seed, "probe-cubes");
  const auto [e1, e2] = orthonormal_complement(T.dir);
  for (std::size_t p = 0; p < probe_cubes; ++p) {
    double u = rng.uniform(0.0, total);
    std::size_t k = 0;
    while (k + 1 < good.size() && u > out.classification.segments[good[k]].segment.length()) {
      u -= out.classification.segments[good[k]].segment.length();
      ++k;
    }
    const Segment& s = out.classification.segments[good[k]].segment;
    const double h = s.t0 + std::min(u, s.length());
    const Vec2 o = rng.in_disk(T.radius);
    out.probes.push_back({UnitCube{T.at(h) + o.x() * e1 + o.y() * e2, 1.0}, good[k], {}});
  }
  parallel_for(out.probes.size(), [&](std::size_t i) {
    CutOptions co;
    co.cube_index = i;
    out.probes[i].verdict = cuts_at_scale(P, out.probes[i].cube, 2 * r, opt.ball_budget, opt.samples, seed, co);
  });
  for (const auto& p : out.probes) out.passed += p.verdict.passed;
  out.pass_fraction = static_cast<double>(out.passed) / static_cast<double>(out.probes.size());
  return out;
}

/// Cubes of X meeting tube t, taken greedily from the lowest axis height so
/// that consecutive picks are at least `gap` apart in height (hence in
/// distance); at most `limit` of them when limit > 0.
inline std::vector<UnitCube> spaced_cubes_along(const TubeConfig& cfg, const Incidences& inc, std::size_t t,
                                                double gap = 6.0, std::size_t limit = 0) {
  require(t < cfg.tubes.size(), "spaced_cubes_along: tube index out of range");
  const Tube& T = cfg.tubes[t];
  std::vector<UnitCube> out;
  double last = -1e300;
  for (std::size_t q : inc.by_tube[t]) {
    const double h = T.height(cfg.cubes[q].center);
    if (h - last < gap) continue;
    out.push_back(cfg.cubes[q]);
    last = h;
    if (limit > 0 && out.size() == limit) break;
  }
  return out;
}

}  // namespace kakeya
