#pragma once

// Tubes, unit cubes and tube configurations: incidence computation, the
// four Hypotheses as diagnostics, tube segments, and generators for the slab
// and regulus reference configurations.

#include "kakeya/core.hpp"
#include "kakeya/parallel.hpp"
#include "kakeya/rng.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

namespace kakeya {

struct Tube {
  Vec3 base = Vec3::Zero();  // start of the axis segment
  Vec3 dir = Vec3::UnitZ();  // v(T), unit
  double radius = 1.0;
  double length = 1.0;

  Vec3 at(double t) const { return base + t * dir; }
  Vec3 end() const { return at(length); }
  /// Axis coordinate of the orthogonal projection of p.
  double height(const Vec3& p) const { return (p - base).dot(dir); }

  void validate() const {
    require(radius > 0, "Tube: radius must be positive");
    require(length > 0, "Tube: length must be positive");
    require(std::abs(dir.norm() - 1.0) <= 1e-9, "Tube: direction must be a unit vector");
  }
};

struct UnitCube {
  Vec3 center = Vec3::Zero();
  double side = 1.0;

  Vec3 lo() const { return center - Vec3::Constant(side / 2); }
  Vec3 hi() const { return center + Vec3::Constant(side / 2); }
};

struct ConfigParams {
  double N = 16;
  double sigma = 0.5;
  double E = 8;
  double rho = 2;
};

struct TubeConfig {
  ConfigParams params;
  std::vector<UnitCube> cubes;
  std::vector<Tube> tubes;

  void validate() const {
    require(params.N > 1, "TubeConfig: N must exceed 1");
    require(params.sigma > 0 && params.sigma < 1, "TubeConfig: sigma must lie in (0,1)");
    require(params.E > 1, "TubeConfig: E must exceed 1");
    require(params.rho >= 2, "TubeConfig: rho must be at least 2");
    const double R = params.E * params.N;
    for (const auto& c : cubes) {
      require(c.side > 0, "TubeConfig: cube side must be positive");
      require(c.center.norm() + c.side <= R, "TubeConfig: cube outside the ball of radius E*N");
    }
    for (const auto& t : tubes) {
      t.validate();
      require(t.base.norm() <= R && t.end().norm() <= R, "TubeConfig: tube outside the ball of radius E*N");
    }
  }
};

enum class SegmentRole { BetweenCubes, CenteredAtCube };

struct Segment {
  std::size_t tube = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  SegmentRole role = SegmentRole::BetweenCubes;
  bool clipped = false;     // shortened by the tube ends
  bool whole_tube = false;  // requested length exceeded the tube

  double length() const { return t1 - t0; }
};

/// Squared distance from the axis segment of T to the closed box [lo, hi].
/// The squared distance is a convex piecewise quadratic in t; each piece
/// between face crossings is minimised in closed form.
inline double segment_box_distance2(const Tube& T, const Vec3& lo, const Vec3& hi) {
  std::array<double, 8> cuts{0.0, T.length};
  std::size_t nc = 2;
  for (int i = 0; i < 3; ++i) {
    if (T.dir[i] == 0.0) continue;
    for (double b : {lo[i], hi[i]}) {
      double t = (b - T.base[i]) / T.dir[i];
      if (t > 0.0 && t < T.length) cuts[nc++] = t;
    }
  }
  std::sort(cuts.begin(), cuts.begin() + static_cast<std::ptrdiff_t>(nc));
  double best = std::numeric_limits<double>::infinity();
  auto dist2 = [&](double t) {
    Vec3 p = T.at(t);
    return (p - p.cwiseMax(lo).cwiseMin(hi)).squaredNorm();
  };
  for (std::size_t k = 0; k + 1 < nc; ++k) {
    double ta = cuts[k], tb = cuts[k + 1];
    Vec3 pm = T.at((ta + tb) / 2);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 3; ++i) {
      double bound;
      if (pm[i] < lo[i])
        bound = lo[i];
      else if (pm[i] > hi[i])
        bound = hi[i];
      else
        continue;
      num += T.dir[i] * (T.base[i] - bound);
      den += T.dir[i] * T.dir[i];
    }
    double t = den > 0 ? std::clamp(-num / den, ta, tb) : ta;
    best = std::min({best, dist2(t), dist2(ta), dist2(tb)});
  }
  return best;
}

/// True iff the solid cylinder of T and the solid cube Q intersect.
inline bool tube_cube_intersects(const Tube& T, const UnitCube& Q) {
  return segment_box_distance2(T, Q.lo(), Q.hi()) <= T.radius * T.radius;
}

/// Shortest distance from a point to the axis segment of T.
inline double distance_to_axis(const Tube& T, const Vec3& p) {
  double t = std::clamp(T.height(p), 0.0, T.length);
  return (p - T.at(t)).norm();
}

struct Incidences {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (cube, tube), sorted
  std::vector<std::vector<std::size_t>> by_cube;           // tube indices per cube
  std::vector<std::vector<std::size_t>> by_tube;           // cube indices per tube, by axis height

  /// Recomputes by_cube and pairs from by_tube.
  void rebuild_from_tubes(std::size_t cube_count) {
    by_cube.assign(cube_count, {});
    for (std::size_t t = 0; t < by_tube.size(); ++t)
      for (std::size_t c : by_tube[t]) by_cube[c].push_back(t);
    pairs.clear();
    for (std::size_t c = 0; c < cube_count; ++c)
      for (std::size_t t : by_cube[c]) pairs.emplace_back(c, t);
  }
};

namespace detail {

inline std::uint64_t cell_key(std::int64_t i, std::int64_t j, std::int64_t k) {
  constexpr std::int64_t off = 1 << 20;
  return (static_cast<std::uint64_t>(i + off) << 42) | (static_cast<std::uint64_t>(j + off) << 21) |
         static_cast<std::uint64_t>(k + off);
}

/// Spatial index of cube centers with cell size equal to the largest cube
/// side. Lattice configurations (at most one center per cell, compact
/// bounding box) use a dense array; anything else a hash map.
class CubeGrid {
 public:
  explicit CubeGrid(const std::vector<UnitCube>& cubes) {
    for (const auto& c : cubes) cell_ = std::max(cell_, c.side);
    std::vector<std::array<std::int64_t, 3>> keys(cubes.size());
    std::array<std::int64_t, 3> lo{}, hi{};
    for (std::size_t i = 0; i < cubes.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        keys[i][a] = fl(cubes[i].center[a]);
        lo[a] = i == 0 ? keys[i][a] : std::min(lo[a], keys[i][a]);
        hi[a] = i == 0 ? keys[i][a] : std::max(hi[a], keys[i][a]);
      }
    }
    lo_ = lo;
    std::size_t cells = 1;
    for (int a = 0; a < 3; ++a) {
      ext_[a] = cubes.empty() ? 0 : hi[a] - lo[a] + 1;
      cells *= static_cast<std::size_t>(std::max<std::int64_t>(ext_[a], 1));
    }
    dense_ = !cubes.empty() && cells <= std::max<std::size_t>(64 * cubes.size(), 1 << 20);
    if (dense_) {
      slots_.assign(cells, -1);
      for (std::size_t i = 0; i < cubes.size(); ++i) {
        auto& slot = slots_[offset(keys[i])];
        if (slot >= 0) {
          dense_ = false;
          break;
        }
        slot = static_cast<std::int64_t>(i);
      }
    }
    if (!dense_) {
      slots_.clear();
      for (std::size_t i = 0; i < cubes.size(); ++i) map_[cell_key(keys[i][0], keys[i][1], keys[i][2])].push_back(i);
    }
  }

  /// Calls f(index) for cubes whose center lies in a cell meeting [lo, hi].
  template <class F>
  void visit_box(const Vec3& lo, const Vec3& hi, F&& f) const {
    std::array<std::int64_t, 3> a{fl(lo.x()), fl(lo.y()), fl(lo.z())}, b{fl(hi.x()), fl(hi.y()), fl(hi.z())};
    if (dense_) {
      for (int k = 0; k < 3; ++k) {
        a[k] = std::max(a[k], lo_[k]);
        b[k] = std::min(b[k], lo_[k] + ext_[k] - 1);
        if (a[k] > b[k]) return;
      }
      for (auto i = a[0]; i <= b[0]; ++i)
        for (auto j = a[1]; j <= b[1]; ++j)
          for (auto k = a[2]; k <= b[2]; ++k) {
            auto v = slots_[offset({i, j, k})];
            if (v >= 0) f(static_cast<std::size_t>(v));
          }
      return;
    }
    for (auto i = a[0]; i <= b[0]; ++i)
      for (auto j = a[1]; j <= b[1]; ++j)
        for (auto k = a[2]; k <= b[2]; ++k) {
          auto it = map_.find(cell_key(i, j, k));
          if (it == map_.end()) continue;
          for (std::size_t idx : it->second) f(idx);
        }
  }

  double cell() const { return cell_; }

 private:
  std::int64_t fl(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  std::size_t offset(const std::array<std::int64_t, 3>& k) const {
    return static_cast<std::size_t>(((k[0] - lo_[0]) * ext_[1] + (k[1] - lo_[1])) * ext_[2] + (k[2] - lo_[2]));
  }

  double cell_ = 1.0;
  bool dense_ = false;
  std::array<std::int64_t, 3> lo_{}, ext_{};
  std::vector<std::int64_t> slots_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> map_;
};

}  // namespace detail

/// Cubes of `cubes` meeting tube T, sorted by axis height of the center.
inline std::vector<std::size_t> cubes_meeting(const Tube& T, const std::vector<UnitCube>& cubes,
                                              const detail::CubeGrid& grid) {
  const double reach = T.radius + grid.cell() * std::sqrt(3.0) / 2 + 0.5;
  std::vector<std::size_t> hits;
  const int steps = std::max(1, static_cast<int>(std::ceil(T.length)));
  for (int s = 0; s <= steps; ++s) {
    Vec3 p = T.at(T.length * s / steps);
    grid.visit_box(p - Vec3::Constant(reach), p + Vec3::Constant(reach), [&](std::size_t i) {
      // Necessary condition: the center is within radius + half diagonal of the axis.
      const double r = T.radius + cubes[i].side * 0.8660254037844387;
      if (distance_to_axis(T, cubes[i].center) <= r) hits.push_back(i);
    });
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  std::vector<std::size_t> out;
  for (std::size_t i : hits)
    if (tube_cube_intersects(T, cubes[i])) out.push_back(i);
  std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    return T.height(cubes[a].center) < T.height(cubes[b].center);
  });
  return out;
}

inline Incidences incidences(const TubeConfig& cfg) {
  Incidences inc;
  inc.by_cube.resize(cfg.cubes.size());
  if (cfg.tubes.empty() || cfg.cubes.empty()) {
    inc.by_tube.resize(cfg.tubes.size());
    return inc;
  }
  detail::CubeGrid grid(cfg.cubes);
  inc.by_tube = parallel_map<std::vector<std::size_t>>(
      cfg.tubes.size(), [&](std::size_t t) { return cubes_meeting(cfg.tubes[t], cfg.cubes, grid); });
  inc.rebuild_from_tubes(cfg.cubes.size());
  return inc;
}

// ---------------------------------------------------------------------------
// Hypotheses

struct ConditionResult {
  bool passed = true;
  double worst = 0.0;          // the extreme value that decided the condition
  std::size_t witness = 0;     // index of a violating (or extreme) tube/cube
  std::size_t violations = 0;  // number of violating tubes/cubes/points
  std::string detail;
};

struct HypothesesReport {
  std::array<ConditionResult, 4> conditions;
  bool all_passed() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.passed; });
  }
};

struct HypothesesOptions {
  double grid_spacing = 0.5;  // condition 3 sample grid
  double net_mesh = 0.0;      // condition 4 direction net; 0 means 1/(4E)
  bool counts_only = false;   // evaluate conditions 1 and 2 only
};

/// Deterministic direction net on the upper hemisphere (lines, so v ~ -v),
/// Fibonacci spiral with roughly the requested mesh.
inline std::vector<Vec3> direction_net(double mesh) {
  require(mesh > 0, "direction_net: mesh must be positive");
  const auto n = static_cast<std::size_t>(std::ceil(4 * kPi / (mesh * mesh)));
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> out;
  out.reserve(n / 2 + 1);
  for (std::size_t i = 0; i < n; ++i) {
    double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    if (z < 0) break;
    double r = std::sqrt(std::max(0.0, 1 - z * z));
    double phi = golden * static_cast<double>(i);
    out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return out;
}

namespace detail {

using Bits = std::vector<std::uint64_t>;

inline bool subset_of(const Bits& a, const Bits& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] & ~b[i]) return false;
  return true;
}

inline std::size_t popcount_union(const Bits& a, const Bits& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += static_cast<std::size_t>(__builtin_popcountll(a[i] | b[i]));
  return n;
}

}  // namespace detail

inline HypothesesReport check_hypotheses(const TubeConfig& cfg, const Incidences& inc,
                                         const HypothesesOptions& opt = {}) {
  const auto& p = cfg.params;
  HypothesesReport rep;

  // (1) every tube meets between N and EN cubes
  {
    auto& c = rep.conditions[0];
    c.worst = cfg.tubes.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    double hi = 0;
    for (std::size_t t = 0; t < inc.by_tube.size(); ++t) {
      double n = static_cast<double>(inc.by_tube[t].size());
      if (n < p.N || n > p.E * p.N) {
        if (c.violations++ == 0) c.witness = t;
      }
      c.worst = std::min(c.worst, n);
      hi = std::max(hi, n);
    }
    c.passed = c.violations == 0;
    c.detail = "tube cube counts in [" + std::to_string(static_cast<long>(c.worst)) + ", " +
               std::to_string(static_cast<long>(hi)) + "]";
  }

  // (2) every cube meets between rho and E*rho tubes, rho >= 2
  {
    auto& c = rep.conditions[1];
    c.worst = cfg.cubes.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    double hi = 0;
    for (std::size_t q = 0; q < inc.by_cube.size(); ++q) {
      double n = static_cast<double>(inc.by_cube[q].size());
      if (n < p.rho || n > p.E * p.rho || n < 2) {
        if (c.violations++ == 0) c.witness = q;
      }
      c.worst = std::min(c.worst, n);
      hi = std::max(hi, n);
    }
    c.passed = c.violations == 0 && p.rho >= 2;
    c.detail = "cube tube counts in [" + std::to_string(static_cast<long>(c.worst)) + ", " +
               std::to_string(static_cast<long>(hi)) + "], rho = " + std::to_string(p.rho);
  }

  if (opt.counts_only) {
    rep.conditions[2].detail = rep.conditions[3].detail = "not evaluated";
    return rep;
  }

  // (3) point multiplicity at most E*rho, sampled on a grid
  {
    auto& c = rep.conditions[2];
    const double h = opt.grid_spacing;
    std::unordered_map<std::uint64_t, std::uint32_t> mult;
    for (const auto& T : cfg.tubes) {
      Vec3 lo = T.base.cwiseMin(T.end()) - Vec3::Constant(T.radius);
      Vec3 hi = T.base.cwiseMax(T.end()) + Vec3::Constant(T.radius);
      // Walk grid points in the tube's box line by line along the dominant axis.
      auto gi = [&](double v) { return static_cast<std::int64_t>(std::ceil(v / h - 0.5)); };
      auto gs = [&](double v) { return static_cast<std::int64_t>(std::floor(v / h - 0.5)); };
      int ax = 0;
      for (int i = 1; i < 3; ++i)
        if (std::abs(T.dir[i]) > std::abs(T.dir[ax])) ax = i;
      int u = (ax + 1) % 3, w = (ax + 2) % 3;
      for (auto a = gi(lo[u]); a <= gs(hi[u]); ++a)
        for (auto b = gi(lo[w]); b <= gs(hi[w]); ++b) {
          // Points (a,b) fixed, solve for the range of the dominant coordinate.
          double pu = (static_cast<double>(a) + 0.5) * h, pw = (static_cast<double>(b) + 0.5) * h;
          // Squared distance to the infinite axis along this grid column is
          // A s^2 + B s + C; keep only the part where it is at most r^2.
          double lo_a = lo[ax], hi_a = hi[ax];
          Vec3 q0 = Vec3::Zero();
          q0[u] = pu;
          q0[w] = pw;
          Vec3 d0 = q0 - T.base;
          double dd = d0.dot(T.dir);
          double A = 1 - T.dir[ax] * T.dir[ax];
          double B = 2 * (d0[ax] - dd * T.dir[ax]);
          double C = d0.squaredNorm() - dd * dd - T.radius * T.radius;
          if (A > 1e-12) {
            double disc = B * B - 4 * A * C;
            if (disc < 0) continue;
            double sq = std::sqrt(disc);
            lo_a = std::max(lo_a, (-B - sq) / (2 * A));
            hi_a = std::min(hi_a, (-B + sq) / (2 * A));
          } else if (C > 1e-12) {
            continue;
          }
          for (auto k = gi(lo_a); k <= gs(hi_a); ++k) {
            Vec3 q;
            q[u] = pu;
            q[w] = pw;
            q[ax] = (static_cast<double>(k) + 0.5) * h;
            if (distance_to_axis(T, q) <= T.radius) {
              std::int64_t idx[3];
              idx[u] = a;
              idx[w] = b;
              idx[ax] = k;
              ++mult[detail::cell_key(idx[0], idx[1], idx[2])];
            }
          }
        }
    }
    std::uint32_t mx = 0;
    std::uint64_t arg = 0;
    for (const auto& [key, n] : mult)
      if (n > mx || (n == mx && key < arg)) {
        mx = n;
        arg = key;
      }
    for (const auto& kv : mult)
      if (kv.second > p.E * p.rho) ++c.violations;
    c.worst = mx;
    c.passed = c.violations == 0;
    c.detail = "max sampled multiplicity " + std::to_string(mx) + " vs E*rho = " + std::to_string(p.E * p.rho);
  }

  // (4) for every cube and every pair of directions, at least a 1/E fraction
  // of incident tubes make angle >= 1/E with both.
  {
    auto& c = rep.conditions[3];
    const double mesh = opt.net_mesh > 0 ? opt.net_mesh : 1.0 / (4 * p.E);
    const auto net = direction_net(mesh);
    const double cos_thr = std::cos(1.0 / p.E);
    // Net points within angle 1/E of each tube direction.
    auto near = parallel_map<std::vector<std::uint32_t>>(cfg.tubes.size(), [&](std::size_t t) {
      std::vector<std::uint32_t> out;
      for (std::size_t i = 0; i < net.size(); ++i)
        if (std::abs(net[i].dot(cfg.tubes[t].dir)) > cos_thr) out.push_back(static_cast<std::uint32_t>(i));
      return out;
    });
    auto fractions = parallel_map<double>(cfg.cubes.size(), [&](std::size_t q) {
      const auto& ts = inc.by_cube[q];
      const std::size_t k = ts.size();
      if (k == 0) return 0.0;
      const std::size_t words = (k + 63) / 64;
      std::unordered_map<std::uint32_t, detail::Bits> sets;
      for (std::size_t j = 0; j < k; ++j)
        for (auto n : near[ts[j]]) {
          auto& b = sets[n];
          if (b.empty()) b.assign(words, 0);
          b[j / 64] |= 1ULL << (j % 64);
        }
      std::vector<detail::Bits> uniq;
      uniq.reserve(sets.size());
      std::vector<std::uint32_t> keys;
      for (const auto& kv : sets) keys.push_back(kv.first);
      std::sort(keys.begin(), keys.end());
      for (auto key : keys) uniq.push_back(sets[key]);
      std::sort(uniq.begin(), uniq.end());
      uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
      std::vector<detail::Bits> maximal;
      for (std::size_t i = 0; i < uniq.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < uniq.size() && !dominated; ++j)
          dominated = j != i && uniq[i] != uniq[j] && detail::subset_of(uniq[i], uniq[j]);
        if (!dominated) maximal.push_back(uniq[i]);
      }
      std::size_t covered = 0;
      for (std::size_t i = 0; i < maximal.size(); ++i)
        for (std::size_t j = i; j < maximal.size(); ++j)
          covered = std::max(covered, detail::popcount_union(maximal[i], maximal[j]));
      return 1.0 - static_cast<double>(covered) / static_cast<double>(k);
    });
    c.worst = 1.0;
    for (std::size_t q = 0; q < fractions.size(); ++q) {
      if (fractions[q] < 1.0 / p.E) {
        if (c.violations++ == 0) c.witness = q;
      }
      if (fractions[q] < c.worst) c.worst = fractions[q];
    }
    c.passed = c.violations == 0;
    c.detail = "min fraction of transverse tubes " + std::to_string(c.worst) + " vs 1/E = " + std::to_string(1.0 / p.E);
  }
  return rep;
}

inline HypothesesReport check_hypotheses(const TubeConfig& cfg, const HypothesesOptions& opt = {}) {
  return check_hypotheses(cfg, incidences(cfg), opt);
}

// ---------------------------------------------------------------------------
// Segments

/// Splits T at the axis heights of the marked cubes.
inline std::vector<Segment> segments_between_cubes(const Tube& T, const std::vector<UnitCube>& marked,
                                                   std::size_t tube_index = 0) {
  for (std::size_t i = 0; i < marked.size(); ++i) {
    require(tube_cube_intersects(T, marked[i]), "segments_between_cubes: marked cube does not meet the tube");
    for (std::size_t j = 0; j < i; ++j)
      require((marked[i].center - marked[j].center).norm() >= 6.0,
              "segments_between_cubes: marked cubes closer than 6");
  }
  std::vector<double> h;
  for (const auto& q : marked) h.push_back(T.height(q.center));
  std::sort(h.begin(), h.end());
  std::vector<Segment> out;
  for (std::size_t i = 0; i + 1 < h.size(); ++i) {
    if (h[i + 1] - h[i] < 1.0) throw PreconditionError("segments_between_cubes: axis gap below 1");
    out.push_back({tube_index, h[i], h[i + 1], SegmentRole::BetweenCubes});
  }
  return out;
}

/// The segment of the concentric radius-100 tube centered at Q, of length
/// N^sigma / K, clipped to the tube.
inline Segment seg_centered(const UnitCube& Q, const Tube& T, double K, double N, double sigma,
                            std::size_t tube_index = 0) {
  require(tube_cube_intersects(T, Q), "seg_centered: cube does not meet the tube");
  require(K > 0, "seg_centered: K must be positive");
  const double len = std::pow(N, sigma) / K;
  Segment s{tube_index, 0.0, T.length, SegmentRole::CenteredAtCube};
  if (len >= T.length) {
    s.whole_tube = true;
    return s;
  }
  const double h = T.height(Q.center);
  s.t0 = std::max(0.0, h - len / 2);
  s.t1 = std::min(T.length, h + len / 2);
  s.clipped = s.t1 - s.t0 < len;
  return s;
}

// ---------------------------------------------------------------------------
// Generators

namespace detail {

/// Drops tubes meeting fewer than N cubes; returns the incidences of the rest.
inline Incidences prune_short_tubes(TubeConfig& cfg) {
  Incidences inc = incidences(cfg);
  std::vector<Tube> kept;
  std::vector<std::vector<std::size_t>> kept_inc;
  for (std::size_t t = 0; t < cfg.tubes.size(); ++t)
    if (static_cast<double>(inc.by_tube[t].size()) >= cfg.params.N) {
      kept.push_back(cfg.tubes[t]);
      kept_inc.push_back(std::move(inc.by_tube[t]));
    }
  cfg.tubes = std::move(kept);
  inc.by_tube = std::move(kept_inc);
  inc.rebuild_from_tubes(cfg.cubes.size());
  return inc;
}

/// Splits [a, b] into pieces of length in [len, 2 len), separated by `gap`
/// so that a cube at a junction is not counted by both neighbours. A span
/// shorter than len becomes one piece of length len centered on it (the tube
/// then leaves the region; pruning decides whether it meets enough cubes).
inline std::vector<std::pair<double, double>> pieces(double a, double b, double len, double gap = 0.0) {
  std::vector<std::pair<double, double>> out;
  const double span = b - a;
  if (span < len) {
    const double mid = (a + b) / 2;
    out.emplace_back(mid - len / 2, mid + len / 2);
    return out;
  }
  const auto n = std::max(1, static_cast<int>(std::floor((span + gap) / (len + gap))));
  const double piece = (span - (n - 1) * gap) / n;
  for (int i = 0; i < n; ++i) out.emplace_back(a + i * (piece + gap), a + i * (piece + gap) + piece);
  return out;
}

inline double min_cube_count(const Incidences& inc) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& v : inc.by_cube) m = std::min(m, static_cast<double>(v.size()));
  return inc.by_cube.empty() ? 0.0 : m;
}

}  // namespace detail

struct SlabOptions {
  int directions = 6;      // tube directions per layer, spread over [0, pi)
  double spacing = 0.0;    // distance between parallel tube axes; 0 = derived from the budget
  double piece = 0.0;      // nominal tube length; 0 = N/4
};

/// Lattice cubes tiling [0, m) x [-N, N)^2, m = ceil(N^(1-sigma)), with tubes
/// lying in the planes x1 = i + 1/2.
inline TubeConfig slab_config(double N, double sigma, double E, std::size_t tube_budget, std::uint64_t seed,
                              const SlabOptions& opt = {}) {
  require(N > 1 && sigma > 0 && sigma < 1 && E > 1, "slab_config: invalid parameters");
  require(std::pow(N, 1 - sigma) >= 2 - 1e-12, "slab_config: requires N^(1-sigma) >= 2");
  const int m = static_cast<int>(std::ceil(std::pow(N, 1 - sigma) - 1e-9));
  const int n = static_cast<int>(std::ceil(N - 1e-9));
  TubeConfig cfg;
  cfg.params = {N, sigma, E, 2.0};
  for (int i = 0; i < m; ++i)
    for (int j = -n; j < n; ++j)
      for (int k = -n; k < n; ++k) cfg.cubes.push_back({Vec3(i + 0.5, j + 0.5, k + 0.5), 1.0});

  const double piece = opt.piece > 0 ? opt.piece : N / 4;
  const int J = std::max(3, opt.directions);
  auto build = [&](double spacing) {
    std::vector<Tube> tubes;
    Rng rng = Rng::stream(seed, "slab");
    for (int layer = 0; layer < m; ++layer) {
      const double x1 = layer + 0.5;
      for (int d = 0; d < J; ++d) {
        double theta = kPi * (d + rng.uniform(-0.2, 0.2)) / J;
        Vec2 u(std::cos(theta), std::sin(theta));  // in-plane direction (x2, x3)
        Vec2 nrm(-u.y(), u.x());
        const double reach = n * std::sqrt(2.0);
        const double shift = rng.uniform(0.0, spacing);
        for (double off = -reach + shift; off <= reach; off += spacing) {
          // Chord of the line {off*nrm + s*u} through the square [-n, n]^2.
          double s0 = -std::numeric_limits<double>::infinity(), s1 = std::numeric_limits<double>::infinity();
          bool empty = false;
          for (int c = 0; c < 2; ++c) {
            double p0 = off * nrm[c];
            if (std::abs(u[c]) < 1e-12) {
              if (p0 < -n || p0 > n) empty = true;
              continue;
            }
            double a = (-n - p0) / u[c], b = (n - p0) / u[c];
            s0 = std::max(s0, std::min(a, b));
            s1 = std::min(s1, std::max(a, b));
          }
          if (empty || s1 <= s0) continue;
          for (auto [a, b] : detail::pieces(s0, s1, piece)) {
            Vec2 q = off * nrm + a * u;
            Tube T;
            T.base = Vec3(x1, q.x(), q.y());
            T.dir = Vec3(0.0, u.x(), u.y());
            T.length = b - a;
            tubes.push_back(T);
          }
        }
      }
    }
    return tubes;
  };
  double spacing = opt.spacing > 0 ? opt.spacing : 3.0;
  cfg.tubes = build(spacing);
  if (opt.spacing <= 0 && tube_budget > 0) {
    while (cfg.tubes.size() > tube_budget) {
      spacing *= 1.1;
      cfg.tubes = build(spacing);
    }
  }
  Incidences inc = detail::prune_short_tubes(cfg);
  const double rho = detail::min_cube_count(inc);
  if (rho < 3)
    throw PreconditionError("slab_config: tube budget too small, some cube meets only " +
                            std::to_string(static_cast<long>(rho)) + " tubes (need rho >= 3)");
  cfg.params.rho = rho;
  return cfg;
}

struct RegulusOptions {
  double ruling_spacing = 1.0;  // spacing of the ruling parameters s, t
  int shifts = 0;               // vertical shifts per ruling; 0 = enough for spacing <= 1
  double piece = 0.0;           // nominal tube length; 0 = N/4
  int edge_density = 3;         // ruling density multiplier at the extreme shifts
};

/// Lattice cubes meeting |x3 - x1 x2 / N| <= N^(1-sigma), |x1|, |x2| <= N, and
/// thickened rulings of x3 = x1 x2 / N shifted vertically by at most N^(1-sigma).
inline TubeConfig regulus_config(double N, double sigma, std::size_t tube_budget, std::uint64_t seed,
                                 const RegulusOptions& opt = {}, double E = 8) {
  require(N > 1 && sigma > 0 && sigma <= 1, "regulus_config: invalid parameters");
  const double w = std::pow(N, 1 - sigma);
  const int n = static_cast<int>(std::ceil(N - 1e-9));
  TubeConfig cfg;
  cfg.params = {N, std::min(sigma, 1.0 - 1e-12), E, 2.0};
  for (int a = -n; a < n; ++a)
    for (int b = -n; b < n; ++b) {
      double f[4] = {a * b / N, (a + 1) * b / N, a * (b + 1) / N, (a + 1.0) * (b + 1) / N};
      double fmin = *std::min_element(f, f + 4), fmax = *std::max_element(f, f + 4);
      auto c_lo = static_cast<int>(std::floor(fmin - w)), c_hi = static_cast<int>(std::ceil(fmax + w));
      for (int c = c_lo; c <= c_hi; ++c)
        if (c - fmax <= w && c + 1 - fmin >= -w) cfg.cubes.push_back({Vec3(a + 0.5, b + 0.5, c + 0.5), 1.0});
    }

  const double piece = opt.piece > 0 ? opt.piece : N / 4;
  const int shifts = opt.shifts > 0 ? opt.shifts : static_cast<int>(std::ceil(2 * w)) + 1;
  Rng rng = Rng::stream(seed, "regulus");
  // Ruling parameters on a grid that includes both edges, interior ones
  // jittered; vertical shifts evenly spaced over [-w, w].
  const int rulings = static_cast<int>(std::ceil(2 * n / opt.ruling_spacing));
  auto add_family = [&](int family, double phase, bool edge_only) {
    for (int i = 0; i <= rulings; ++i) {
      double s = -n + 2.0 * n * (i + phase) / rulings;
      if (s > n) break;
      if (i > 0 && i < rulings) s += rng.uniform(-0.25, 0.25) * 2.0 * n / rulings;
      for (int k = 0; k < shifts; ++k) {
        double h = shifts == 1 ? 0.0 : -w + 2 * w * k / (shifts - 1);
        for (auto [a, b] : detail::pieces(-n, n, piece, 2.0)) {
          if (k > 0 && k + 1 < shifts && edge_only) continue;
          Tube T;
          // family 0: x1 = s, direction (0, 1, s/N); family 1: x2 = s, direction (1, 0, s/N)
          Vec3 base = family == 0 ? Vec3(s, a, s * a / N + h) : Vec3(a, s, s * a / N + h);
          Vec3 dir = family == 0 ? Vec3(0, 1, s / N) : Vec3(1, 0, s / N);
          T.length = (b - a) * dir.norm();
          T.dir = dir.normalized();
          T.base = base;
          cfg.tubes.push_back(T);
        }
      }
    }
  };
  for (int pass = 0; pass < opt.edge_density; ++pass) {
    add_family(0, static_cast<double>(pass) / opt.edge_density, pass > 0);
    add_family(1, static_cast<double>(pass) / opt.edge_density, pass > 0);
  }
  if (tube_budget > 0 && cfg.tubes.size() > tube_budget) {
    // Keep an evenly strided subset, preserving order.
    std::vector<Tube> kept;
    const double stride = static_cast<double>(cfg.tubes.size()) / static_cast<double>(tube_budget);
    for (std::size_t i = 0; i < tube_budget; ++i)
      kept.push_back(cfg.tubes[static_cast<std::size_t>(std::floor(static_cast<double>(i) * stride))]);
    cfg.tubes = std::move(kept);
  }
  Incidences inc = detail::prune_short_tubes(cfg);
  cfg.params.rho = std::max(2.0, detail::min_cube_count(inc));
  return cfg;
}

}  // namespace kakeya
