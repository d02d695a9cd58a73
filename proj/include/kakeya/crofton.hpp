#pragma once

// Integral geometry: surface area from random lines (Crofton), the
// degree-area bound, slice curves of Z(P) in vertical planes, and the
// random-plane slice average.

#include "kakeya/field.hpp"
#include "kakeya/parallel.hpp"
#include "kakeya/poly3.hpp"
#include "kakeya/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace kakeya {

// ---------------------------------------------------------------------------
// Random lines

/// A line under the rigid-motion invariant measure, restricted to lines
/// meeting a ball: direction uniform on the sphere, offset uniform in the
/// disk of radius R orthogonal to it.
struct LineSample {
  Vec3 dir = Vec3::UnitZ();
  Vec3 offset = Vec3::Zero();  // relative to the ball center, orthogonal to dir
};

inline LineSample sample_line(Rng& rng, double R) {
  LineSample L;
  L.dir = rng.unit_vector();
  const auto [e1, e2] = orthonormal_complement(L.dir);
  const Vec2 o = rng.in_disk(R);
  L.offset = o.x() * e1 + o.y() * e2;
  return L;
}

namespace detail {

inline constexpr std::size_t kCroftonBlock = 4096;

/// Parameter interval of the line base + t dir inside the box, or an empty
/// interval (lo > hi).
inline std::pair<double, double> clip_to_box(const Vec3& base, const Vec3& dir, const Vec3& lo, const Vec3& hi) {
  double t0 = -1e300, t1 = 1e300;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dir[i]) < 1e-300) {
      if (base[i] < lo[i] || base[i] > hi[i]) return {1.0, 0.0};
      continue;
    }
    double a = (lo[i] - base[i]) / dir[i], b = (hi[i] - base[i]) / dir[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  return {t0, t1};
}

/// Mean number of crossings per line; `count(line)` returns the crossings of
/// one sampled line.
template <class Count>
double mean_crossings(std::size_t lines, std::uint64_t seed, std::string_view tag, double R, Count&& count) {
  const std::size_t blocks = (lines + kCroftonBlock - 1) / kCroftonBlock;
  auto sums = parallel_map<double>(blocks, [&](std::size_t b) {
    Rng rng = Rng::stream(seed, tag, b);
    double s = 0.0;
    const std::size_t end = std::min(lines, (b + 1) * kCroftonBlock);
    for (std::size_t i = b * kCroftonBlock; i < end; ++i) s += count(sample_line(rng, R));
    return s;
  });
  double total = 0.0;
  for (double s : sums) total += s;
  return total / static_cast<double>(lines);
}

}  // namespace detail

/// Calibration constant of the line estimator: the factor that makes the
/// estimate of a unit square equal to 1. Computed once from 2^20 lines
/// against the square [-1/2,1/2]^2 x {0} inside the unit ball.
inline double crofton_calibration() {
  static const double C = [] {
    const double mean = detail::mean_crossings(std::size_t{1} << 20, 0x5eedULL, "crofton-calibration", 1.0,
                                               [](const LineSample& L) {
                                                 if (std::abs(L.dir.z()) < 1e-300) return 0.0;
                                                 const double t = -L.offset.z() / L.dir.z();
                                                 const Vec3 p = L.offset + t * L.dir;
                                                 return std::abs(p.x()) <= 0.5 && std::abs(p.y()) <= 0.5 ? 1.0 : 0.0;
                                               });
    return 1.0 / (kPi * mean);
  }();
  return C;
}

/// Area of Z(P) inside the ball: calibration x (pi R^2) x mean number of
/// distinct crossings per random line.
template <Field F>
double estimate_area(const F& P, const Ball& region, std::size_t lines, std::uint64_t seed) {
  require(lines >= 1, "estimate_area: no lines");
  const double R = region.radius;
  const double mean = detail::mean_crossings(lines, seed, "crofton", R, [&](const LineSample& L) {
    const double h = std::sqrt(std::max(0.0, R * R - L.offset.squaredNorm()));
    if (h <= 0) return 0.0;
    LineRoots lr = line_roots(P, region.center + L.offset, L.dir, -h, h);
    return static_cast<double>(lr.roots.size());
  });
  return crofton_calibration() * kPi * R * R * mean;
}

struct AreaBound {
  double area = 0.0;
  double bound_ratio = 0.0;  // area / (D S^2)
  bool flagged = false;      // ratio above c_max
};

/// Area of Z(P) inside the axis-aligned cube of side S, compared with D S^2.
template <Field F>
AreaBound check_degree_area_bound(const F& P, const Vec3& center, double S, std::size_t lines, std::uint64_t seed,
                                  double c_max = 1.5) {
  require(S > 0, "check_degree_area_bound: side must be positive");
  const double R = S * std::sqrt(3.0) / 2;
  const Vec3 lo = center - Vec3::Constant(S / 2), hi = center + Vec3::Constant(S / 2);
  const double mean = detail::mean_crossings(lines, seed, "degree-area", R, [&](const LineSample& L) {
    const Vec3 base = center + L.offset;
    auto [t0, t1] = detail::clip_to_box(base, L.dir, lo, hi);
    if (!(t0 < t1)) return 0.0;
    LineRoots lr = line_roots(P, base, L.dir, t0, t1);
    return static_cast<double>(lr.roots.size());
  });
  AreaBound out;
  out.area = crofton_calibration() * kPi * R * R * mean;
  const int D = P.degree();
  out.bound_ratio = D > 0 ? out.area / (D * S * S) : 0.0;
  out.flagged = out.bound_ratio > c_max;
  return out;
}

// ---------------------------------------------------------------------------
// Slices

/// The vertical plane x1 + a x2 = b, with in-plane coordinates (s, z):
/// x = p0 + s h + z e3, where p0 is the point of the plane closest to the
/// x3-axis and h = (-a, 1, 0) / |(-a, 1, 0)|.
struct SlicePlane {
  double a = 0.0;
  double b = 0.0;

  Vec3 origin() const { return Vec3(b, a * b, 0) / (1 + a * a); }
  Vec3 horizontal() const { return Vec3(-a, 1, 0) / std::sqrt(1 + a * a); }
  Vec3 point(double s, double z) const { return origin() + s * horizontal() + z * Vec3::UnitZ(); }
  double distance_to_axis() const { return std::abs(b) / std::sqrt(1 + a * a); }
};

struct SliceWindow {
  double s0 = -1, s1 = 1;
  double z0 = -1, z1 = 1;
};

struct SliceCurve {
  SlicePlane plane;
  std::vector<std::vector<Vec3>> polylines;  // one per connected component
  std::vector<bool> closed;
  double cell = 0.0;
  double max_vertex_value = 0.0;  // max |P| over vertices

  double length() const {
    double L = 0.0;
    for (const auto& pl : polylines)
      for (std::size_t i = 1; i < pl.size(); ++i) L += (pl[i] - pl[i - 1]).norm();
    return L;
  }
};

namespace detail {

/// Marching squares on the node grid. Edge crossings are keyed by edge id so
/// that the segments can be chained into polylines afterwards.
struct MarchingSquares {
  int ns = 0, nz = 0;  // cells per axis
  std::vector<double> val;
  std::vector<std::pair<std::int64_t, std::int64_t>> segs;  // pairs of edge ids

  double& at(int i, int j) { return val[static_cast<std::size_t>(j) * (ns + 1) + i]; }
  // horizontal edge (i,j)-(i+1,j): even ids; vertical edge (i,j)-(i,j+1): odd ids
  std::int64_t hedge(int i, int j) const { return 2 * (static_cast<std::int64_t>(j) * (ns + 1) + i); }
  std::int64_t vedge(int i, int j) const { return hedge(i, j) + 1; }
};

}  // namespace detail

/// Contour of P restricted to the plane, by marching squares with linear
/// interpolation along cell edges. Saddle cells are resolved by the sign of
/// P at the cell center.
template <Field F>
SliceCurve extract_slice(const F& P, const SlicePlane& plane, const SliceWindow& win, double cell) {
  const double W = win.s1 - win.s0, H = win.z1 - win.z0;
  require(W > 0 && H > 0, "extract_slice: empty window");
  require(cell > 0 && cell <= std::hypot(W, H) / 16 + 1e-15, "extract_slice: cell must be at most diagonal / 16");
  detail::MarchingSquares ms;
  ms.ns = std::max(1, static_cast<int>(std::ceil(W / cell - 1e-9)));
  ms.nz = std::max(1, static_cast<int>(std::ceil(H / cell - 1e-9)));
  const double ds = W / ms.ns, dz = H / ms.nz;
  ms.val.resize(static_cast<std::size_t>(ms.ns + 1) * (ms.nz + 1));
  auto node = [&](int i, int j) { return plane.point(win.s0 + i * ds, win.z0 + j * dz); };
  for (int j = 0; j <= ms.nz; ++j)
    for (int i = 0; i <= ms.ns; ++i) ms.at(i, j) = P(node(i, j));

  std::map<std::int64_t, Vec3> verts;
  auto crossing = [&](std::int64_t id, int i0, int j0, int i1, int j1) {
    if (!verts.count(id)) {
      const double v0 = ms.at(i0, j0), v1 = ms.at(i1, j1);
      const double t = v0 == v1 ? 0.5 : v0 / (v0 - v1);
      verts[id] = node(i0, j0) + t * (node(i1, j1) - node(i0, j0));
    }
    return id;
  };
  for (int j = 0; j < ms.nz; ++j)
    for (int i = 0; i < ms.ns; ++i) {
      // corners counterclockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1); edges: bottom, right, top, left
      const bool c0 = ms.at(i, j) >= 0, c1 = ms.at(i + 1, j) >= 0, c2 = ms.at(i + 1, j + 1) >= 0,
                 c3 = ms.at(i, j + 1) >= 0;
      const int code = c0 | (c1 << 1) | (c2 << 2) | (c3 << 3);
      if (code == 0 || code == 15) continue;
      auto e = [&](int k) {
        switch (k) {
          case 0: return crossing(ms.hedge(i, j), i, j, i + 1, j);
          case 1: return crossing(ms.vedge(i + 1, j), i + 1, j, i + 1, j + 1);
          case 2: return crossing(ms.hedge(i, j + 1), i, j + 1, i + 1, j + 1);
          default: return crossing(ms.vedge(i, j), i, j, i, j + 1);
        }
      };
      auto seg = [&](int a, int b) { ms.segs.emplace_back(e(a), e(b)); };
      switch (code) {
        case 1: case 14: seg(3, 0); break;
        case 2: case 13: seg(0, 1); break;
        case 3: case 12: seg(3, 1); break;
        case 4: case 11: seg(1, 2); break;
        case 6: case 9: seg(0, 2); break;
        case 7: case 8: seg(2, 3); break;
        case 5: case 10: {
          const bool center = P(plane.point(win.s0 + (i + 0.5) * ds, win.z0 + (j + 0.5) * dz)) >= 0;
          // The center joins the two corners of its own sign.
          if (center == c0) {
            seg(0, 1);
            seg(2, 3);
          } else {
            seg(3, 0);
            seg(1, 2);
          }
          break;
        }
        default: break;
      }
    }

  // Chain segments through shared edge crossings.
  std::map<std::int64_t, std::vector<std::size_t>> touching;
  for (std::size_t k = 0; k < ms.segs.size(); ++k) {
    touching[ms.segs[k].first].push_back(k);
    touching[ms.segs[k].second].push_back(k);
  }
  std::vector<bool> used(ms.segs.size(), false);
  SliceCurve out;
  out.plane = plane;
  out.cell = cell;
  auto walk = [&](std::int64_t start) {
    std::vector<Vec3> pl{verts[start]};
    std::int64_t cur = start;
    for (;;) {
      std::size_t next = ms.segs.size();
      for (std::size_t k : touching[cur])
        if (!used[k]) {
          next = k;
          break;
        }
      if (next == ms.segs.size()) break;
      used[next] = true;
      cur = ms.segs[next].first == cur ? ms.segs[next].second : ms.segs[next].first;
      pl.push_back(verts[cur]);
    }
    out.closed.push_back(pl.size() > 2 && cur == start);
    out.polylines.push_back(std::move(pl));
  };
  for (const auto& [id, segs] : touching)
    if (segs.size() == 1 && !used[segs[0]]) walk(id);  // open chains from their ends
  for (std::size_t k = 0; k < ms.segs.size(); ++k)
    if (!used[k]) walk(ms.segs[k].first);

  // Components ordered by first vertex (s, then z).
  std::vector<std::size_t> order(out.polylines.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const Vec3 h = plane.horizontal();
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const Vec3 &p = out.polylines[x].front(), &q = out.polylines[y].front();
    const double sp = p.dot(h), sq = q.dot(h);
    if (sp != sq) return sp < sq;
    return p.z() < q.z();
  });
  SliceCurve sorted;
  sorted.plane = plane;
  sorted.cell = cell;
  for (std::size_t i : order) {
    sorted.polylines.push_back(std::move(out.polylines[i]));
    sorted.closed.push_back(out.closed[i]);
  }
  for (const auto& [id, v] : verts) sorted.max_vertex_value = std::max(sorted.max_vertex_value, std::abs(P(v)));
  return sorted;
}

/// Midpoint rule for the line integral of f along the polylines.
template <class Fn>
double slice_integral(const SliceCurve& c, Fn&& f) {
  double s = 0.0;
  for (const auto& pl : c.polylines)
    for (std::size_t i = 1; i < pl.size(); ++i) s += f(0.5 * (pl[i] + pl[i - 1])) * (pl[i] - pl[i - 1]).norm();
  return s;
}

struct SliceCylinder {
  double R = 1.0;  // radius about the x3-axis
  double z0 = -1.0, z1 = 1.0;
};

struct SliceOptions {
  double a_max = 0.1;  // a uniform in (-a_max, a_max)
  double cell = 0.0;   // 0: (2R + height) / 256
};

struct SliceAverage {
  double average = 0.0;   // Avg_{a,b} of the line integral of f over the slice
  double estimate = 0.0;  // average times the calibration factor 4R / Avg_a sqrt(1 + a^2)
  std::size_t slices = 0;
  std::size_t empty = 0;       // slices without any curve (including those missing the cylinder)
  std::size_t degenerate = 0;  // chord below the grid resolution: not integrated, counted as 0
};

/// Average of the slice integrals of f over random planes x1 + a x2 = b,
/// a in (-1/10, 1/10), b in (-2R, 2R), restricted to the cylinder. The
/// calibrated estimate equals the area for a horizontal flat piece; for a
/// general surface it is comparable to the integral of f up to a factor
/// depending on R.
template <Field F, class Fn>
SliceAverage slice_average(const F& P, Fn&& f, const SliceCylinder& cyl, std::size_t slices, std::uint64_t seed,
                           const SliceOptions& opt = {}) {
  require(cyl.R > 0 && cyl.z1 > cyl.z0, "slice_average: empty cylinder");
  require(slices >= 1, "slice_average: no slices");
  const double cell = opt.cell > 0 ? opt.cell : (2 * cyl.R + (cyl.z1 - cyl.z0)) / 256;
  struct One {
    double value = 0.0;
    bool empty = false, degenerate = false;
  };
  auto per = parallel_map<One>(slices, [&](std::size_t k) {
    Rng rng = Rng::stream(seed, "slice", k);
    SlicePlane pl{rng.uniform(-opt.a_max, opt.a_max), rng.uniform(-2 * cyl.R, 2 * cyl.R)};
    One o;
    const double d = pl.distance_to_axis();
    if (d >= cyl.R) {
      o.empty = true;
      return o;
    }
    const double w = std::sqrt(cyl.R * cyl.R - d * d);
    SliceWindow win{-w, w, cyl.z0, cyl.z1};
    if (2 * w < cell) {
      o.degenerate = true;
      return o;
    }
    SliceCurve c = extract_slice(P, pl, win, std::min(cell, std::hypot(2 * w, cyl.z1 - cyl.z0) / 16));
    o.empty = c.polylines.empty();
    o.value = slice_integral(c, f);
    return o;
  });
  SliceAverage out;
  double sum = 0.0;
  for (const auto& o : per) {
    // Degenerate slices are not integrated but still enter the average as 0.
    out.degenerate += o.degenerate;
    out.empty += o.empty;
    sum += o.value;
  }
  out.slices = slices;
  out.average = sum / static_cast<double>(slices);
  // Avg of sqrt(1 + a^2) over (-A, A) in closed form.
  const double A = opt.a_max;
  const double mean_sec = A > 0 ? (A * std::sqrt(1 + A * A) + std::asinh(A)) / (2 * A) : 1.0;
  out.estimate = out.average * 4 * cyl.R / mean_sec;
  return out;
}

}  // namespace kakeya
