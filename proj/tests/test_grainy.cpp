#include "kakeya/grainy.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace kakeya;

namespace {

Poly3 unit_sphere() {
  return Poly3::monomial(2, 0, 0) + Poly3::monomial(0, 2, 0) + Poly3::monomial(0, 0, 2) - 1.0;
}

// A row of n cubes along the x3-axis and the given tubes.
TubeConfig row(int n, std::vector<Tube> tubes) {
  TubeConfig cfg;
  cfg.params = {static_cast<double>(n), 0.5, 8, 2};
  for (int k = 0; k < n; ++k) cfg.cubes.push_back({Vec3(0, 0, k + 0.5), 1.0});
  cfg.tubes = std::move(tubes);
  return cfg;
}

Tube tube(const Vec3& base, const Vec3& dir, double length) {
  Tube T;
  T.base = base;
  T.dir = dir.normalized();
  T.length = length;
  return T;
}

// The slices x1 + a x2 = b see a surface element with unit normal n (tube
// coordinates) with weight sqrt(1 + a^2 - (w.n)^2), w = (1, a, 0), relative
// to a horizontal one. Coarea along lines parallel to v(T) turns
// the integral of |v(T).N| times that weight into a sum over crossings.
double slice_weight(const Vec3& n) {
  const int m = 64;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < m; ++i) {
    const double a = 0.1 * (2.0 * (i + 0.5) / m - 1.0);
    const double wn = n.x() + a * n.y();
    num += std::sqrt(std::max(0.0, 1 + a * a - wn * wn));
    den += std::sqrt(1 + a * a);
  }
  return num / den;
}

double crossing_oracle(const Poly3& P, const Tube& T, std::size_t lines, std::uint64_t seed) {
  auto [e1, e2] = orthonormal_complement(T.dir);
  Rng rng(seed);
  double total = 0.0;
  for (std::size_t i = 0; i < lines; ++i) {
    Vec2 d = rng.in_disk(T.radius);
    const Vec3 base = T.base + d.x() * e1 + d.y() * e2;
    for (double t : line_roots(P, base, T.dir, 0.0, T.length).roots) {
      const Vec3 g = P.grad(base + t * T.dir).normalized();
      total += slice_weight(Vec3(g.dot(e1), g.dot(e2), g.dot(T.dir)));
    }
  }
  return total / lines * kPi * T.radius * T.radius;
}

}  // namespace

TEST(Grainy, SlabPlanesAreTheCoordinatePlane) {
  TubeConfig cfg = slab_config(16, 0.5, 8, 0, 3);
  auto planes = assign_planes(slab_surface(cfg), cfg, 6, 1);
  ASSERT_EQ(planes.size(), cfg.cubes.size());
  for (const auto& a : planes) {
    ASSERT_TRUE(a.assigned());
    EXPECT_EQ(a.source, PlaneSource::TwoTransverseTubes);
    EXPECT_NEAR(a.normal.norm(), 1.0, 1e-9);
    EXPECT_LE(plane_angle(a.normal, Vec3::UnitX()), 1e-9);
    EXPECT_LT(a.tube1, a.tube2);
  }
}

TEST(Grainy, RegulusPlanesFollowTheGradient) {
  const double N = 16;
  TubeConfig cfg = regulus_config(N, 0.5, 0, 3);
  auto planes = assign_planes(regulus_surface(N), cfg, 6, 2);
  std::size_t assigned = 0;
  double worst = 0.0;
  for (const auto& a : planes) {
    if (!a.assigned()) continue;
    ++assigned;
    const Vec3 c = cfg.cubes[a.cube].center;
    // Tubes meeting Q follow rulings up to ~1.5 away from c, each turning the normal by 1/N per unit.
    worst = std::max(worst, plane_angle(a.normal, Vec3(-c.y() / N, -c.x() / N, 1.0)));
  }
  EXPECT_GT(assigned, cfg.cubes.size() / 2);
  EXPECT_LE(worst, 3.0 / N);
}

TEST(Grainy, FarCubesAreUnassignedAndExcluded) {
  TubeConfig cfg = row(20, {tube(Vec3(0, 0, 0), Vec3::UnitZ(), 20), tube(Vec3(0, -10, 10), Vec3::UnitY(), 20)});
  auto planes = assign_planes(Poly3::variable(0) - 100.0, cfg, 4, 1);
  for (const auto& a : planes) EXPECT_FALSE(a.assigned());
  AngleStats s = planiness_stats(cfg, incidences(cfg), planes, 1.0);
  EXPECT_TRUE(s.empty);
  EXPECT_GT(s.unassigned_skipped, 0u);
}

TEST(Grainy, ParallelTubesFallBackToTheMeanNormal) {
  TubeConfig cfg = row(20, {tube(Vec3(0, 0, 0), Vec3::UnitZ(), 20), tube(Vec3(0.2, 0, 0), Vec3::UnitZ(), 20)});
  auto planes = assign_planes(Poly3::variable(0) - 0.1, cfg, 8, 1);
  for (const auto& a : planes) {
    ASSERT_EQ(a.source, PlaneSource::NormalAverage);
    EXPECT_LE(plane_angle(a.normal, Vec3::UnitX()), 1e-12);
  }
}

TEST(Grainy, PlaninessAngles) {
  // One tube in the plane of its cubes and one orthogonal to it.
  TubeConfig cfg = row(20, {tube(Vec3(0, 0, 0), Vec3::UnitZ(), 20), tube(Vec3(-10, 0, 5.5), Vec3::UnitX(), 20)});
  std::vector<PlaneAssignment> planes(cfg.cubes.size());
  for (std::size_t q = 0; q < planes.size(); ++q) {
    planes[q].cube = q;
    planes[q].normal = Vec3::UnitX();
    planes[q].source = PlaneSource::NormalAverage;
  }
  Incidences inc = incidences(cfg);
  AngleStats s = planiness_stats(cfg, inc, planes, 1.0);
  std::size_t right = 0;
  for (const auto& r : s.records) {
    if (r.tube == 0) {
      EXPECT_EQ(r.angle, 0.0);
    } else {
      EXPECT_DOUBLE_EQ(r.angle, kPi / 2);
      ++right;
    }
  }
  EXPECT_EQ(right, inc.by_tube[1].size());
  EXPECT_EQ(s.p99, kPi / 2);
  EXPECT_DOUBLE_EQ(s.fraction_within, 1.0 - static_cast<double>(right) / s.records.size());
}

TEST(Grainy, GraininessAgainstClosedFormRotation) {
  // Planes turning by delta per unit height: the angle between the planes
  // of cubes i and j is |i - j| delta.
  const int n = 30;
  const double delta = 0.01;
  TubeConfig cfg = row(n, {tube(Vec3(0, 0, 0), Vec3::UnitZ(), n), tube(Vec3(0.1, 0, 0), Vec3::UnitZ(), n)});
  cfg.params.N = 30;
  cfg.params.sigma = 0.5;
  std::vector<PlaneAssignment> planes(cfg.cubes.size());
  for (int q = 0; q < n; ++q) {
    planes[q].cube = q;
    planes[q].normal = Vec3(std::cos(q * delta), std::sin(q * delta), 0.0);
    planes[q].source = PlaneSource::NormalAverage;
  }
  const double K = 1.0;
  const double reach = std::sqrt(30.0);
  Incidences inc = incidences(cfg);
  AngleStats s = graininess_stats(cfg, inc, planes, K);
  std::size_t expected = 0, within = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && std::abs(i - j) <= reach) {
        expected += 2;  // both tubes meet both cubes
        within += 2 * (std::abs(i - j) * delta <= K / reach);
      }
  ASSERT_EQ(s.records.size(), expected);
  for (const auto& r : s.records) {
    EXPECT_NEAR(r.angle, std::abs(static_cast<int>(r.cube) - static_cast<int>(r.other)) * delta, 1e-12);
    EXPECT_EQ(r.angle, plane_angle(planes[r.other].normal, planes[r.cube].normal));
  }
  EXPECT_DOUBLE_EQ(s.fraction_within, static_cast<double>(within) / expected);
  EXPECT_LE(s.p50, s.p90);
  EXPECT_LE(s.p90, s.p99);
  EXPECT_NEAR(s.p99, 5 * delta, 1e-12);
}

TEST(Grainy, SlabGraininessAndEmptyPairs) {
  TubeConfig cfg = slab_config(16, 0.5, 8, 0, 3);
  Incidences inc = incidences(cfg);
  auto planes = assign_planes(slab_surface(cfg), cfg, inc, 6, 1);
  AngleStats s = graininess_stats(cfg, inc, planes, 2.0);
  EXPECT_FALSE(s.empty);
  EXPECT_EQ(s.fraction_within, 1.0);
  EXPECT_EQ(s.p99, 0.0);
  EXPECT_TRUE(s.meets_fraction);
  // K^-1 N^sigma < 1 leaves no eligible Q'.
  AngleStats none = graininess_stats(cfg, inc, planes, 5.0);
  EXPECT_TRUE(none.empty);
  EXPECT_FALSE(none.meets_fraction);
}

TEST(Grainy, StrideCapIsEven) {
  TubeConfig cfg = slab_config(16, 0.5, 8, 0, 3);
  Incidences inc = incidences(cfg);
  auto planes = assign_planes(slab_surface(cfg), cfg, inc, 2, 1);
  StatsOptions opt;
  opt.max_incidences = 1000;
  AngleStats s = planiness_stats(cfg, inc, planes, 1.0, opt);
  EXPECT_EQ(s.incidences_used, 1000u);
  EXPECT_GT(s.incidences_total, 1000u);
  opt.max_incidences = 0;
  EXPECT_EQ(planiness_stats(cfg, inc, planes, 1.0, opt).incidences_used, s.incidences_total);
}

TEST(Grainy, AssignmentIndependentOfThreads) {
  TubeConfig cfg = regulus_config(16, 0.5, 0, 3);
  Incidences inc = incidences(cfg);
  set_thread_count(1);
  auto a = assign_planes(regulus_surface(16), cfg, inc, 4, 9);
  set_thread_count(4);
  auto b = assign_planes(regulus_surface(16), cfg, inc, 4, 9);
  set_thread_count(0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].normal, b[i].normal);
    EXPECT_EQ(a[i].source, b[i].source);
  }
}

TEST(Grainy, CylinderTangencyClosedForms) {
  Tube T = tube(Vec3(0, 0, -2), Vec3::UnitZ(), 4);
  TangencyCheck along = cylinder_tangency_check(Poly3::variable(0) - 0.2, T, 400, 1);
  EXPECT_LE(along.integral_estimate, 1e-9);
  TangencyCheck across = cylinder_tangency_check(Poly3::variable(2) - 0.3, T, 400, 2);
  EXPECT_NEAR(across.integral_estimate / kPi, 1.0, 0.1);
  EXPECT_DOUBLE_EQ(across.bound, kPi);
  EXPECT_FALSE(across.flagged);
}

TEST(Grainy, CylinderTangencyMatchesCrossingCount) {
  Rng rng(21);
  for (int k = 0; k < 12; ++k) {
    Poly3 P(2 + k % 5);
    for (auto& c : P.coeffs()) c = rng.uniform(-1, 1);
    Tube T = tube(rng.in_box(Vec3::Constant(-1), Vec3::Constant(1)), rng.unit_vector(), 3);
    TangencyCheck t = cylinder_tangency_check(P, T, 600, 30 + k);
    double oracle = crossing_oracle(P, T, 20000, 40 + k);
    EXPECT_NEAR(t.integral_estimate, oracle, 0.1 * oracle + 0.03) << "k = " << k;
    EXPECT_LE(t.ratio, 1.1);
  }
}

TEST(Grainy, CurvatureCensus) {
  TubeConfig slab = slab_config(16, 0.5, 8, 0, 3);
  slab.cubes.resize(200);
  CurvatureCensus flat = curvature_census(slab_surface(slab), slab, 1e-6, 4, 1);
  EXPECT_GT(flat.points, 0u);
  EXPECT_EQ(flat.fraction_exceeding, 0.0);

  TubeConfig ball = row(1, {});
  ball.cubes = {{Vec3(0.5, 0.5, 0.5), 1.0}, {Vec3(-0.5, 0.5, 0.5), 1.0}, {Vec3(5, 5, 5), 1.0}};
  CurvatureCensus sph = curvature_census(unit_sphere(), ball, 1.0, 20, 2);
  EXPECT_EQ(sph.fraction_exceeding, 1.0);
  EXPECT_EQ(sph.skipped_cubes, 1u);
  EXPECT_EQ(sph.per_cube.size(), 2u);

  // Regulus near the origin: |A| <= sqrt(2) / N there.
  const double N = 64;
  TubeConfig near = row(1, {});
  near.cubes.clear();
  for (int i = -2; i < 2; ++i)
    for (int j = -2; j < 2; ++j) near.cubes.push_back({Vec3(i + 0.5, j + 0.5, 0.0), 1.0});
  CurvatureCensus reg = curvature_census(regulus_surface(N), near, 2 * std::sqrt(2.0) / N, 10, 3);
  EXPECT_GT(reg.points, 0u);
  EXPECT_EQ(reg.fraction_exceeding, 0.0);
  std::size_t binned = 0;
  for (auto c : reg.bin_counts) binned += c;
  EXPECT_EQ(binned, reg.points);
}
