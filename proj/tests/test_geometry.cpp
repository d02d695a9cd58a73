#include "kakeya/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace kakeya;

namespace {

Tube z_axis_tube(double z0 = -50, double len = 100) {
  Tube T;
  T.base = Vec3(0, 0, z0);
  T.dir = Vec3::UnitZ();
  T.length = len;
  return T;
}

// Brute-force distance oracle: dense sampling of the axis, projection onto the box.
double brute_distance(const Tube& T, const UnitCube& Q) {
  double best = 1e300;
  for (int i = 0; i <= 200000; ++i) {
    Vec3 p = T.at(T.length * i / 200000.0);
    best = std::min(best, (p - p.cwiseMax(Q.lo()).cwiseMin(Q.hi())).norm());
  }
  return best;
}

}  // namespace

TEST(Geometry, TubeCubeIntersection) {
  Tube T = z_axis_tube();
  EXPECT_TRUE(tube_cube_intersects(T, {Vec3::Zero(), 1.0}));
  EXPECT_FALSE(tube_cube_intersects(T, {Vec3(10, 0, 0), 1.0}));
  EXPECT_TRUE(tube_cube_intersects(T, {Vec3(1.49, 0, 0), 1.0}));
  EXPECT_FALSE(tube_cube_intersects(T, {Vec3(1.51, 0, 0), 1.0}));
  // Past the end cap.
  EXPECT_FALSE(tube_cube_intersects(T, {Vec3(0, 0, 51.6), 1.0}));
  EXPECT_TRUE(tube_cube_intersects(T, {Vec3(0, 0, 51.4), 1.0}));
}

TEST(Geometry, SegmentBoxDistanceMatchesSampling) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    Tube T;
    T.base = rng.in_box(Vec3::Constant(-3), Vec3::Constant(3));
    T.dir = rng.unit_vector();
    T.length = rng.uniform(0.5, 6.0);
    UnitCube Q{rng.in_box(Vec3::Constant(-2), Vec3::Constant(2)), rng.uniform(0.5, 2.0)};
    double d = std::sqrt(segment_box_distance2(T, Q.lo(), Q.hi()));
    EXPECT_NEAR(d, brute_distance(T, Q), 1e-4);
  }
}

TEST(Geometry, IncidencesOnStackedCubes) {
  TubeConfig cfg;
  EXPECT_TRUE(incidences(cfg).pairs.empty());
  cfg.tubes.push_back(z_axis_tube(1, 6));
  for (int k = 1; k <= 7; ++k) cfg.cubes.push_back({Vec3(0, 0, k), 1.0});
  cfg.cubes.push_back({Vec3(5, 5, 5), 1.0});
  cfg.cubes.push_back({Vec3(0, 0, 9), 1.0});  // 1.5 past the end cap
  Incidences inc = incidences(cfg);
  EXPECT_EQ(inc.pairs.size(), 7u);
  std::size_t per_tube = 0, per_cube = 0;
  for (const auto& v : inc.by_tube) per_tube += v.size();
  for (const auto& v : inc.by_cube) per_cube += v.size();
  EXPECT_EQ(per_tube, inc.pairs.size());
  EXPECT_EQ(per_cube, inc.pairs.size());
  // by_tube is ordered by axis height
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(inc.by_tube[0][i], i);
}

TEST(Geometry, SingleTubeFailsConditionTwo) {
  TubeConfig cfg;
  cfg.params = {4, 0.5, 8, 2};
  cfg.tubes.push_back(z_axis_tube(0, 10));
  for (int k = 0; k < 10; ++k) cfg.cubes.push_back({Vec3(0, 0, k + 0.5), 1.0});
  auto rep = check_hypotheses(cfg);
  EXPECT_TRUE(rep.conditions[0].passed);
  EXPECT_FALSE(rep.conditions[1].passed);
}

TEST(Geometry, SegmentsBetweenCubes) {
  Tube T = z_axis_tube(-5, 40);
  auto segs = segments_between_cubes(T, {{Vec3(0, 0, 0), 1}, {Vec3(0, 0, 10), 1}, {Vec3(0, 0, 20), 1}});
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_DOUBLE_EQ(segs[0].t0, 5.0);
  EXPECT_DOUBLE_EQ(segs[0].t1, 15.0);
  EXPECT_DOUBLE_EQ(segs[1].t1, 25.0);
  EXPECT_TRUE(segments_between_cubes(T, {{Vec3(0, 0, 3), 1}}).empty());
  EXPECT_THROW(segments_between_cubes(T, {{Vec3(0, 0, 0), 1}, {Vec3(0, 0, 5), 1}}), PreconditionError);
  EXPECT_THROW(segments_between_cubes(T, {{Vec3(9, 0, 0), 1}}), PreconditionError);

  // 50 admissible random heights: 49 ordered, contiguous segments.
  Rng rng(2);
  Tube L = z_axis_tube(0, 1000);
  std::vector<UnitCube> marked;
  double h = 1;
  for (int i = 0; i < 50; ++i) {
    h += rng.uniform(6.0, 15.0);
    marked.push_back({Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), h), 1});
  }
  std::swap(marked[3], marked[40]);
  auto many = segments_between_cubes(L, marked);
  ASSERT_EQ(many.size(), 49u);
  for (std::size_t i = 0; i < many.size(); ++i) {
    EXPECT_GE(many[i].length(), 1.0);
    if (i > 0) {
      EXPECT_DOUBLE_EQ(many[i].t0, many[i - 1].t1);
    }
  }
}

TEST(Geometry, SegCentered) {
  Tube T = z_axis_tube(0, 100);
  Segment s = seg_centered({Vec3(0, 0, 50), 1}, T, 1, 16, 0.5);
  EXPECT_DOUBLE_EQ(s.length(), 4.0);
  Segment e = seg_centered({Vec3(0, 0, 0.2), 1}, T, 1, 16, 0.5);
  EXPECT_GE(e.length(), 2.0);
  EXPECT_TRUE(e.clipped);
  Segment w = seg_centered({Vec3(0, 0, 2), 1}, z_axis_tube(0, 3), 0.1, 16, 0.5);
  EXPECT_TRUE(w.whole_tube);
  EXPECT_DOUBLE_EQ(w.length(), 3.0);
  EXPECT_THROW(seg_centered({Vec3(9, 0, 0), 1}, T, 1, 16, 0.5), PreconditionError);
}

TEST(Geometry, SlabConfigObeysHypotheses) {
  TubeConfig cfg = slab_config(16, 0.5, 8, 0, 7);
  EXPECT_EQ(cfg.cubes.size(), 4096u);
  EXPECT_GE(cfg.params.rho, 3);
  for (const auto& T : cfg.tubes) EXPECT_EQ(T.dir.x(), 0.0);
  cfg.validate();
  auto rep = check_hypotheses(cfg);
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(rep.conditions[i].passed) << i << ": " << rep.conditions[i].detail;
  Incidences inc = incidences(cfg);
  for (const auto& v : inc.by_tube) EXPECT_GE(v.size(), 16u);
}

TEST(Geometry, SlabConfigIsDeterministic) {
  TubeConfig a = slab_config(16, 0.5, 8, 0, 3), b = slab_config(16, 0.5, 8, 0, 3);
  ASSERT_EQ(a.tubes.size(), b.tubes.size());
  for (std::size_t i = 0; i < a.tubes.size(); ++i) {
    EXPECT_EQ(a.tubes[i].base, b.tubes[i].base);
    EXPECT_EQ(a.tubes[i].dir, b.tubes[i].dir);
  }
  EXPECT_THROW(slab_config(16, 0.5, 8, 10, 3), PreconditionError);
}

TEST(Geometry, RegulusFailsOnlyConditionFour) {
  const double N = 16;
  TubeConfig cfg = regulus_config(N, 0.5, 0, 11);
  const double w = std::pow(N, 0.5);
  for (const auto& T : cfg.tubes) {
    // Substitute two axis points into x3 - x1 x2 / N: the ruling makes it
    // constant along the axis and equal to the vertical shift.
    auto g = [&](const Vec3& p) { return p.z() - p.x() * p.y() / N; };
    EXPECT_NEAR(g(T.base), g(T.end()), 1e-9);
    EXPECT_LE(std::abs(g(T.base)), w + 1e-9);
  }
  auto rep = check_hypotheses(cfg);
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(rep.conditions[i].passed) << i << ": " << rep.conditions[i].detail;
  EXPECT_FALSE(rep.conditions[3].passed);

  Tube axis;
  axis.base = Vec3(-N, 0, 0);
  axis.dir = Vec3::UnitX();
  axis.length = 2 * N;
  std::size_t count = 0;
  for (const auto& q : cfg.cubes) count += tube_cube_intersects(axis, q);
  EXPECT_GE(count, static_cast<std::size_t>(N));
}
