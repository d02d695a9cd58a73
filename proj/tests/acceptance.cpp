// Acceptance run: one PASS/FAIL line per criterion, with the measured values.
//
// A criterion that measures below its threshold prints FAIL and the run
// continues; the exit status is non-zero only when a criterion could not run
// (exception) so that known shortfalls stay visible without breaking ctest.
//
// Usage: acceptance [criterion numbers...]

#include "kakeya/kakeya.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace kakeya;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget;  // seconds
  std::function<Outcome()> run;
};

std::string num(double x) { return CsvWriter::format(x); }

Poly3 random_poly(Rng& rng, int D) {
  Poly3 P(D);
  for (auto& c : P.coeffs()) c = rng.uniform(-1, 1);
  return P;
}

Poly3 unit_sphere() {
  return Poly3::monomial(2, 0, 0) + Poly3::monomial(0, 2, 0) + Poly3::monomial(0, 0, 2) - 1.0;
}

ProductPoly3 sheets(double r) {
  const double delta = r * r;
  const int M = static_cast<int>(std::ceil(1.0 / (r * delta) - 1e-9));
  return ProductPoly3::parallel_planes(Vec3::UnitX(), delta, -M, M);
}

Tube vertical(double len) {
  Tube T;
  T.dir = Vec3::UnitZ();
  T.length = len;
  return T;
}

std::vector<UnitCube> marked_on_axis(const Tube& T, int count, double spacing, double start) {
  std::vector<UnitCube> out;
  for (int i = 0; i < count; ++i) out.push_back({T.at(start + i * spacing), 1.0});
  return out;
}

bool parallel(const Vec3& a, const Vec3& b, double tol) { return std::min((a - b).norm(), (a + b).norm()) <= tol; }

// ---------------------------------------------------------------------------

Outcome derivatives() {
  Rng rng = Rng::stream(1, "accept-derivatives");
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Poly3 P = random_poly(rng, 1 + trial % 12);
    for (int k = 0; k < 200; ++k) {
      const Vec3 x = rng.in_box(Vec3::Constant(-1), Vec3::Constant(1));
      const Jet J = P.jet(x);
      for (int i = 0; i < 3; ++i) {
        const Vec3 e = h * Vec3::Unit(i);
        worst = std::max(worst, std::abs(J.grad[i] - (P(x + e) - P(x - e)) / (2 * h)));
        const Vec3 dg = (P.grad(x + e) - P.grad(x - e)) / (2 * h);
        for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(J.hess(i, j) - dg[j]));
      }
    }
  }
  return {worst <= 1e-6, "max abs error " + num(worst) + " over 20 polynomials x 200 points"};
}

Outcome norm_formula() {
  Rng rng = Rng::stream(2, "accept-norm");
  double worst = 0.0;
  std::size_t points = 0;
  for (int k = 0; points < 500; ++k) {
    Poly3 P = random_poly(rng, 1 + k % 8);
    for (const auto& x : surface_points_in_box(P, Vec3::Constant(-1), Vec3::Constant(1), 25, 500, rng)) {
      if (points == 500) break;
      const double a = tangent_frame(P, x).shape.norm(), b = sff_norm(P, x);
      worst = std::max(worst, std::abs(a - b));
      ++points;
    }
  }
  return {worst <= 1e-9, "max ||A|_F - norm formula| " + num(worst) + " at " +
                             std::to_string(points) + " points"};
}

Outcome closed_forms() {
  const TangentFrame s = tangent_frame(unit_sphere(), Vec3(0.6, 0, 0.8));
  const double norm_err = std::abs(s.shape.norm() - std::sqrt(2.0));
  const bool sphere_ok = norm_err <= 1e-9 && eigen_directions(s).umbilic && gauss_sign(s) == GaussSign::Positive;

  const Poly3 saddle = Poly3::variable(2) - Poly3::monomial(1, 1, 0);
  const TangentFrame f = tangent_frame(saddle, Vec3::Zero());
  const EigenDirections e = eigen_directions(f);
  const double eig_err = std::max(std::abs(e.curvatures[0] + 1), std::abs(e.curvatures[1] - 1));
  const StraightDirections sd = straight_directions(f);
  bool axes = sd.dirs.size() == 2;
  for (const auto& d : sd.dirs) axes = axes && (parallel(d, Vec3::UnitX(), 1e-8) || parallel(d, Vec3::UnitY(), 1e-8));
  axes = axes && !parallel(sd.dirs[0], sd.dirs[1], 1e-3);
  return {sphere_ok && eig_err <= 1e-9 && axes,
          "sphere |A| - sqrt 2 = " + num(norm_err) + ", gauss " + to_string(gauss_sign(s)) +
              (eigen_directions(s).umbilic ? ", umbilic" : ", not umbilic") + "; saddle eigenvalue error " +
              num(eig_err) + ", straight directions on the axes: " + (axes ? "yes" : "no")};
}

Outcome crofton_accuracy() {
  const double disk = estimate_area(Poly3::variable(2), Ball{Vec3::Zero(), 1.0}, 100000, 4) / kPi;
  const double sphere = estimate_area(unit_sphere(), Ball{Vec3::Zero(), 2.0}, 100000, 5) / (4 * kPi);
  return {std::abs(disk - 1) <= 0.05 && std::abs(sphere - 1) <= 0.05,
          "disk / pi = " + num(disk) + ", sphere / 4pi = " + num(sphere)};
}

Outcome degree_area() {
  Rng rng = Rng::stream(6, "accept-degree-area");
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Poly3 P = random_poly(rng, 1 + k % 6);
    worst = std::max(worst, check_degree_area_bound(P, Vec3::Zero(), 4.0, 100000, 100 + k).bound_ratio);
  }
  const Poly3 z = Poly3::variable(2);
  const double planes = check_degree_area_bound(z * (z - 1) * (z + 1), Vec3::Zero(), 4.0, 100000, 7).bound_ratio;
  return {worst <= 1.5 && std::abs(planes - 1) <= 0.1,
          "max area / (16 D) over 20 polynomials " + num(worst) + "; 3 parallel planes " + num(planes)};
}

Outcome cylinder_tangency() {
  Rng rng = Rng::stream(8, "accept-cylinder");
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Poly3 P = random_poly(rng, 1 + k % 6);
    Tube T;
    T.base = rng.in_box(Vec3::Constant(-1), Vec3::Constant(1));
    T.dir = rng.unit_vector();
    T.length = 3;
    worst = std::max(worst, cylinder_tangency_check(P, T, 600, 200 + k).ratio);
  }
  return {worst <= 1.1, "max ratio to pi R^2 deg P over 20 polynomials " + num(worst)};
}

Outcome cutting_definition() {
  const CutVerdict half = cuts_at_scale(Poly3::variable(0), UnitCube{}, 0.1, 64, 10000, 9);
  const CutVerdict sh = cuts_at_scale(sheets(0.2), UnitCube{}, 0.2, 64, 10000, 10);
  return {!half.passed && half.worst_ball.positive_fraction == 1.0 && sh.passed,
          std::string("x1 at r = 0.1: ") + (half.passed ? "accepted" : "rejected") + ", worst fraction " +
              num(half.worst_ball.positive_fraction) + "; sheets at r = 0.2: " + (sh.passed ? "accepted" : "rejected") +
              ", worst fraction " + num(sh.worst_ball.positive_fraction)};
}

Outcome vanishing_lemma() {
  const double r = 0.2;
  const Tube T = vertical(170);
  const auto marked = marked_on_axis(T, 20, 8.0, 5.0);
  VanishingOptions opt;
  opt.lines = 2000;
  opt.samples = 4000;
  const ContagionReport rep = verify_contagion(sheets(r), T, marked, r, 50, 11, opt);

  const Tube U = vertical(100);
  const auto six = marked_on_axis(U, 6, 10.0, 5.0);
  VanishingOptions o2;
  o2.lines = 1000;
  const auto cls = classify_segments(Poly3::variable(2) - 31.0, U, six, 0.25, 12, o2);
  bool only_third = cls.bad_count == 1;
  for (std::size_t i = 0; i < cls.segments.size(); ++i) only_third = only_third && cls.segments[i].is_good == (i != 2);
  return {rep.classification.bad_count == 0 && rep.probes.size() == 50 && rep.pass_fraction == 1.0 && only_third,
          "sheets: " + std::to_string(rep.classification.bad_count) + " bad of " +
              std::to_string(rep.classification.segments.size()) + " segments, " + std::to_string(rep.passed) + "/" +
              std::to_string(rep.probes.size()) + " probes cut at 2r; transverse plane at height 31: " +
              std::to_string(cls.bad_count) + " bad, " + (only_third ? "exactly the containing segment" : "wrong segment")};
}

Outcome lines_mode() {
  const Vec3 n(1, 2, -1);
  auto [u, w] = orthonormal_complement(n.normalized());
  std::vector<Line> lines;
  for (int i = 0; i < 9; ++i) {
    const double th = 0.35 * i;
    lines.push_back({Vec3(0.5, 0, 0) + (0.2 * i - 0.8) * w, std::cos(th) * u + std::sin(th) * w});
  }
  const int D = 3;
  const LinesReport rep = run_lines_mode(lines, 2 * D + 1, D, 13);
  double worst = 0.0;
  for (double m : rep.restriction_max) worst = std::max(worst, m);
  return {rep.vanished == 9 && worst <= 1e-8, "degree 3, " + std::to_string(rep.points) + " points: " +
                                                  std::to_string(rep.vanished) + "/9 restrictions vanish, max coefficient " +
                                                  num(worst)};
}

Outcome tube_degree_reduction() {
  const TubeConfig cfg = slab_config(16, 0.5, 8, 0, 7);
  const DegRedReport rep = run_degree_reduction(cfg, 4, 0.25, 14);
  const double cap = 8 * std::pow(16.0, 0.5);
  return {rep.fraction_cut >= 0.9 && rep.degree_used <= cap,
          "fraction_cut " + num(rep.fraction_cut) + " over " + std::to_string(rep.verified_cubes.size()) +
              " cubes, degree " + std::to_string(rep.degree_used) + " (cap " + num(cap) + ")"};
}

Outcome planiness() {
  bool ok = true;
  std::string detail;
  for (double N : {16.0, 64.0}) {
    const TubeConfig cfg = slab_config(N, 0.5, 8, 0, 7);
    const Incidences inc = incidences(cfg);
    const auto planes = assign_planes(slab_surface(cfg), cfg, inc, 8, 15);
    const AngleStats s = planiness_stats(cfg, inc, planes, 1.0);
    ok = ok && !s.empty && s.p99 <= s.threshold;
    detail += (detail.empty() ? "" : "; ") + std::string("N = ") + num(N) + ": p99 " + num(s.p99) + " vs " +
              num(s.threshold);
  }
  return {ok, detail};
}

// Same sampling and statistics settings for both configurations.
template <Field F>
AngleStats grain_run(const TubeConfig& cfg, const F& P) {
  const Incidences inc = incidences(cfg);
  const auto planes = assign_planes(P, cfg, inc, 8, 16);
  StatsOptions opt;
  opt.epsilon = 0.1;
  return graininess_stats(cfg, inc, planes, 2.0, opt);
}

Outcome graininess() {
  const TubeConfig slab = slab_config(64, 0.8, 8, 0, 7);
  const AngleStats s = grain_run(slab, slab_surface(slab));
  const AngleStats g = grain_run(regulus_config(64, 0.8, 0, 7), regulus_surface(64));
  return {!s.empty && !g.empty && s.fraction_within == 1.0 && g.fraction_within <= 0.5,
          "slab fraction_within " + num(s.fraction_within) + "; regulus fraction_within " + num(g.fraction_within) +
              " (needs <= 0.5), threshold " + num(g.threshold) + ", regulus angle p50 " + num(g.p50)};
}

// ---------------------------------------------------------------------------
// Determinism: CLI reports under --threads 1 and 4, and in-process reruns.

std::string cli_path() { return KAKEYA_LAB_CLI; }

void cli(const fs::path& dir, int threads, const std::string& args) {
  const std::string cmd = "cd \"" + dir.string() + "\" && \"" + cli_path() + "\" --threads " +
                          std::to_string(threads) + " " + args + " > /dev/null";
  if (std::system(cmd.c_str()) != 0) throw std::runtime_error("command failed: " + cmd);
}

std::vector<std::string> cli_reports(const fs::path& dir, int threads) {
  fs::create_directories(dir);
  write_file((dir / "lines.json").string(),
             R"({"schema": "kakeya-lab/lines@1", "lines": [)"
             R"({"base": [0, 0, 0], "dir": [1, 0, 0]}, {"base": [0, 1, 0], "dir": [1, 0, 0]},)"
             R"({"base": [0, 0, 1], "dir": [0, 1, 0]}]})");
  cli(dir, threads, "generate --kind slab --n 16 --sigma 0.5 --seed 3 --out slab.json --poly-out slab_poly.json");
  cli(dir, threads, "generate --kind regulus --n 16 --sigma 0.5 --seed 3 --out reg.json --poly-out reg_poly.json");
  cli(dir, threads, "check --config slab.json --report check.json");
  cli(dir, threads, "fit --config slab.json --max-cubes 40 --out fit.json");
  cli(dir, threads, "verify-cut --poly fit.json --config slab.json --r 0.2 --sample 16 --seed 4 --report cut.csv");
  cli(dir, threads, "generate --kind slab --n 32 --sigma 0.5 --seed 3 --out slab32.json");
  cli(dir, threads, "vanishing --poly reg_poly.json --config slab32.json --tube-index 0 --r 0.2 --lines 400 "
                    "--seed 4 --report van.csv");
  cli(dir, threads, "crofton --poly reg_poly.json --ball 0,0,0,4 --lines 20000 --cube-side 2 --slice 0.05,0.5 "
                    "--window -6,6,-6,6 --cell 0.05 --seed 4 --slice-out slice.csv");
  cli(dir, threads, "surf --poly fit.json --at 0.3,0.2,0.1 --project --report surf.json");
  cli(dir, threads, "degred --lines lines.json --degree 2 --seed 4 --report lines.json.out");
  cli(dir, threads, "planiness --config reg.json --poly reg_poly.json --seed 4 --report plan.csv");
  cli(dir, threads, "graininess --config reg.json --poly reg_poly.json --seed 4 --k 2 --report grain.csv");
  cli(dir, threads, "census --poly reg_poly.json --config reg.json --H 0.05 --max-cubes 300 --seed 4 --report census.csv");
  std::vector<std::string> out;
  for (const char* f : {"slab.json", "slab_poly.json", "reg.json", "reg_poly.json", "check.json", "fit.json", "cut.csv",
                        "van.csv", "slice.csv", "surf.json", "lines.json.out", "plan.csv", "grain.csv", "census.csv"})
    out.push_back(read_file((dir / f).string()));
  return out;
}

// In-process reruns of a few criteria, serialized at full precision.
std::string library_fingerprint() {
  std::ostringstream ss;
  ss << num(estimate_area(unit_sphere(), Ball{Vec3::Zero(), 2.0}, 100000, 5)) << ' ';
  const CutVerdict sh = cuts_at_scale(sheets(0.2), UnitCube{}, 0.2, 64, 10000, 10);
  ss << sh.passed << ' ' << num(sh.worst_ball.positive_fraction) << ' ';
  Tube T = vertical(3);
  ss << num(cylinder_tangency_check(Poly3::variable(2) * Poly3::variable(0) - 0.3, T, 600, 3).integral_estimate) << ' ';
  const TubeConfig cfg = slab_config(8, 0.5, 8, 0, 3);
  DegRedOptions opt;
  opt.verify_sample = 12;
  opt.samples = 1000;
  const DegRedReport rep = run_degree_reduction(cfg, 4, 0.25, 5, opt);
  for (double c : rep.poly.coeffs()) ss << num(c) << ',';
  for (const auto& v : rep.verdicts) ss << v.passed << ':' << num(v.worst_ball.positive_fraction) << ',';
  const TubeConfig reg = regulus_config(16, 0.5, 0, 3);
  const Incidences inc = incidences(reg);
  const AngleStats g = graininess_stats(reg, inc, assign_planes(regulus_surface(16), reg, inc, 4, 9), 2.0);
  for (const auto& r : g.records) ss << num(r.angle) << ',';
  return ss.str();
}

Outcome determinism(const fs::path& work) {
  fs::remove_all(work);
  const auto a = cli_reports(work / "t1", 1);
  const auto b = cli_reports(work / "t4", 4);
  const auto c = cli_reports(work / "t1-again", 1);
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i] && a[i] == c[i];

  set_thread_count(1);
  const std::string f1 = library_fingerprint();
  set_thread_count(4);
  const std::string f4 = library_fingerprint();
  set_thread_count(0);
  return {same == a.size() && f1 == f4, std::to_string(same) + "/" + std::to_string(a.size()) +
                                            " CLI artifacts byte-identical across --threads 1, 4 and a repeat; "
                                            "in-process reruns " + (f1 == f4 ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const fs::path work = fs::path(KAKEYA_ACCEPT_WORKDIR);

  const std::vector<Criterion> criteria = {
      {1, "derivatives match central differences", 5, derivatives},
      {2, "shape operator norm matches the norm formula", 10, norm_formula},
      {3, "closed-form sphere and saddle geometry", 1, closed_forms},
      {4, "Crofton area of a disk and the unit sphere", 30, crofton_accuracy},
      {5, "area bounded by degree times side squared", 120, degree_area},
      {6, "cylinder tangency bound", 120, cylinder_tangency},
      {7, "cutting at scale r: half-space and alternating sheets", 30, cutting_definition},
      {8, "vanishing lemma along a tube", 60, vanishing_lemma},
      {9, "lines-mode degree reduction", 5, lines_mode},
      {10, "tube degree reduction on the N = 16 slab", 600, tube_degree_reduction},
      {11, "planiness on the slab at N = 16 and 64", 60, planiness},
      {12, "graininess separates the slab from the regulus", 120, graininess},
      {13, "reports reproduce byte for byte across thread counts", 600, [&] { return determinism(work); }},
  };

  int passed = 0, ran = 0, errors = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
      ++errors;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget;
    const bool ok = o.pass && in_time;
    passed += ok;
    std::printf("[%s] %2d %s: %s; %.1f s (budget %.0f s%s)\n", ok ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, c.budget, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", passed, ran);
  return errors == 0 ? 0 : 1;
}
