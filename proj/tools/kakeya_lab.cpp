// kakeya-lab: experiment driver over the kakeya headers.
//
// Exit codes: 0 success, 1 precondition or numerical failure, 2 I/O error,
// 64 usage error.

#include "kakeya/kakeya.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

using namespace kakeya;

namespace {

constexpr int kExitPrecondition = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

struct Globals {
  int threads = 0;
  bool timings = false;
};

/// Wall-clock per stage, recorded in the manifest and printed with --timings.
class Stages {
 public:
  Stages(RunManifest& m, const Globals& g) : m_(m), g_(g) {}

  template <class Fn>
  auto run(const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      m_.timings[name] = s;
      if (g_.timings) std::printf("[timing] %-14s %.3f s\n", name.c_str(), s);
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto r = fn();
      finish();
      return r;
    }
  }

 private:
  RunManifest& m_;
  const Globals& g_;
};

RunManifest manifest(const std::string& sub, std::uint64_t seed, const Globals& g) {
  RunManifest m;
  m.subcommand = sub;
  m.seed = seed;
  m.embed_timings = g.timings;
  return m;
}

TubeConfig load_config(const std::string& path, RunManifest& m) {
  const std::string text = read_file(path);
  m.add_input(path, text);
  return config_from_json(parse_json(text, path), path);
}

AnyPoly load_poly(const std::string& path, RunManifest& m) {
  const std::string text = read_file(path);
  m.add_input(path, text);
  return any_poly_from_json(parse_json(text, path), path);
}

Vec3 vec3_arg(const std::vector<double>& v, const char* flag) {
  if (v.size() != 3) throw CLI::ValidationError(flag, "expected x,y,z");
  return {v[0], v[1], v[2]};
}

std::string fmt(double x) { return CsvWriter::format(x); }
std::string fmt(const Vec3& v) { return "(" + fmt(v.x()) + ", " + fmt(v.y()) + ", " + fmt(v.z()) + ")"; }

// ---------------------------------------------------------------------------
// Subcommands. Each has its option block and a run function.

struct GenerateArgs {
  std::string kind, out, poly_out;
  double n = 16, sigma = 0.5, e = 8;
  std::size_t tubes = 0;
  std::uint64_t seed = 0;
};

int run_generate(const GenerateArgs& a, const Globals& g) {
  RunManifest m = manifest("generate", a.seed, g);
  m.params = {{"kind", a.kind}, {"n", a.n}, {"sigma", a.sigma}, {"e", a.e}, {"tubes", a.tubes}};
  Stages st(m, g);
  TubeConfig cfg = st.run("generate", [&] {
    return a.kind == "slab" ? slab_config(a.n, a.sigma, a.e, a.tubes, a.seed)
                            : regulus_config(a.n, a.sigma, a.tubes, a.seed, {}, a.e);
  });
  json j = to_json(cfg);
  j["manifest"] = m.to_json();
  write_json(a.out, j);
  std::printf("%s config: N = %s, sigma = %s, %zu cubes, %zu tubes, rho = %s -> %s\n", a.kind.c_str(),
              fmt(a.n).c_str(), fmt(a.sigma).c_str(), cfg.cubes.size(), cfg.tubes.size(),
              fmt(cfg.params.rho).c_str(), a.out.c_str());
  if (!a.poly_out.empty()) {
    json p = a.kind == "slab" ? to_json(slab_surface(cfg)) : to_json(regulus_surface(a.n));
    p["manifest"] = m.to_json();
    write_json(a.poly_out, p);
    std::printf("reference surface -> %s\n", a.poly_out.c_str());
  }
  return 0;
}

struct CheckArgs {
  std::string config, report;
  bool counts_only = false;
};

int run_check(const CheckArgs& a, const Globals& g) {
  RunManifest m = manifest("check", 0, g);
  m.params = {{"counts_only", a.counts_only}};
  TubeConfig cfg = load_config(a.config, m);
  Stages st(m, g);
  HypothesesOptions ho;
  ho.counts_only = a.counts_only;
  HypothesesReport rep = st.run("hypotheses", [&] { return check_hypotheses(cfg, ho); });
  json conds = json::array();
  for (std::size_t i = 0; i < rep.conditions.size(); ++i) {
    const auto& c = rep.conditions[i];
    std::printf("condition %zu: %s  %s\n", i + 1, c.passed ? "pass" : "FAIL", c.detail.c_str());
    conds.push_back({{"condition", i + 1}, {"passed", c.passed}, {"detail", c.detail}});
  }
  if (!a.report.empty())
    write_json(a.report, {{"schema", "kakeya-lab/hypotheses-report@1"}, {"manifest", m.to_json()}, {"conditions", conds}});
  return 0;
}

struct FitArgs {
  std::string config, out;
  int degree = -1;
  double r = 0.0;
  int cells_per_cube = 1;
  std::size_t max_cubes = 0;
};

int run_fit(const FitArgs& a, const Globals& g) {
  RunManifest m = manifest("fit", 0, g);
  m.params = {{"degree", a.degree}, {"r", a.r}, {"cells_per_cube", a.cells_per_cube}, {"max_cubes", a.max_cubes}};
  TubeConfig cfg = load_config(a.config, m);
  Stages st(m, g);
  std::vector<UnitCube> cells;
  const auto picks = evenly_spaced(cfg.cubes.size(), a.max_cubes > 0 ? a.max_cubes : cfg.cubes.size());
  for (std::size_t q : picks)
    for (const auto& c : subdivide(cfg.cubes[q], a.cells_per_cube)) cells.push_back(c);
  const int D = a.degree >= 0 ? a.degree : fitting_degree(cells.size());
  auto [P, rep] = st.run("fit", [&] { return fit_cutting_poly(cells, D); });
  json j = to_json(P);
  j["fit"] = {{"degree_used", rep.degree_used}, {"cells", rep.cells},       {"residual", rep.residual},
              {"scale", rep.scale},             {"kernel_dim", rep.kernel_dim}};
  j["manifest"] = m.to_json();
  write_json(a.out, j);
  std::printf("fitted degree %d through %zu cells: max |cell mean| = %s (round-off scale %s), kernel dim %d -> %s\n",
              rep.degree_used, rep.cells, fmt(rep.residual).c_str(), fmt(rep.scale).c_str(), rep.kernel_dim,
              a.out.c_str());
  return 0;
}

struct VerifyArgs {
  std::string poly, config, report;
  double r = 0.1;
  std::uint64_t seed = 0;
  std::size_t sample = 256, balls = 64, samples = 2000;
  bool full = false;
};

int run_verify(const VerifyArgs& a, const Globals& g) {
  RunManifest m = manifest("verify-cut", a.seed, g);
  m.params = {{"r", a.r}, {"sample", a.sample}, {"balls", a.balls}, {"samples", a.samples}, {"full", a.full}};
  TubeConfig cfg = load_config(a.config, m);
  AnyPoly P = load_poly(a.poly, m);
  Stages st(m, g);
  const auto cubes = sample_indices(cfg.cubes.size(), a.sample > 0 ? a.sample : cfg.cubes.size(), a.seed,
                                    "verify-cut-sample");
  auto verdicts = st.run("verify", [&] {
    return std::visit(
        [&](const auto& p) {
          return parallel_map<CutVerdict>(cubes.size(), [&](std::size_t i) {
            CutOptions co;
            co.cube_index = cubes[i];
            co.stop_at_first_failure = !a.full;
            return cuts_at_scale(p, cfg.cubes[cubes[i]], a.r, a.balls, a.samples, a.seed, co);
          });
        },
        P);
  });
  std::size_t passed = 0;
  CsvWriter csv(m, {"cube_index", "passed", "worst_ball_fraction", "worst_ball_radius"});
  for (const auto& v : verdicts) {
    passed += v.passed;
    csv.values(v.cube, v.passed, v.worst_ball.positive_fraction, v.worst_ball.ball.radius);
  }
  std::printf("P cuts %zu of %zu cubes at scale r = %s (fraction %s)\n", passed, verdicts.size(), fmt(a.r).c_str(),
              fmt(verdicts.empty() ? 0.0 : static_cast<double>(passed) / verdicts.size()).c_str());
  if (!a.report.empty()) csv.save(a.report);
  return 0;
}

struct VanishingArgs {
  std::string poly, config, report;
  std::size_t tube = 0, lines = 4000, max_marked = 0, probes = 0;
  double r = 0.2, gap = 6.0;
  std::uint64_t seed = 0;
};

int run_vanishing(const VanishingArgs& a, const Globals& g) {
  RunManifest m = manifest("vanishing", a.seed, g);
  m.params = {{"tube_index", a.tube}, {"r", a.r},         {"lines", a.lines},
              {"gap", a.gap},         {"max_marked", a.max_marked}, {"probes", a.probes}};
  TubeConfig cfg = load_config(a.config, m);
  AnyPoly P = load_poly(a.poly, m);
  Stages st(m, g);
  const Incidences inc = st.run("incidences", [&] { return incidences(cfg); });
  const auto marked = spaced_cubes_along(cfg, inc, a.tube, a.gap, a.max_marked);
  VanishingOptions opt;
  opt.lines = a.lines;
  opt.R_cap = cfg.params.E * cfg.params.N;
  const Tube& T = cfg.tubes[a.tube];
  CsvWriter csv(m, {"seg_index", "t0", "t1", "shadow", "good"});
  std::visit(
      [&](const auto& p) {
        SegmentClassification cls;
        if (a.probes > 0) {
          ContagionReport rep = st.run("contagion", [&] { return verify_contagion(p, T, marked, a.r, a.probes, a.seed, opt); });
          cls = rep.classification;
          std::printf("contagion: %zu of %zu probe cubes cut at scale 2r = %s\n", rep.passed, rep.probes.size(),
                      fmt(2 * a.r).c_str());
        } else {
          cls = st.run("classify", [&] { return classify_segments(p, T, marked, a.r, a.seed, opt, a.tube); });
        }
        for (std::size_t i = 0; i < cls.segments.size(); ++i) {
          const auto& s = cls.segments[i];
          csv.values(i, s.segment.t0, s.segment.t1, s.shadow_area, s.is_good);
        }
        std::printf("tube %zu: %zu marked cubes, %zu segments, %zu bad (reference bound %s), R = %s\n", a.tube,
                    marked.size(), cls.segments.size(), cls.bad_count, fmt(cls.bad_bound).c_str(), fmt(cls.R).c_str());
      },
      P);
  if (!a.report.empty()) csv.save(a.report);
  return 0;
}

struct CroftonArgs {
  std::string poly, slice_out;
  std::vector<double> ball, slice, window;
  std::size_t lines = 100000;
  double cube_side = 0.0, cell = 0.02;
  std::uint64_t seed = 0;
};

int run_crofton(const CroftonArgs& a, const Globals& g) {
  RunManifest m = manifest("crofton", a.seed, g);
  m.params = {{"ball", a.ball},           {"lines", a.lines},   {"cube_side", a.cube_side},
              {"slice", a.slice},         {"window", a.window}, {"cell", a.cell}};
  AnyPoly P = load_poly(a.poly, m);
  Stages st(m, g);
  if (!a.ball.empty()) {
    if (a.ball.size() != 4) throw CLI::ValidationError("--ball", "expected cx,cy,cz,R");
    const Ball B{Vec3(a.ball[0], a.ball[1], a.ball[2]), a.ball[3]};
    const double area = st.run("area", [&] {
      return std::visit([&](const auto& p) { return estimate_area(p, B, a.lines, a.seed); }, P);
    });
    std::printf("estimated area of Z(P) in the ball: %s (%zu lines)\n", fmt(area).c_str(), a.lines);
    if (a.cube_side > 0) {
      AreaBound b = st.run("area-bound", [&] {
        return std::visit(
            [&](const auto& p) { return check_degree_area_bound(p, B.center, a.cube_side, a.lines, a.seed); }, P);
      });
      std::printf("cube side %s: area %s, area / (D S^2) = %s%s\n", fmt(a.cube_side).c_str(), fmt(b.area).c_str(),
                  fmt(b.bound_ratio).c_str(), b.flagged ? "  FLAGGED" : "");
    }
  }
  if (!a.slice.empty()) {
    if (a.slice.size() != 2) throw CLI::ValidationError("--slice", "expected a,b");
    if (a.window.size() != 4) throw CLI::ValidationError("--window", "expected s0,s1,z0,z1");
    const SlicePlane pl{a.slice[0], a.slice[1]};
    const SliceWindow win{a.window[0], a.window[1], a.window[2], a.window[3]};
    SliceCurve c = st.run("slice", [&] {
      return std::visit([&](const auto& p) { return extract_slice(p, pl, win, a.cell); }, P);
    });
    std::printf("slice x1 + %s x2 = %s: %zu polylines, length %s\n", fmt(pl.a).c_str(), fmt(pl.b).c_str(),
                c.polylines.size(), fmt(c.length()).c_str());
    if (!a.slice_out.empty()) {
      CsvWriter csv(m, {"polyline", "vertex", "x1", "x2", "x3", "closed"});
      for (std::size_t i = 0; i < c.polylines.size(); ++i)
        for (std::size_t k = 0; k < c.polylines[i].size(); ++k) {
          const Vec3& v = c.polylines[i][k];
          csv.values(i, k, v.x(), v.y(), v.z(), static_cast<bool>(c.closed[i]));
        }
      csv.save(a.slice_out);
    }
  }
  if (a.ball.empty() && a.slice.empty()) throw CLI::ValidationError("crofton", "give --ball and/or --slice");
  return 0;
}

struct SurfArgs {
  std::string poly, report;
  std::vector<double> at, w;
  double H = 1.0;
  bool project = false;
};

int run_surf(const SurfArgs& a, const Globals& g) {
  RunManifest m = manifest("surf", 0, g);
  m.params = {{"at", a.at}, {"w", a.w}, {"H", a.H}, {"project", a.project}};
  AnyPoly P = load_poly(a.poly, m);
  Vec3 x = vec3_arg(a.at, "--at");
  const Vec3 w = a.w.empty() ? Vec3::UnitZ() : vec3_arg(a.w, "--w");
  json out;
  std::visit(
      [&](const auto& p) {
        if (a.project) x = project_to_surface(p, x);
        TangentFrame f = tangent_frame(p, x);
        const GaussSign gs = gauss_sign(f);
        StraightDirections sd = straight_directions(f);
        EigenDirections ed = eigen_directions(f);
        DetectorValues d = detector_values(p, x, w, a.H);
        std::printf("point     %s\nnormal    %s\ne1        %s\ne2        %s\n", fmt(x).c_str(), fmt(f.normal).c_str(),
                    fmt(f.e1).c_str(), fmt(f.e2).c_str());
        std::printf("shape     [[%s, %s], [%s, %s]]\n|A|       %s (norm formula %s)\ngauss     %s\n",
                    fmt(f.shape(0, 0)).c_str(), fmt(f.shape(0, 1)).c_str(), fmt(f.shape(1, 0)).c_str(),
                    fmt(f.shape(1, 1)).c_str(), fmt(f.shape.norm()).c_str(), fmt(sff_norm(p, x)).c_str(),
                    to_string(gs));
        if (sd.degenerate_flat) std::printf("straight  every direction (A = 0)\n");
        for (const auto& v : sd.dirs) std::printf("straight  %s\n", fmt(v).c_str());
        if (ed.umbilic) std::printf("eigen     umbilic\n");
        for (std::size_t i = 0; i < ed.dirs.size(); ++i)
          std::printf("eigen     %s  curvature %s\n", fmt(ed.dirs[i]).c_str(), fmt(ed.curvatures[static_cast<int>(i)]).c_str());
        std::printf("Tan(w) %s  Str(w) %s  Eig(w) %s  A(H) %s  (w = %s, H = %s)\n", fmt(d.tan).c_str(),
                    fmt(d.str).c_str(), fmt(d.eig).c_str(), fmt(d.aH).c_str(), fmt(w).c_str(), fmt(a.H).c_str());
        json sdirs = json::array(), edirs = json::array();
        for (const auto& v : sd.dirs) sdirs.push_back(to_json(v));
        for (const auto& v : ed.dirs) edirs.push_back(to_json(v));
        out = {{"schema", "kakeya-lab/surf-report@1"},
               {"point", to_json(x)},
               {"normal", to_json(f.normal)},
               {"e1", to_json(f.e1)},
               {"e2", to_json(f.e2)},
               {"shape", {{f.shape(0, 0), f.shape(0, 1)}, {f.shape(1, 0), f.shape(1, 1)}}},
               {"sff_norm", sff_norm(p, x)},
               {"gauss_sign", to_string(gs)},
               {"straight_directions", sdirs},
               {"flat", sd.degenerate_flat},
               {"umbilic", ed.umbilic},
               {"eigen_directions", edirs},
               {"curvatures", {ed.curvatures[0], ed.curvatures[1]}},
               {"detectors",
                {{"tan", d.tan}, {"str", d.str}, {"eig", d.eig}, {"aH", d.aH},
                 {"degrees", {d.deg_tan, d.deg_str, d.deg_eig, d.deg_aH}}}}};
      },
      P);
  out["manifest"] = m.to_json();
  if (!a.report.empty()) write_json(a.report, out);
  return 0;
}

struct DegredArgs {
  std::string config, report, lines;
  double k = 4, r = 0.25;
  std::uint64_t seed = 0;
  std::size_t verify_sample = 256, balls = 64, samples = 2000, points_per_line = 0;
  int cells_per_cube = 1, degree = 1;
  bool full = false;
};

json verdict_json(const CutVerdict& v) {
  return {{"cube", v.cube},
          {"passed", v.passed},
          {"worst_ball", {{"center", to_json(v.worst_ball.ball.center)}, {"radius", v.worst_ball.ball.radius},
                          {"positive_fraction", v.worst_ball.positive_fraction}}},
          {"balls_tested", v.balls_tested},
          {"tolerance", v.tolerance}};
}

int run_degred_lines(const DegredArgs& a, const Globals& g) {
  RunManifest m = manifest("degred", a.seed, g);
  m.params = {{"mode", "lines"}, {"degree", a.degree}, {"points_per_line", a.points_per_line}};
  const std::string text = read_file(a.lines);
  m.add_input(a.lines, text);
  const json j = parse_json(text, a.lines);
  detail::expect_schema(j, kLinesSchema, a.lines);
  std::vector<Line> lines = detail::guarded(a.lines, [&] {
    std::vector<Line> out;
    for (const auto& l : j.at("lines")) out.push_back({vec3_from_json(l.at("base")), vec3_from_json(l.at("dir"))});
    return out;
  });
  const std::size_t ppl = a.points_per_line > 0 ? a.points_per_line : static_cast<std::size_t>(2 * a.degree + 1);
  Stages st(m, g);
  LinesReport rep = st.run("lines", [&] { return run_lines_mode(lines, ppl, a.degree, a.seed); });
  std::printf("lines mode: %zu lines, %zu points, degree %d; %zu restrictions vanish (max coefficient <= 1e-8)\n",
              lines.size(), rep.points, a.degree, rep.vanished);
  if (!a.report.empty())
    write_json(a.report, {{"schema", "kakeya-lab/lines-report@1"},
                          {"manifest", m.to_json()},
                          {"D_target", rep.D_target},
                          {"points", rep.points},
                          {"restriction_max", rep.restriction_max},
                          {"vanished", rep.vanished},
                          {"fit", {{"residual", rep.fit.residual}, {"scale", rep.fit.scale}, {"kernel_dim", rep.fit.kernel_dim}}},
                          {"poly", to_json(rep.poly)}});
  return 0;
}

int run_degred(const DegredArgs& a, const Globals& g) {
  if (!a.lines.empty()) return run_degred_lines(a, g);
  if (a.config.empty()) throw CLI::ValidationError("degred", "--config is required (or --lines for lines mode)");
  RunManifest m = manifest("degred", a.seed, g);
  m.params = {{"mode", "tubes"},        {"k", a.k},       {"r", a.r},
              {"verify_sample", a.verify_sample}, {"balls", a.balls}, {"samples", a.samples},
              {"cells_per_cube", a.cells_per_cube}, {"full", a.full}};
  TubeConfig cfg = load_config(a.config, m);
  DegRedOptions opt;
  opt.verify_sample = a.verify_sample;
  opt.ball_budget = a.balls;
  opt.samples = a.samples;
  opt.cells_per_cube = a.cells_per_cube;
  opt.stop_at_first_failure = !a.full;
  Stages st(m, g);
  DegRedReport rep = st.run("degred", [&] { return run_degree_reduction(cfg, a.k, a.r, a.seed, opt); });
  m.timings["select"] = rep.timings.select;
  m.timings["fit"] = rep.timings.fit;
  m.timings["verify"] = rep.timings.verify;
  std::printf("plan: D = %d, subsample p = %s, %zu cubes per tube\n", rep.plan.D, fmt(rep.plan.subsample_prob).c_str(),
              rep.plan.cubes_per_tube);
  std::printf("selected %zu tubes (%d draws), %zu cubes, %zu cells -> degree %d%s\n", rep.selected_tubes, rep.draws,
              rep.chosen_cubes, rep.cells, rep.degree_used, rep.degree_above_plan ? " (above plan)" : "");
  std::printf("fraction cut at r = %s: %s over %zu cubes\n", fmt(a.r).c_str(), fmt(rep.fraction_cut).c_str(),
              rep.verified_cubes.size());
  if (g.timings)
    std::printf("[timing] select %.3f s, fit %.3f s, verify %.3f s\n", rep.timings.select, rep.timings.fit,
                rep.timings.verify);
  if (!a.report.empty()) {
    json verdicts = json::array();
    for (const auto& v : rep.verdicts) verdicts.push_back(verdict_json(v));
    write_json(a.report, {{"schema", "kakeya-lab/degred-report@1"},
                          {"manifest", m.to_json()},
                          {"plan", {{"K", rep.plan.K}, {"D", rep.plan.D}, {"subsample_prob", rep.plan.subsample_prob},
                                    {"cubes_per_tube", rep.plan.cubes_per_tube}, {"scale_r", rep.plan.scale_r}}},
                          {"draws", rep.draws},
                          {"selected_tubes", rep.selected_tubes},
                          {"chosen_cubes", rep.chosen_cubes},
                          {"cells", rep.cells},
                          {"degree_used", rep.degree_used},
                          {"degree_above_plan", rep.degree_above_plan},
                          {"fit", {{"residual", rep.fit.residual}, {"scale", rep.fit.scale}, {"kernel_dim", rep.fit.kernel_dim}}},
                          {"fraction_cut", rep.fraction_cut},
                          {"verdicts", verdicts},
                          {"poly", to_json(rep.poly)}});
  }
  return 0;
}

struct GrainArgs {
  std::string config, poly, report;
  double c = 1.0, k = 2.0, epsilon = 0.1, q_plus = 3.0;
  std::uint64_t seed = 0;
  std::size_t samples_per_cube = 8, max_incidences = 10000;
};

int run_grain(const GrainArgs& a, bool graininess, const Globals& g) {
  const char* sub = graininess ? "graininess" : "planiness";
  RunManifest m = manifest(sub, a.seed, g);
  m.params = {{"epsilon", a.epsilon},
              {"samples_per_cube", a.samples_per_cube},
              {"max_incidences", a.max_incidences},
              {"q_plus_side", a.q_plus}};
  m.params[graininess ? "k" : "c"] = graininess ? a.k : a.c;
  TubeConfig cfg = load_config(a.config, m);
  AnyPoly P = load_poly(a.poly, m);
  Stages st(m, g);
  const Incidences inc = st.run("incidences", [&] { return incidences(cfg); });
  PlaneOptions po;
  po.q_plus_side = a.q_plus;
  auto planes = st.run("assign-planes", [&] {
    return std::visit([&](const auto& p) { return assign_planes(p, cfg, inc, a.samples_per_cube, a.seed, po); }, P);
  });
  std::size_t transverse = 0, fallback = 0;
  for (const auto& pa : planes) {
    transverse += pa.source == PlaneSource::TwoTransverseTubes;
    fallback += pa.source == PlaneSource::NormalAverage;
  }
  StatsOptions so;
  so.epsilon = a.epsilon;
  so.max_incidences = a.max_incidences;
  AngleStats s = st.run("stats", [&] {
    return graininess ? graininess_stats(cfg, inc, planes, a.k, so) : planiness_stats(cfg, inc, planes, a.c, so);
  });
  std::printf("planes: %zu from transverse tube pairs, %zu from mean normals, %zu unassigned\n", transverse, fallback,
              planes.size() - transverse - fallback);
  if (s.empty) {
    std::printf("%s: no eligible pairs\n", sub);
  } else {
    std::printf("%s: %zu pairs from %zu of %zu incidences; angle p50 %s p90 %s p99 %s\n", sub, s.records.size(),
                s.incidences_used, s.incidences_total, fmt(s.p50).c_str(), fmt(s.p90).c_str(), fmt(s.p99).c_str());
    std::printf("fraction within %s: %s (%s 1 - epsilon = %s)\n", fmt(s.threshold).c_str(),
                fmt(s.fraction_within).c_str(), s.meets_fraction ? "meets" : "below", fmt(1 - a.epsilon).c_str());
  }
  if (!a.report.empty()) {
    CsvWriter csv(m, {"cube_index", "tube_index", "other_cube_index", "angle", "distance"});
    for (const auto& r : s.records) csv.values(r.cube, r.tube, r.other, r.angle, r.distance);
    csv.save(a.report);
  }
  return 0;
}

struct CensusArgs {
  std::string poly, config, report;
  double H = 1.0;
  std::size_t samples = 8, max_cubes = 0;
  std::uint64_t seed = 0;
};

int run_census(const CensusArgs& a, const Globals& g) {
  RunManifest m = manifest("census", a.seed, g);
  m.params = {{"H", a.H}, {"samples", a.samples}, {"max_cubes", a.max_cubes}};
  TubeConfig cfg = load_config(a.config, m);
  AnyPoly P = load_poly(a.poly, m);
  if (a.max_cubes > 0 && a.max_cubes < cfg.cubes.size()) {
    std::vector<UnitCube> kept;
    for (std::size_t q : evenly_spaced(cfg.cubes.size(), a.max_cubes)) kept.push_back(cfg.cubes[q]);
    cfg.cubes = std::move(kept);
  }
  Stages st(m, g);
  CurvatureCensus c = st.run("census", [&] {
    return std::visit([&](const auto& p) { return curvature_census(p, cfg, a.H, a.samples, a.seed); }, P);
  });
  std::printf("%zu surface points in %zu cubes (%zu cubes without points); |A| > %s at %s of them\n", c.points,
              c.per_cube.size(), c.skipped_cubes, fmt(a.H).c_str(), fmt(c.fraction_exceeding).c_str());
  for (std::size_t b = 0; b < c.bin_counts.size(); ++b)
    if (c.bin_counts[b] > 0)
      std::printf("  |A| in [%s, %s%c  %zu\n", fmt(c.bin_edges[b]).c_str(),
                b + 1 == c.bin_counts.size() ? "inf" : fmt(c.bin_edges[b + 1]).c_str(), ')', c.bin_counts[b]);
  if (!a.report.empty()) {
    CsvWriter csv(m, {"cube_index", "points", "exceeding"});
    for (const auto& cc : c.per_cube) csv.values(cc.cube, cc.points, cc.exceeding);
    csv.save(a.report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kakeya-lab: polynomial-method experiments on tube configurations"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (default: KAKEYA_LAB_THREADS, else 1)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--timings", g.timings, "Print wall-clock per stage and embed it in report manifests");

  GenerateArgs gen;
  auto* s_gen = app.add_subcommand("generate", "Build a slab or regulus configuration");
  s_gen->add_option("--kind", gen.kind, "slab or regulus")->required()->check(CLI::IsMember({"slab", "regulus"}));
  s_gen->add_option("--n", gen.n, "Scale N")->capture_default_str();
  s_gen->add_option("--sigma", gen.sigma, "Exponent sigma")->capture_default_str();
  s_gen->add_option("--e", gen.e, "Constant E")->capture_default_str();
  s_gen->add_option("--tubes", gen.tubes, "Tube budget (0 = generator default)")->capture_default_str();
  s_gen->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  s_gen->add_option("--out", gen.out, "Config JSON output")->required();
  s_gen->add_option("--poly-out", gen.poly_out, "Also write the exact reference surface");

  CheckArgs chk;
  auto* s_chk = app.add_subcommand("check", "Evaluate the four hypotheses on a configuration");
  s_chk->add_option("--config", chk.config, "Config JSON")->required();
  s_chk->add_option("--report", chk.report, "JSON report");
  s_chk->add_flag("--counts-only", chk.counts_only, "Only the cube and tube count conditions");

  FitArgs fit;
  auto* s_fit = app.add_subcommand("fit", "Fit a polynomial with zero mean on the cubes");
  s_fit->add_option("--config", fit.config, "Config JSON")->required();
  s_fit->add_option("--degree", fit.degree, "Degree (default: smallest with more coefficients than cells)");
  s_fit->add_option("--r", fit.r, "Intended verification scale, recorded in the manifest");
  s_fit->add_option("--cells-per-cube", fit.cells_per_cube, "Subdivision per axis")->capture_default_str()->check(CLI::PositiveNumber);
  s_fit->add_option("--max-cubes", fit.max_cubes, "Evenly spaced subset of cubes (0 = all)")->capture_default_str();
  s_fit->add_option("--out", fit.out, "Polynomial JSON output")->required();

  VerifyArgs ver;
  auto* s_ver = app.add_subcommand("verify-cut", "Check which cubes a polynomial cuts at scale r");
  s_ver->add_option("--poly", ver.poly, "Polynomial JSON")->required();
  s_ver->add_option("--config", ver.config, "Config JSON")->required();
  s_ver->add_option("--r", ver.r, "Scale r in (0, 1/2)")->required();
  s_ver->add_option("--seed", ver.seed, "RNG seed")->capture_default_str();
  s_ver->add_option("--sample", ver.sample, "Cubes checked (0 = all)")->capture_default_str();
  s_ver->add_option("--balls", ver.balls, "Ball budget per cube")->capture_default_str();
  s_ver->add_option("--samples", ver.samples, "Points per ball (>= 1000)")->capture_default_str();
  s_ver->add_flag("--full", ver.full, "Test every ball instead of stopping at the first failure");
  s_ver->add_option("--report", ver.report, "CSV report");

  VanishingArgs van;
  auto* s_van = app.add_subcommand("vanishing", "Shadow classification of segments along a tube");
  s_van->add_option("--poly", van.poly, "Polynomial JSON")->required();
  s_van->add_option("--config", van.config, "Config JSON")->required();
  s_van->add_option("--tube-index", van.tube, "Tube")->required();
  s_van->add_option("--r", van.r, "Scale r")->required();
  s_van->add_option("--seed", van.seed, "RNG seed")->capture_default_str();
  s_van->add_option("--lines", van.lines, "Lines per segment")->capture_default_str();
  s_van->add_option("--gap", van.gap, "Minimum height gap between marked cubes (>= 6)")
      ->capture_default_str()
      ->check(CLI::Validator(
          [](std::string& v) { return std::stod(v) >= 6.0 ? std::string() : std::string("must be at least 6"); },
          ">= 6"));
  s_van->add_option("--max-marked", van.max_marked, "Marked cubes (0 = all that fit)")->capture_default_str();
  s_van->add_option("--probes", van.probes, "Probe cubes for the contagion check (0 = skip)")->capture_default_str();
  s_van->add_option("--report", van.report, "CSV report");

  CroftonArgs cro;
  auto* s_cro = app.add_subcommand("crofton", "Area by random lines; planar slices");
  s_cro->add_option("--poly", cro.poly, "Polynomial JSON")->required();
  s_cro->add_option("--ball", cro.ball, "cx,cy,cz,R")->delimiter(',');
  s_cro->add_option("--lines", cro.lines, "Random lines")->capture_default_str();
  s_cro->add_option("--seed", cro.seed, "RNG seed")->capture_default_str();
  s_cro->add_option("--cube-side", cro.cube_side, "Also check area <= D S^2 for the cube of this side at the ball center");
  s_cro->add_option("--slice", cro.slice, "a,b of the plane x1 + a x2 = b")->delimiter(',');
  s_cro->add_option("--window", cro.window, "s0,s1,z0,z1 of the slice window")->delimiter(',');
  s_cro->add_option("--cell", cro.cell, "Slice grid cell")->capture_default_str();
  s_cro->add_option("--slice-out", cro.slice_out, "CSV of slice polylines");

  SurfArgs srf;
  auto* s_srf = app.add_subcommand("surf", "Frame, second fundamental form and detectors at a point of Z(P)");
  s_srf->add_option("--poly", srf.poly, "Polynomial JSON")->required();
  s_srf->add_option("--at", srf.at, "x,y,z")->required()->delimiter(',');
  s_srf->add_flag("--project", srf.project, "Newton-project the point onto Z(P) first");
  s_srf->add_option("--w", srf.w, "Direction w for the detectors (default e3)")->delimiter(',');
  s_srf->add_option("--H", srf.H, "Threshold H for A(H)")->capture_default_str();
  s_srf->add_option("--report", srf.report, "JSON report");

  DegredArgs deg;
  auto* s_deg = app.add_subcommand("degred", "Randomized degree reduction (tubes) or the lines mode");
  s_deg->add_option("--config", deg.config, "Config JSON");
  s_deg->add_option("--k", deg.k, "K")->capture_default_str();
  s_deg->add_option("--r", deg.r, "Verification scale r")->capture_default_str();
  s_deg->add_option("--seed", deg.seed, "RNG seed")->capture_default_str();
  s_deg->add_option("--verify-sample", deg.verify_sample, "Cubes verified")->capture_default_str();
  s_deg->add_option("--balls", deg.balls, "Ball budget per cube")->capture_default_str();
  s_deg->add_option("--samples", deg.samples, "Points per ball")->capture_default_str();
  s_deg->add_option("--cells-per-cube", deg.cells_per_cube, "Subdivision per axis")->capture_default_str();
  s_deg->add_flag("--full", deg.full, "Test every ball instead of stopping at the first failure");
  s_deg->add_option("--lines", deg.lines, "Lines JSON: run the lines mode instead");
  s_deg->add_option("--degree", deg.degree, "Lines mode: target degree")->capture_default_str();
  s_deg->add_option("--points-per-line", deg.points_per_line, "Lines mode: points per line (default 2D + 1)");
  s_deg->add_option("--report", deg.report, "JSON report");

  GrainArgs pla, gra;
  auto add_grain = [&](CLI::App* s, GrainArgs& ga) {
    s->add_option("--config", ga.config, "Config JSON")->required();
    s->add_option("--poly", ga.poly, "Polynomial JSON")->required();
    s->add_option("--seed", ga.seed, "RNG seed")->capture_default_str();
    s->add_option("--samples-per-cube", ga.samples_per_cube, "Surface samples in Q+")->capture_default_str();
    s->add_option("--epsilon", ga.epsilon, "Exceptional fraction epsilon")->capture_default_str();
    s->add_option("--max-incidences", ga.max_incidences, "Strided cap on (Q, T) pairs (0 = all)")->capture_default_str();
    s->add_option("--q-plus", ga.q_plus, "Side of Q+")->capture_default_str();
    s->add_option("--report", ga.report, "CSV report");
  };
  auto* s_pla = app.add_subcommand("planiness", "Angles between tube directions and pi(Q)");
  add_grain(s_pla, pla);
  s_pla->add_option("--c", pla.c, "Threshold c N^-sigma")->capture_default_str();
  auto* s_gra = app.add_subcommand("graininess", "Angles between pi(Q) and pi(Q') along tubes");
  add_grain(s_gra, gra);
  s_gra->add_option("--k", gra.k, "K: distance K^-1 N^sigma, threshold K N^-sigma")->capture_default_str();

  CensusArgs cen;
  auto* s_cen = app.add_subcommand("census", "Fraction of surface points with |A| > H per cube");
  s_cen->add_option("--poly", cen.poly, "Polynomial JSON")->required();
  s_cen->add_option("--config", cen.config, "Config JSON")->required();
  s_cen->add_option("--H", cen.H, "Threshold H")->required();
  s_cen->add_option("--samples", cen.samples, "Surface samples per cube")->capture_default_str();
  s_cen->add_option("--max-cubes", cen.max_cubes, "Evenly spaced subset of cubes (0 = all)")->capture_default_str();
  s_cen->add_option("--seed", cen.seed, "RNG seed")->capture_default_str();
  s_cen->add_option("--report", cen.report, "CSV report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }
  if (g.threads > 0) set_thread_count(g.threads);

  try {
    if (s_gen->parsed()) return run_generate(gen, g);
    if (s_chk->parsed()) return run_check(chk, g);
    if (s_fit->parsed()) return run_fit(fit, g);
    if (s_ver->parsed()) return run_verify(ver, g);
    if (s_van->parsed()) return run_vanishing(van, g);
    if (s_cro->parsed()) return run_crofton(cro, g);
    if (s_srf->parsed()) return run_surf(srf, g);
    if (s_deg->parsed()) return run_degred(deg, g);
    if (s_pla->parsed()) return run_grain(pla, false, g);
    if (s_gra->parsed()) return run_grain(gra, true, g);
    if (s_cen->parsed()) return run_census(cen, g);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitPrecondition;
  }
  return kExitUsage;
}
