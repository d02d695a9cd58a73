#include "kakeya/io.hpp"
#include "kakeya/grainy.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

using namespace kakeya;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "kakeya-io-test";
  fs::create_directories(d);
  return d / name;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + KAKEYA_LAB_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Io, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Io, PolyRoundTrip) {
  Rng rng(3);
  Poly3 P(5);
  for (auto& c : P.coeffs()) c = rng.uniform(-1, 1);
  const json j = json::parse(to_json(P).dump());
  EXPECT_EQ(poly_from_json(j).coeffs(), P.coeffs());
  EXPECT_EQ(j["schema"], kPolySchema);

  ProductPoly3 Q = ProductPoly3::parallel_planes(Vec3::UnitX(), 0.5, -2, 2);
  AnyPoly back = any_poly_from_json(json::parse(to_json(Q).dump()));
  ASSERT_TRUE(std::holds_alternative<ProductPoly3>(back));
  const auto& f = std::get<ProductPoly3>(back).factors();
  ASSERT_EQ(f.size(), Q.factors().size());
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(f[i].coeffs(), Q.factors()[i].coeffs());
}

TEST(Io, ConfigRoundTrip) {
  const TubeConfig cfg = slab_config(8, 0.5, 8, 0, 2);
  const TubeConfig back = config_from_json(json::parse(to_json(cfg).dump()));
  ASSERT_EQ(back.cubes.size(), cfg.cubes.size());
  ASSERT_EQ(back.tubes.size(), cfg.tubes.size());
  EXPECT_EQ(back.params.N, cfg.params.N);
  EXPECT_EQ(back.params.rho, cfg.params.rho);
  for (std::size_t i = 0; i < cfg.cubes.size(); ++i) EXPECT_EQ(back.cubes[i].center, cfg.cubes[i].center);
  for (std::size_t i = 0; i < cfg.tubes.size(); ++i) {
    EXPECT_EQ(back.tubes[i].base, cfg.tubes[i].base);
    EXPECT_EQ(back.tubes[i].dir, cfg.tubes[i].dir);
    EXPECT_EQ(back.tubes[i].length, cfg.tubes[i].length);
  }
}

TEST(Io, MalformedArtifactsAreIoErrors) {
  EXPECT_THROW(poly_from_json(json{{"schema", "kakeya-lab/config@1"}}), IoError);
  EXPECT_THROW(poly_from_json(json{{"schema", kPolySchema}, {"degree", 2}, {"coeffs", {1, 2}}}), IoError);
  EXPECT_THROW(poly_from_json(json{{"schema", kPolySchema}, {"degree", "two"}, {"coeffs", {1}}}), IoError);
  json cfg = to_json(slab_config(8, 0.5, 8, 0, 2));
  cfg["tubes"][0]["dir"] = json::array({1, 1, 0});  // not a unit vector
  EXPECT_THROW(config_from_json(cfg), IoError);
  EXPECT_THROW(parse_json("{", "x"), IoError);
  EXPECT_THROW(read_file(scratch("missing.json").string()), IoError);
}

TEST(Io, CsvFormatting) {
  EXPECT_EQ(CsvWriter::format(0.1), "0.1");
  EXPECT_EQ(CsvWriter::format(1.0 / 3), "0.3333333333333333");
  EXPECT_EQ(std::stod(CsvWriter::format(0.1 + 0.2)), 0.1 + 0.2);
  EXPECT_EQ(CsvWriter::format(2.0), "2");
  EXPECT_EQ(CsvWriter::format(true), "1");
  EXPECT_EQ(CsvWriter::format(std::size_t{42}), "42");
  RunManifest m;
  m.subcommand = "demo";
  m.seed = 9;
  m.add_input("in.json", "abc");
  m.timings["fit"] = 1.5;
  CsvWriter w(m, {"a", "b"});
  w.values(1, 0.25);
  const std::string s = w.str();
  EXPECT_EQ(s.rfind("# manifest: {", 0), 0u);
  EXPECT_EQ(s.find("timings"), std::string::npos);
  EXPECT_NE(s.find(fnv1a_hex("abc")), std::string::npos);
  EXPECT_NE(s.find("\na,b\n1,0.25\n"), std::string::npos);
  m.embed_timings = true;
  EXPECT_TRUE(m.to_json().contains("timings"));
}

TEST(Cli, ExitCodes) {
  const fs::path cfg = scratch("slab.json"), poly = scratch("slab_poly.json");
  EXPECT_EQ(run_cli("generate --kind slab --n 8 --sigma 0.5 --out " + cfg.string() + " --poly-out " + poly.string()), 0);
  EXPECT_EQ(read_config(cfg.string()).cubes.size(), slab_config(8, 0.5, 8, 0, 0).cubes.size());
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("no-such-command"), 64);
  EXPECT_EQ(run_cli("verify-cut --config " + cfg.string() + " --r 0.2"), 64);  // missing --poly
  EXPECT_EQ(run_cli("generate --kind cone --out x.json"), 64);
  EXPECT_EQ(run_cli("check --config " + scratch("missing.json").string()), 2);
  EXPECT_EQ(run_cli("check --config " + poly.string()), 2);  // wrong schema
  EXPECT_EQ(run_cli("fit --config " + cfg.string() + " --degree 1 --out " + scratch("f.json").string()), 1);
  EXPECT_EQ(run_cli("verify-cut --poly " + poly.string() + " --config " + cfg.string() + " --r 0.7"), 1);
}
