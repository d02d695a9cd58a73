#pragma once

// JSON artifacts (configurations, polynomials, reports), CSV reports with an
// embedded run manifest, and FNV-1a digests of input files.
//
// Every JSON artifact carries a "schema" string "kakeya-lab/<kind>@<version>".

#include "kakeya/core.hpp"
#include "kakeya/field.hpp"
#include "kakeya/geometry.hpp"
#include "kakeya/poly3.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace kakeya {

using json = nlohmann::json;

inline constexpr const char* kConfigSchema = "kakeya-lab/config@1";
inline constexpr const char* kPolySchema = "kakeya-lab/poly3@1";
inline constexpr const char* kProductSchema = "kakeya-lab/poly3-product@1";
inline constexpr const char* kLinesSchema = "kakeya-lab/lines@1";

#ifndef KAKEYA_LAB_VERSION
#define KAKEYA_LAB_VERSION "0.0.0"
#endif
inline constexpr const char* kToolVersion = KAKEYA_LAB_VERSION;

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path);
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("error while writing " + path);
}

/// 64-bit FNV-1a, as 16 lowercase hex digits.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 15];
  return s;
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(what + ": " + e.what());
  }
}

inline json read_json(const std::string& path) { return parse_json(read_file(path), path); }

inline void write_json(const std::string& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

namespace detail {

inline void expect_schema(const json& j, const std::string& schema, const std::string& what) {
  if (!j.is_object() || !j.contains("schema") || j["schema"] != schema)
    throw IoError(what + ": expected schema \"" + schema + "\"");
}

/// Wraps the json library's type errors so that malformed files are I/O errors.
template <class Fn>
auto guarded(const std::string& what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw IoError(what + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Values

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw IoError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// ---------------------------------------------------------------------------
// Polynomials

inline json to_json(const Poly3& P) {
  return json{{"schema", kPolySchema}, {"degree", P.degree_bound()}, {"coeffs", P.coeffs()}};
}

inline Poly3 poly_from_json(const json& j, const std::string& what = "polynomial") {
  detail::expect_schema(j, kPolySchema, what);
  return detail::guarded(what, [&] {
    const int D = j.at("degree").get<int>();
    if (D < 0) throw IoError(what + ": negative degree");
    auto c = j.at("coeffs").get<std::vector<double>>();
    if (c.size() != dim_poly_space(D))
      throw IoError(what + ": " + std::to_string(c.size()) + " coefficients for degree " + std::to_string(D) +
                    " (expected " + std::to_string(dim_poly_space(D)) + ")");
    Poly3 P(D);
    P.coeffs() = std::move(c);
    return P;
  });
}

inline json to_json(const ProductPoly3& P) {
  json f = json::array();
  for (const auto& g : P.factors()) f.push_back(to_json(g));
  return json{{"schema", kProductSchema}, {"factors", f}};
}

inline ProductPoly3 product_from_json(const json& j, const std::string& what = "product polynomial") {
  detail::expect_schema(j, kProductSchema, what);
  return detail::guarded(what, [&] {
    std::vector<Poly3> f;
    for (const auto& g : j.at("factors")) f.push_back(poly_from_json(g, what));
    if (f.empty()) throw IoError(what + ": no factors");
    return ProductPoly3(std::move(f));
  });
}

/// A polynomial artifact in either representation.
using AnyPoly = std::variant<Poly3, ProductPoly3>;

inline AnyPoly any_poly_from_json(const json& j, const std::string& what = "polynomial") {
  if (j.is_object() && j.contains("schema") && j["schema"] == kProductSchema) return product_from_json(j, what);
  return poly_from_json(j, what);
}

inline AnyPoly read_poly(const std::string& path) { return any_poly_from_json(read_json(path), path); }

inline json to_json(const AnyPoly& P) {
  return std::visit([](const auto& p) { return to_json(p); }, P);
}

// ---------------------------------------------------------------------------
// Configurations

inline json to_json(const TubeConfig& cfg) {
  json cubes = json::array(), tubes = json::array();
  double side = cfg.cubes.empty() ? 1.0 : cfg.cubes.front().side;
  bool uniform = true;
  for (const auto& c : cfg.cubes) uniform = uniform && c.side == side;
  for (const auto& c : cfg.cubes) {
    if (uniform)
      cubes.push_back(to_json(c.center));
    else
      cubes.push_back(json{{"center", to_json(c.center)}, {"side", c.side}});
  }
  for (const auto& t : cfg.tubes)
    tubes.push_back(json{{"base", to_json(t.base)}, {"dir", to_json(t.dir)}, {"radius", t.radius}, {"length", t.length}});
  json j{{"schema", kConfigSchema},
         {"params", {{"N", cfg.params.N}, {"sigma", cfg.params.sigma}, {"E", cfg.params.E}, {"rho", cfg.params.rho}}},
         {"cubes", cubes},
         {"tubes", tubes}};
  if (uniform) j["cube_side"] = side;
  return j;
}

inline TubeConfig config_from_json(const json& j, const std::string& what = "config") {
  detail::expect_schema(j, kConfigSchema, what);
  TubeConfig cfg = detail::guarded(what, [&] {
    TubeConfig c;
    const auto& p = j.at("params");
    c.params = {p.at("N").get<double>(), p.at("sigma").get<double>(), p.at("E").get<double>(),
                p.at("rho").get<double>()};
    const double side = j.value("cube_side", 1.0);
    for (const auto& q : j.at("cubes")) {
      if (q.is_array())
        c.cubes.push_back({vec3_from_json(q), side});
      else
        c.cubes.push_back({vec3_from_json(q.at("center")), q.at("side").get<double>()});
    }
    for (const auto& t : j.at("tubes")) {
      Tube T;
      T.base = vec3_from_json(t.at("base"));
      T.dir = vec3_from_json(t.at("dir"));
      T.radius = t.value("radius", 1.0);
      T.length = t.at("length").get<double>();
      c.tubes.push_back(T);
    }
    return c;
  });
  try {
    cfg.validate();
  } catch (const PreconditionError& e) {
    throw IoError(what + ": " + e.what());
  }
  return cfg;
}

inline TubeConfig read_config(const std::string& path) { return config_from_json(read_json(path), path); }

// ---------------------------------------------------------------------------
// Run manifest

/// Everything that determines a report: tool version, subcommand, resolved
/// parameters, seed and input digests. Wall-clock timings are kept apart
/// (they differ between otherwise identical runs) and are embedded only on
/// request.
struct RunManifest {
  std::string subcommand;
  json params = json::object();
  std::uint64_t seed = 0;
  json inputs = json::object();   // path -> FNV-1a digest
  json timings = json::object();  // stage -> seconds
  bool embed_timings = false;

  void add_input(const std::string& path, const std::string& contents) { inputs[path] = fnv1a_hex(contents); }

  json to_json() const {
    json j{{"schema", "kakeya-lab/manifest@1"}, {"tool_version", kToolVersion}, {"subcommand", subcommand},
           {"params", params},                  {"seed", seed},                 {"inputs", inputs}};
    if (embed_timings) j["timings"] = timings;
    return j;
  }
};

/// CSV text: a "# manifest: <compact json>" line, the header, then rows.
class CsvWriter {
 public:
  CsvWriter(const RunManifest& m, const std::vector<std::string>& header) {
    out_ << "# manifest: " << m.to_json().dump() << "\n";
    row(header);
  }

  template <class... Ts>
  void values(const Ts&... v) {
    bool first = true;
    ((out_ << (first ? "" : ",") << format(v), first = false), ...);
    out_ << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

  std::string str() const { return out_.str(); }
  void save(const std::string& path) const { write_file(path, out_.str()); }

  /// Shortest decimal that reads back to the same double.
  static std::string format(double x) {
    char buf[32];
    for (int prec = 1; prec <= 17; ++prec) {
      std::snprintf(buf, sizeof buf, "%.*g", prec, x);
      if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
  }
  static std::string format(bool b) { return b ? "1" : "0"; }
  static std::string format(const std::string& s) { return s; }
  static std::string format(const char* s) { return s; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string format(I i) {
    return std::to_string(i);
  }

 private:
  std::ostringstream out_;
};

}  // namespace kakeya
