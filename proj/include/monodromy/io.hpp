#pragma once

// Run configuration (strict JSON schema) and JSON/CSV serialization.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <nlohmann/json.hpp>

#include "monodromy/bifurcation.hpp"
#include "monodromy/chern.hpp"
#include "monodromy/fixed_points.hpp"
#include "monodromy/pipeline.hpp"
#include "monodromy/system.hpp"

namespace monodromy {

using nlohmann::json;

struct BifurcationSettings {
  std::optional<PlaneBox> box;  // derived from the value ranges when absent
  int nx = 80;
  int ny = 60;
  double margin = 1e-3;
};

struct DHSettings {
  std::optional<std::array<double, 3>> grid;  // lo, hi, step
  long samples = 1000000;
};

struct RunConfig {
  SystemModel system;
  std::uint64_t seed = 1;
  std::string output = ".";
  std::vector<LoopSpec> loops;
  double regularity_margin = kDefaultRegularityMargin;
  BifurcationSettings bifurcation;
  DHSettings dh;

  const LoopSpec& loop(const std::string& name) const {
    for (const auto& l : loops)
      if (l.name == name) return l;
    throw ConfigError("no loop named '" + name + "' in config");
  }
};

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; });
    if (!ok) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

inline double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + ": must be finite");
  return v;
}

inline long get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<long>();
}

inline std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected a string");
  return j.get<std::string>();
}

inline PlanePoint get_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": expected [j, h]");
  return {get_number(j[0], where), get_number(j[1], where)};
}

inline Expression get_expression(const json& j, int dim, const std::string& where) {
  try {
    return parse_expression(get_string(j, where), dim);
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

inline SystemModel parse_custom_system(const json& j) {
  check_keys(j, "system", {"name", "dim", "hamiltonian", "momentum", "bivector", "constraints", "bounds"});
  for (const char* k : {"dim", "hamiltonian", "momentum", "bivector"})
    if (!j.contains(k)) throw ConfigError(std::string("system: missing '") + k + "'");
  SystemModel s;
  s.name = j.contains("name") ? get_string(j["name"], "system.name") : "custom";
  long dim = get_int(j["dim"], "system.dim");
  if (dim < 4 || dim > 64) throw ConfigError("system.dim: must be between 4 and 64");
  s.dim = static_cast<int>(dim);
  s.H = get_expression(j["hamiltonian"], s.dim, "system.hamiltonian");
  s.J = get_expression(j["momentum"], s.dim, "system.momentum");
  if (!j["bivector"].is_object()) throw ConfigError("system.bivector: expected an object");
  for (const auto& [key, val] : j["bivector"].items()) {
    std::string where = "system.bivector[\"" + key + "\"]";
    int a = 0, b = 0;
    char comma = 0;
    std::istringstream is(key);
    if (!(is >> a >> comma >> b) || comma != ',' || !is.eof())
      throw ConfigError(where + ": key must be \"i,j\" with 1-based indices");
    if (a < 1 || b <= a || b > s.dim) throw ConfigError(where + ": need 1 <= i < j <= dim");
    s.bivector.push_back({a - 1, b - 1, get_expression(val, s.dim, where)});
  }
  if (j.contains("constraints")) {
    if (!j["constraints"].is_array()) throw ConfigError("system.constraints: expected an array");
    for (std::size_t k = 0; k < j["constraints"].size(); ++k)
      s.constraints.push_back(
          get_expression(j["constraints"][k], s.dim, "system.constraints[" + std::to_string(k) + "]"));
  }
  if (j.contains("bounds")) {
    if (!j["bounds"].is_array()) throw ConfigError("system.bounds: expected an array");
    for (const auto& b : j["bounds"]) {
      if (!b.is_array() || b.size() != 2) throw ConfigError("system.bounds: expected [lo, hi] pairs");
      s.bounds.emplace_back(get_number(b[0], "system.bounds"), get_number(b[1], "system.bounds"));
    }
  }
  validate_system(s);
  return s;
}

inline LoopSpec parse_loop(const json& j, std::size_t index) {
  std::string where = "loops[" + std::to_string(index) + "]";
  if (!j.is_object() || !j.contains("kind")) throw ConfigError(where + ": missing 'kind'");
  std::string kind = get_string(j["kind"], where + ".kind");
  LoopSpec l;
  if (kind == "circle") {
    check_keys(j, where, {"name", "kind", "center", "radius", "direction", "n_samples"});
    if (!j.contains("center") || !j.contains("radius"))
      throw ConfigError(where + ": circle needs 'center' and 'radius'");
    l.kind = LoopKind::circle;
    l.center = get_point(j["center"], where + ".center");
    l.radius = get_number(j["radius"], where + ".radius");
    if (j.contains("direction")) l.direction = static_cast<int>(get_int(j["direction"], where + ".direction"));
  } else if (kind == "polyline") {
    check_keys(j, where, {"name", "kind", "vertices", "n_samples"});
    if (!j.contains("vertices") || !j["vertices"].is_array())
      throw ConfigError(where + ": polyline needs a 'vertices' array");
    l.kind = LoopKind::polyline;
    for (const auto& v : j["vertices"]) l.vertices.push_back(get_point(v, where + ".vertices"));
  } else {
    throw ConfigError(where + ".kind: expected \"circle\" or \"polyline\"");
  }
  if (!j.contains("name")) throw ConfigError(where + ": missing 'name'");
  l.name = get_string(j["name"], where + ".name");
  if (l.name.empty()) throw ConfigError(where + ".name: must not be empty");
  if (j.contains("n_samples")) l.n_samples = static_cast<int>(get_int(j["n_samples"], where + ".n_samples"));
  validate_loop(l);
  return l;
}

}  // namespace detail

inline RunConfig parse_run_config(const json& j) {
  detail::check_keys(j, "config", {"system", "tolerances", "seed", "output", "orientation", "loops",
                                   "regularity_margin", "bifurcation", "dh"});
  if (!j.contains("system")) throw ConfigError("config: missing 'system'");
  RunConfig c;
  const json& s = j["system"];
  if (s.is_string()) {
    c.system = builtin_system(s.get<std::string>());
  } else {
    c.system = detail::parse_custom_system(s);
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    detail::check_keys(t, "tolerances", {"rel", "abs", "constraint", "feasibility"});
    auto set = [&](const char* k, double& dst) {
      if (!t.contains(k)) return;
      double v = detail::get_number(t[k], std::string("tolerances.") + k);
      if (!(v > 0)) throw ConfigError(std::string("tolerances.") + k + ": must be positive");
      dst = v;
    };
    set("rel", c.system.tol.rel);
    set("abs", c.system.tol.abs);
    set("constraint", c.system.tol.constraint);
    set("feasibility", c.system.tol.feasibility);
  }
  if (j.contains("seed")) {
    long seed = detail::get_int(j["seed"], "seed");
    if (seed < 0) throw ConfigError("seed: must be non-negative");
    c.seed = static_cast<std::uint64_t>(seed);
  }
  if (j.contains("output")) c.output = detail::get_string(j["output"], "output");
  if (j.contains("orientation")) {
    long o = detail::get_int(j["orientation"], "orientation");
    if (o != 1 && o != -1) throw ConfigError("orientation: must be +1 or -1");
    c.system.orientation = static_cast<int>(o);
  }
  if (j.contains("regularity_margin")) {
    c.regularity_margin = detail::get_number(j["regularity_margin"], "regularity_margin");
    if (!(c.regularity_margin > 0)) throw ConfigError("regularity_margin: must be positive");
  }
  if (j.contains("loops")) {
    if (!j["loops"].is_array()) throw ConfigError("loops: expected an array");
    std::set<std::string> names;
    for (std::size_t k = 0; k < j["loops"].size(); ++k) {
      LoopSpec l = detail::parse_loop(j["loops"][k], k);
      if (!names.insert(l.name).second) throw ConfigError("loops: duplicate name '" + l.name + "'");
      c.loops.push_back(std::move(l));
    }
  }
  if (j.contains("bifurcation")) {
    const json& b = j["bifurcation"];
    detail::check_keys(b, "bifurcation", {"box", "grid", "margin"});
    if (b.contains("box")) {
      const json& box = b["box"];
      if (!box.is_array() || box.size() != 4) throw ConfigError("bifurcation.box: expected [j_lo, j_hi, h_lo, h_hi]");
      PlaneBox pb{detail::get_number(box[0], "bifurcation.box"), detail::get_number(box[1], "bifurcation.box"),
                  detail::get_number(box[2], "bifurcation.box"), detail::get_number(box[3], "bifurcation.box")};
      if (!(pb.j_lo < pb.j_hi) || !(pb.h_lo < pb.h_hi)) throw ConfigError("bifurcation.box: empty box");
      c.bifurcation.box = pb;
    }
    if (b.contains("grid")) {
      const json& g = b["grid"];
      if (!g.is_array() || g.size() != 2) throw ConfigError("bifurcation.grid: expected [nx, ny]");
      c.bifurcation.nx = static_cast<int>(detail::get_int(g[0], "bifurcation.grid"));
      c.bifurcation.ny = static_cast<int>(detail::get_int(g[1], "bifurcation.grid"));
      if (c.bifurcation.nx < 1 || c.bifurcation.ny < 1) throw ConfigError("bifurcation.grid: must be positive");
    }
    if (b.contains("margin")) c.bifurcation.margin = detail::get_number(b["margin"], "bifurcation.margin");
  }
  if (j.contains("dh")) {
    const json& d = j["dh"];
    detail::check_keys(d, "dh", {"grid", "samples"});
    if (d.contains("grid")) {
      const json& g = d["grid"];
      if (!g.is_array() || g.size() != 3) throw ConfigError("dh.grid: expected [lo, hi, step]");
      c.dh.grid = {detail::get_number(g[0], "dh.grid"), detail::get_number(g[1], "dh.grid"),
                   detail::get_number(g[2], "dh.grid")};
      if (!((*c.dh.grid)[0] < (*c.dh.grid)[1]) || !((*c.dh.grid)[2] > 0))
        throw ConfigError("dh.grid: need lo < hi and step > 0");
    }
    if (d.contains("samples")) c.dh.samples = detail::get_int(d["samples"], "dh.samples");
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, false);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

// ---------------------------------------------------------------------------
// Serialization

inline json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json spectrum_json(const Spectrum& s) {
  json out = json::array();
  for (const auto& z : s) out.push_back({z.real(), z.imag()});
  return out;
}

inline json to_json(const FixedPointRecord& p) {
  return {{"id", p.id},
          {"position", vec_json(p.position)},
          {"H", p.value_H},
          {"J", p.value_J},
          {"type", to_string(p.sing_type)},
          {"weights", {p.weights.first, p.weights.second}},
          {"sign", p.sign},
          {"morse_index", p.morse_index},
          {"nondegenerate", p.nondegenerate},
          {"morse_index_J", p.morse_index_J},
          {"nondegenerate_J", p.nondegenerate_J},
          {"eigen_H", spectrum_json(p.eigen_H)},
          {"eigen_J", spectrum_json(p.eigen_J)}};
}

inline json to_json(const ChernLedger& l) {
  json entries = json::array();
  int c = 0;
  for (const auto& e : l.entries) {
    entries.push_back({{"value", e.value}, {"jump", e.jump}, {"points", e.points},
                       {"chern_below", c}, {"chern_above", c + e.jump}});
    c += e.jump;
  }
  return {{"integral", to_string(l.integral)}, {"domain", {l.domain_lo, l.domain_hi}}, {"entries", entries}};
}

inline json to_json(const MonodromyResult& r) {
  return {{"m", r.m},
          {"matrix", {{r.matrix[0][0], r.matrix[0][1]}, {r.matrix[1][0], r.matrix[1][1]}}},
          {"method", to_string(r.method)},
          {"basis_note", r.basis_note},
          {"diagnostics", r.diagnostics}};
}

inline json to_json(const RegularityReport& r) {
  json issues = json::array();
  for (const auto& i : r.issues) issues.push_back({{"s", i.s}, {"j", i.f.j}, {"h", i.f.h}, {"reason", i.reason}});
  return {{"pass", r.pass}, {"min_distance", r.min_distance}, {"issues", issues}};
}

inline json to_json(const LoopSpec& l) {
  json j = {{"name", l.name}, {"n_samples", l.n_samples}};
  if (l.kind == LoopKind::circle) {
    j["kind"] = "circle";
    j["center"] = {l.center.j, l.center.h};
    j["radius"] = l.radius;
    j["direction"] = l.direction;
  } else {
    j["kind"] = "polyline";
    json v = json::array();
    for (const auto& p : l.vertices) v.push_back({p.j, p.h});
    j["vertices"] = v;
  }
  return j;
}

inline json to_json(const DHProfile& p) {
  json kinks = json::array();
  for (const auto& k : p.kinks)
    kinks.push_back({{"j", k.j}, {"slope_change", k.slope_change}, {"stderr", k.stderr_},
                     {"normalized", k.normalized}, {"normalized_stderr", k.normalized_stderr},
                     {"ledger_jump", k.ledger_jump}});
  return {{"kappa", p.kappa}, {"fit_residual", p.fit_residual}, {"range", p.range},
          {"samples", p.samples}, {"kinks", kinks}};
}

/// Ledger as CSV: value,jump,chern_below,chern_above.
inline void write_ledger_csv(std::ostream& os, const ChernLedger& l) {
  os << "value,jump,chern_below,chern_above\n";
  int c = 0;
  os.precision(17);
  for (const auto& e : l.entries) {
    os << e.value << ',' << e.jump << ',' << c << ',' << c + e.jump << '\n';
    c += e.jump;
  }
}

/// Writes through a temporary file in the same directory, then renames.
inline void write_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fill) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    fill(out);
    out.flush();
    if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_atomic(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

}  // namespace monodromy
