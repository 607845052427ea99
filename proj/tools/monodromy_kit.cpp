// monodromy-kit: command-line front end.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <string>

#include <CLI11.hpp>

#include "monodromy/acceptance.hpp"
#include "monodromy/io.hpp"
#include "monodromy/monodromy.hpp"

namespace fs = std::filesystem;
using namespace monodromy;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSelftest = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitDisagree = 4;

constexpr const char* kFooter = R"(Outputs (written atomically into --out, else the config's "output"):
  analyze       fixed_points.json
  monodromy     monodromy_<loop>.json; rotation_<loop>.csv: s,j,h,T,theta_unwrapped
  chern         chern_<H|J>.json; chern_<H|J>.csv: value,jump,chern_below,chern_above
  bifurcation   bifurcation.json; bifurcation_cells.csv: j,h,tag;
                bifurcation_curves.csv: curve,j,h
  dh            dh_profile.json; dh_profile.csv: j,volume,stderr,fit

Exit codes: 0 ok, 1 selftest failure, 2 config error, 3 numerical failure,
4 monodromy methods disagree. MONODROMY_KIT_THREADS caps worker threads.)";

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string loop;
  std::string method = "all";
  std::optional<std::string> integral;
  std::string grid;
  std::optional<long> samples;
  std::optional<int> orientation;
};

struct Context {
  RunConfig cfg;
  fs::path out;
  std::uint64_t seed = 1;
};

Context load(const Flags& f) {
  if (f.config.empty()) throw ConfigError("--config is required");
  Context c{load_run_config(f.config), {}, 1};
  c.seed = f.seed.value_or(c.cfg.seed);
  c.out = f.out.empty() ? fs::path(c.cfg.output) : fs::path(f.out);
  if (f.orientation) c.cfg.system.orientation = *f.orientation;
  return c;
}

std::vector<FixedPointRecord> fixed_points(const Context& c) {
  FixedPointOptions opt;
  opt.seed = c.seed;
  return find_fixed_points(c.cfg.system, opt);
}

std::optional<Integral> integral_flag(const Flags& f) {
  if (!f.integral) return std::nullopt;
  return *f.integral == "H" ? Integral::H : Integral::J;
}

json header(const Context& c) {
  return {{"system", c.cfg.system.name}, {"seed", c.seed}, {"orientation", c.cfg.system.orientation}};
}

int cmd_analyze(const Flags& f) {
  Context c = load(f);
  auto fps = fixed_points(c);
  std::stable_sort(fps.begin(), fps.end(),
                   [](const auto& a, const auto& b) { return a.value_J < b.value_J; });
  json j = header(c);
  j["fixed_points"] = json::array();
  for (const auto& p : fps) {
    j["fixed_points"].push_back(to_json(p));
    std::printf("fixed point %d: (j, h) = (%.10g, %.10g) %s weights (%d,%d) sign %+d morse %d\n", p.id,
                p.value_J, p.value_H, to_string(p.sing_type), p.weights.first, p.weights.second, p.sign,
                p.morse_index);
  }
  write_json_file(c.out / "fixed_points.json", j);
  return kExitOk;
}

int cmd_monodromy(const Flags& f) {
  Context c = load(f);
  if (f.loop.empty()) throw ConfigError("--loop is required");
  const LoopSpec& loop = c.cfg.loop(f.loop);
  std::vector<Method> methods;
  if (f.method == "takens" || f.method == "all") methods.push_back(Method::takens_levels);
  if (f.method == "count" || f.method == "all") methods.push_back(Method::disk_count);
  if (f.method == "rotation" || f.method == "all") methods.push_back(Method::rotation);
  auto fps = fixed_points(c);
  MonodromyRun run = run_monodromy(c.cfg.system, fps, loop, methods, c.seed, c.cfg.regularity_margin,
                                   integral_flag(f));
  json j = header(c);
  j["loop"] = to_json(loop);
  j["regularity"] = to_json(run.regularity);
  j["results"] = json::array();
  for (const auto& r : run.results) {
    j["results"].push_back(to_json(r));
    std::printf("%-14s m = %d  matrix [[%d,%d],[%d,%d]]\n", to_string(r.method), r.m, r.matrix[0][0],
                r.matrix[0][1], r.matrix[1][0], r.matrix[1][1]);
  }
  j["agree"] = run.agree;
  if (run.agree) j["m"] = run.results.front().m;
  write_json_file(c.out / ("monodromy_" + loop.name + ".json"), j);
  if (run.trace)
    write_atomic(c.out / ("rotation_" + loop.name + ".csv"),
                 [&](std::ostream& os) { write_trace_csv(os, *run.trace); });
  if (!run.agree) {
    std::fprintf(stderr, "methods disagree on loop '%s':\n", loop.name.c_str());
    for (const auto& r : run.results)
      std::fprintf(stderr, "  %s m=%d diagnostics=%s\n", to_string(r.method), r.m, r.diagnostics.dump().c_str());
    return kExitDisagree;
  }
  std::printf("m = %d\n", run.results.front().m);
  return kExitOk;
}

int cmd_chern(const Flags& f) {
  Context c = load(f);
  Integral which = integral_flag(f).value_or(Integral::H);
  auto ledger = build_ledger(c.cfg.system, which, fixed_points(c));
  json j = header(c);
  j["ledger"] = to_json(ledger);
  std::string stem = std::string("chern_") + to_string(which);
  write_json_file(c.out / (stem + ".json"), j);
  write_atomic(c.out / (stem + ".csv"), [&](std::ostream& os) { write_ledger_csv(os, ledger); });
  write_ledger_csv(std::cout, ledger);
  return kExitOk;
}

std::pair<int, int> parse_grid(const std::string& g, int nx, int ny) {
  if (g.empty()) return {nx, ny};
  std::smatch m;
  if (!std::regex_match(g, m, std::regex(R"((\d+)x(\d+))")))
    throw ConfigError("--grid must look like NXxNY, got '" + g + "'");
  int a = std::stoi(m[1]), b = std::stoi(m[2]);
  if (a < 1 || b < 1) throw ConfigError("--grid must be positive");
  return {a, b};
}

int cmd_bifurcation(const Flags& f) {
  Context c = load(f);
  const auto& sys = c.cfg.system;
  auto fps = fixed_points(c);
  auto [nx, ny] = parse_grid(f.grid, c.cfg.bifurcation.nx, c.cfg.bifurcation.ny);
  PlaneBox box;
  if (c.cfg.bifurcation.box) {
    box = *c.cfg.bifurcation.box;
  } else {
    auto jr = value_range(sys, sys.J, 8, c.seed);
    auto hr = value_range(sys, sys.H, 8, c.seed);
    if (!std::isfinite(jr.first + jr.second + hr.first + hr.second))
      throw ConfigError("bifurcation: the value range is unbounded; set bifurcation.box in the config");
    double pj = 0.05 * (jr.second - jr.first), ph = 0.05 * (hr.second - hr.first);
    box = {jr.first - pj, jr.second + pj, hr.first - ph, hr.second + ph};
  }
  auto d = sample_bifurcation_diagram(sys, fps, box, nx, ny, c.seed, c.cfg.bifurcation.margin);
  json j = header(c);
  j["box"] = {box.j_lo, box.j_hi, box.h_lo, box.h_hi};
  j["grid"] = {nx, ny};
  json fv = json::array();
  for (const auto& p : d.fixed_point_values) fv.push_back({p.j, p.h});
  j["fixed_point_values"] = fv;
  std::map<std::string, int> counts;
  for (const auto& cell : d.cells) ++counts[to_string(cell.tag)];
  j["counts"] = counts;
  write_json_file(c.out / "bifurcation.json", j);
  write_atomic(c.out / "bifurcation_cells.csv", [&](std::ostream& os) { write_diagram_csv(os, d); });
  write_atomic(c.out / "bifurcation_curves.csv",
               [&](std::ostream& os) { write_boundary_csv(os, d.boundary_curves); });
  for (const auto& [tag, n] : counts) std::printf("%s: %d cells\n", tag.c_str(), n);
  return kExitOk;
}

int cmd_dh(const Flags& f) {
  Context c = load(f);
  const auto& sys = c.cfg.system;
  if (!is_compact(sys)) throw NumericError("dh_profile", "needs a compact product of spheres");
  auto ledger = build_ledger(sys, Integral::J, fixed_points(c));
  std::vector<double> grid;
  if (c.cfg.dh.grid) {
    const auto& g = *c.cfg.dh.grid;
    grid = dh_grid(g[0], g[1], g[2]);
  } else {
    if (!std::isfinite(ledger.domain_lo) || !std::isfinite(ledger.domain_hi))
      throw ConfigError("dh: the range of J is unbounded; set dh.grid in the config");
    grid = dh_grid(ledger.domain_lo, ledger.domain_hi, (ledger.domain_hi - ledger.domain_lo) / 120);
  }
  long samples = f.samples.value_or(c.cfg.dh.samples);
  auto prof = dh_profile(sys, grid, samples, c.seed, ledger);
  json j = header(c);
  j["profile"] = to_json(prof);
  write_json_file(c.out / "dh_profile.json", j);
  write_atomic(c.out / "dh_profile.csv", [&](std::ostream& os) { write_dh_csv(os, prof); });
  std::printf("fit residual %.4f of range, kappa %.6g\n", prof.fit_residual, prof.kappa);
  for (const auto& k : prof.kinks)
    std::printf("kink at j = %g: normalized %.4f +- %.4f (ledger %+d)\n", k.j, k.normalized, k.normalized_stderr,
                k.ledger_jump);
  return kExitOk;
}

int cmd_selftest(const Flags& f) {
  AcceptanceOptions opt;
  opt.orientation = f.orientation;
  if (f.seed) opt.seed = *f.seed;
  if (f.samples) opt.dh_samples = *f.samples;
  AcceptanceSuite suite(opt);
  auto results = suite.run(std::cout);
  for (const auto& r : results)
    if (!r.pass) {
      std::cout << "selftest FAILED at criterion " << r.id << ": " << r.name << std::endl;
      return kExitSelftest;
    }
  std::cout << "selftest passed" << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hamiltonian monodromy of integrable systems with a circle action", "monodromy-kit"};
  app.footer(kFooter);
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "run configuration (JSON)");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--seed", f.seed, "random seed");
    sub->add_option("--orientation", f.orientation)->check(CLI::IsMember({-1, 1}))->group("");
  };
  auto* analyze = app.add_subcommand("analyze", "find and classify fixed points of the circle action");
  auto* mono = app.add_subcommand("monodromy", "monodromy around a named loop");
  auto* chern = app.add_subcommand("chern", "Chern-number ledger of an integral");
  auto* bif = app.add_subcommand("bifurcation", "sample the bifurcation diagram");
  auto* dh = app.add_subcommand("dh", "Monte Carlo profile of the pushforward volume of J");
  auto* self = app.add_subcommand("selftest", "run the acceptance suite");
  for (auto* s : {analyze, mono, chern, bif, dh, self}) add_common(s);
  mono->add_option("--loop", f.loop, "loop name from the config");
  mono->add_option("--method", f.method, "takens, count, rotation or all")
      ->check(CLI::IsMember({"takens", "count", "rotation", "all"}));
  for (auto* s : {mono, chern})
    s->add_option("--integral", f.integral, "H or J")->check(CLI::IsMember({"H", "J"}));
  bif->add_option("--grid", f.grid, "cells as NXxNY");
  for (auto* s : {dh, self}) s->add_option("--samples", f.samples, "Monte Carlo samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (*analyze) return cmd_analyze(f);
    if (*mono) return cmd_monodromy(f);
    if (*chern) return cmd_chern(f);
    if (*bif) return cmd_bifurcation(f);
    if (*dh) return cmd_dh(f);
    return cmd_selftest(f);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    if (f.config.empty()) {
      for (auto* s : app.get_subcommands()) std::cerr << "\n" << s->help();
    }
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}
