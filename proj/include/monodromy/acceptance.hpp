#pragma once

// Acceptance suite shared by the acceptance binary and `monodromy-kit selftest`.
// Each criterion prints one PASS/FAIL line with its runtime and budget.

#include <chrono>
#include <complex>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "monodromy/bifurcation.hpp"
#include "monodromy/chern.hpp"
#include "monodromy/fixed_points.hpp"
#include "monodromy/integrate.hpp"
#include "monodromy/pipeline.hpp"
#include "monodromy/rotation.hpp"

namespace monodromy {

struct AcceptanceOptions {
  // Forces the orientation of every builtin; only for negative testing.
  std::optional<int> orientation;
  std::uint64_t seed = 1;
  long dh_samples = 1000000;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  double budget = 0.0;
  std::string detail;
};

namespace detail {

inline LoopSpec circle_loop(std::string name, double j, double h, double r) {
  LoopSpec l;
  l.name = std::move(name);
  l.center = {j, h};
  l.radius = r;
  return l;
}

inline LoopSpec spin_enclosing_loop() {
  LoopSpec l;
  l.name = "gamma3";
  l.kind = LoopKind::polyline;
  l.vertices = {{-1.4, 0}, {-0.8, -0.2}, {0.8, -0.2}, {1.4, 0}, {0.8, 0.2}, {-0.8, 0.2}};
  return l;
}

// Values stay finite for arguments in [-1, 1]: sqrt and division only see
// arguments bounded away from zero.
inline std::string random_expression(std::mt19937_64& rng, int dim, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
  std::uniform_int_distribution<int> var(1, dim);
  std::uniform_real_distribution<double> num(0.1, 2.0);
  auto sub = [&] { return random_expression(rng, dim, depth - 1); };
  switch (pick(rng)) {
    case 0:
      return "x" + std::to_string(var(rng));
    case 1: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", num(rng));
      return buf;
    }
    case 2: return "(" + sub() + "+" + sub() + ")";
    case 3: return "(" + sub() + "-" + sub() + ")";
    case 4: return "(" + sub() + "*" + sub() + ")";
    case 5: return "(" + sub() + "/(2+sin(" + sub() + ")))";
    case 6: return "sin(" + sub() + ")";
    case 7: return "cos(" + sub() + ")";
    case 8: return "sqrt(1+(" + sub() + ")^2)";
    default:
      return "exp(sin(" + sub() + "))*(-x" + std::to_string(var(rng)) + ")^" +
             std::to_string(std::uniform_int_distribution<int>(0, 3)(rng));
  }
}

inline std::string join_ms(const std::vector<MonodromyResult>& rs) {
  std::string s;
  for (const auto& r : rs) s += std::string(s.empty() ? "" : " ") + to_string(r.method) + "=" + std::to_string(r.m);
  return s;
}

}  // namespace detail

class AcceptanceSuite {
 public:
  explicit AcceptanceSuite(AcceptanceOptions opt = {}) : opt_(opt) {}

  std::vector<CriterionResult> run(std::ostream& os) {
    std::vector<CriterionResult> out;
    const std::vector<std::tuple<int, std::string, double, std::function<bool(std::string&)>>> all = {
        {1, "spherical pendulum monodromy", 120, [&](std::string& d) { return pendulum_monodromy(d); }},
        {2, "coupled spin J-ledger", 30, [&](std::string& d) { return spin_j_ledger(d); }},
        {3, "coupled spin monodromy", 180, [&](std::string& d) { return spin_monodromy(d); }},
        {4, "coupled spin H-ledger", 30, [&](std::string& d) { return spin_h_ledger(d); }},
        {5, "classification", 30, [&](std::string& d) { return classification(d); }},
        {6, "cocycle winding", 1, [&](std::string& d) { return winding(d); }},
        {7, "DH profile", 120, [&](std::string& d) { return dh(d); }},
        {8, "property suites", 300, [&](std::string& d) { return properties(d); }},
    };
    for (const auto& [id, name, budget, fn] : all) {
      CriterionResult r{id, name, false, 0.0, budget, {}};
      auto t0 = std::chrono::steady_clock::now();
      try {
        r.pass = fn(r.detail);
      } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("error: ") + e.what();
      }
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (r.pass && r.seconds > budget) {
        r.pass = false;
        r.detail += " (over budget)";
      }
      char head[160];
      std::snprintf(head, sizeof head, "%s criterion %d: %s [%.1f s / %.0f s] ", r.pass ? "PASS" : "FAIL", id,
                    name.c_str(), r.seconds, budget);
      os << head << r.detail << std::endl;
      out.push_back(std::move(r));
    }
    return out;
  }

  static bool all_pass(const std::vector<CriterionResult>& rs) {
    for (const auto& r : rs)
      if (!r.pass) return false;
    return true;
  }

 private:
  AcceptanceOptions opt_;
  std::vector<MonodromyResult> emitted_;
  std::optional<std::vector<FixedPointRecord>> spin_fps_;

  SystemModel system(BuiltinSystem which) const {
    SystemModel s = builtin_system(which);
    if (opt_.orientation) s.orientation = *opt_.orientation;
    return s;
  }

  const std::vector<FixedPointRecord>& spin_fps(const SystemModel& s) {
    if (!spin_fps_) spin_fps_ = find_fixed_points(s);
    return *spin_fps_;
  }

  MonodromyRun three_ways(const SystemModel& s, const std::vector<FixedPointRecord>& fps, const LoopSpec& loop) {
    MonodromyRun run = run_monodromy(s, fps, loop, {Method::takens_levels, Method::disk_count, Method::rotation},
                                     opt_.seed);
    for (const auto& r : run.results) emitted_.push_back(r);
    return run;
  }

  bool pendulum_monodromy(std::string& d) {
    auto s = system(BuiltinSystem::spherical_pendulum);
    auto fps = find_fixed_points(s);
    auto run = three_ways(s, fps, detail::circle_loop("gamma", 0, 1, 0.5));
    double variation = run.results[2].diagnostics.at("variation").get<double>();
    d = detail::join_ms(run.results) + " variation=" + std::to_string(variation);
    bool ok = std::abs(variation + 1) < 1e-2;
    for (const auto& r : run.results) ok = ok && r.m == 1;
    return ok;
  }

  bool spin_j_ledger(std::string& d) {
    auto s = system(BuiltinSystem::coupled_spin_s2s2);
    auto ledger = build_ledger(s, Integral::J, spin_fps(s));
    int a = chern_number(ledger, -2), b = chern_number(ledger, 0), c = chern_number(ledger, 2);
    d = "c(-2)=" + std::to_string(a) + " c(0)=" + std::to_string(b) + " c(2)=" + std::to_string(c);
    return a == -1 && b == 0 && c == 1;
  }

  bool spin_monodromy(std::string& d) {
    auto s = system(BuiltinSystem::coupled_spin_s2s2);
    const auto& fps = spin_fps(s);
    auto r1 = three_ways(s, fps, detail::circle_loop("gamma1", -1, 0, 0.2));
    auto r2 = three_ways(s, fps, detail::circle_loop("gamma2", 1, 0, 0.2));
    auto r3 = three_ways(s, fps, detail::spin_enclosing_loop());
    d = "gamma1[" + detail::join_ms(r1.results) + "] gamma2[" + detail::join_ms(r2.results) + "] gamma3[" +
        detail::join_ms(r3.results) + "]";
    int m1 = r1.results[0].m, m2 = r2.results[0].m, m3 = r3.results[0].m;
    return r1.agree && r2.agree && r3.agree && m1 == 1 && m2 == 1 && m3 == 2 && m3 == m1 + m2;
  }

  bool spin_h_ledger(std::string& d) {
    auto s = system(BuiltinSystem::coupled_spin_s2s2);
    auto ledger = build_ledger(s, Integral::H, spin_fps(s));
    int lo = chern_number(ledger, -0.1), hi = chern_number(ledger, 0.1), jump = chern_jump(ledger, 0.0);
    d = "c(-0.1)=" + std::to_string(lo) + " c(0.1)=" + std::to_string(hi) + " jump(0)=" + std::to_string(jump);
    return lo == -1 && hi == 1 && jump == 2;
  }

  bool classification(std::string& d) {
    bool ok = true;
    auto near = [](const Vec& a, std::initializer_list<double> b) {
      Vec v(static_cast<Eigen::Index>(b.size()));
      std::copy(b.begin(), b.end(), v.data());
      return (a - v).norm() < 1e-6;
    };
    auto expect = [&](const FixedPointRecord& p, SingType t, int sign, const std::string& label) {
      if (p.sing_type != t || p.sign != sign) {
        ok = false;
        d += label + " is " + to_string(p.sing_type) + "/" + std::to_string(p.sign) + "; ";
      }
    };
    auto p = system(BuiltinSystem::spherical_pendulum);
    int found = 0;
    for (const auto& r : find_fixed_points(p))
      if (near(r.position, {0, 0, 1, 0, 0, 0})) {
        expect(r, SingType::focus_focus, 1, "pendulum P_c");
        ++found;
      }
    auto s = system(BuiltinSystem::coupled_spin_s2s2);
    for (const auto& r : spin_fps(s)) {
      double z1 = r.position[2], z2 = r.position[5];
      std::string label = std::string("spin (") + (z1 > 0 ? "N" : "S") + "," + (z2 > 0 ? "N" : "S") + ")";
      if (z1 * z2 < 0) expect(r, SingType::focus_focus, 1, label);
      else expect(r, SingType::elliptic_elliptic, -1, label);
      ++found;
    }
    int focus = 0;
    for (BuiltinSystem b : {BuiltinSystem::spherical_pendulum, BuiltinSystem::champagne_bottle,
                            BuiltinSystem::coupled_spin_s2s2})
      for (const auto& r : find_fixed_points(system(b)))
        if (r.sing_type == SingType::focus_focus) {
          ++focus;
          if (r.sign != 1) {
            ok = false;
            d += "negative focus-focus in " + std::string(system(b).name) + "; ";
          }
        }
    if (found != 5) {
      ok = false;
      d += "expected 5 named points, found " + std::to_string(found) + "; ";
    }
    d += std::to_string(focus) + " focus-focus points, all checked";
    return ok;
  }

  bool winding(std::string& d) {
    std::vector<std::complex<double>> neg, pos;
    for (int k = 0; k < 256; ++k) {
      double t = kTwoPi * k / 256;
      neg.push_back(std::polar(1.0, -t));
      pos.push_back(std::polar(1.0, t));
    }
    int a = winding_number(neg, true), b = winding_number(pos, true);
    d = "exp(-i t) -> " + std::to_string(a) + ", exp(i t) -> " + std::to_string(b);
    return a == -1 && b == 1;
  }

  bool dh(std::string& d) {
    auto s = system(BuiltinSystem::coupled_spin_s2s2);
    auto ledger = build_ledger(s, Integral::J, spin_fps(s));
    auto prof = dh_profile(s, dh_grid(-3, 3, 0.05), opt_.dh_samples, opt_.seed, ledger);
    bool ok = prof.fit_residual < 0.02;
    char buf[96];
    std::snprintf(buf, sizeof buf, "residual=%.4f", prof.fit_residual);
    d = buf;
    int checked = 0;
    for (const auto& k : prof.kinks) {
      if (std::abs(std::abs(k.j) - 1) > 1e-6) continue;
      ++checked;
      std::snprintf(buf, sizeof buf, " kink(%+g)=%.4f+-%.4f", k.j, k.normalized, k.normalized_stderr);
      d += buf;
      ok = ok && k.ledger_jump == 1 && std::abs(k.normalized - 1) <= 3 * k.normalized_stderr;
    }
    return ok && checked == 2;
  }

  bool properties(std::string& d) {
    bool ok = true;
    auto note = [&](bool pass, const std::string& what) {
      if (!pass) {
        ok = false;
        d += what + "; ";
      }
    };
    std::vector<SystemModel> builtins;
    for (BuiltinSystem b : {BuiltinSystem::spherical_pendulum, BuiltinSystem::champagne_bottle,
                            BuiltinSystem::coupled_spin_s2s2})
      builtins.push_back(system(b));

    double worst_comm = 0, worst_period = 0;
    for (const auto& s : builtins) {
      worst_comm = std::max(worst_comm, commutation_defect(s, 100, opt_.seed));
      FlowOptions fo = FlowOptions::from(s.tol);
      for (const Vec& x : sample_feasible_points(s, 20, opt_.seed + 17))
        worst_period = std::max(worst_period, (flow_to(s, s.J, x, kTwoPi, fo) - x).norm());
    }
    note(worst_comm < 1e-10, "commutation defect " + std::to_string(worst_comm));
    note(worst_period < 1e-8, "J-flow period defect " + std::to_string(worst_period));

    std::mt19937_64 rng(opt_.seed + 20240611);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst_ad = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const int dim = 4;
      Expression e = parse_expression(detail::random_expression(rng, dim, 6), dim);
      Vec x(dim);
      for (int i = 0; i < dim; ++i) x[i] = u(rng);
      Vec g = e.gradient(x);
      for (int i = 0; i < dim; ++i) {
        Vec a = x, b = x;
        a[i] += 1e-5;
        b[i] -= 1e-5;
        double fd = (e(a) - e(b)) / 2e-5;
        worst_ad = std::max(worst_ad, std::abs(g[i] - fd) / (1 + std::abs(g[i])));
      }
    }
    note(worst_ad < 1e-6, "AD vs finite difference " + std::to_string(worst_ad));

    auto champ = builtins[1];
    auto run = three_ways(champ, find_fixed_points(champ), detail::circle_loop("champagne", 0, 0, 0.1));
    note(run.agree, "champagne methods disagree: " + detail::join_ms(run.results));

    int bad_matrix = 0;
    for (const auto& r : emitted_) {
      const auto& a = r.matrix;
      if (a[0][0] * a[1][1] - a[0][1] * a[1][0] != 1 || !is_unipotent_upper(r)) ++bad_matrix;
    }
    note(bad_matrix == 0, std::to_string(bad_matrix) + " malformed monodromy matrices");

    char buf[200];
    std::snprintf(buf, sizeof buf, "comm=%.1e period=%.1e ad=%.1e champagne[%s] matrices=%zu", worst_comm,
                  worst_period, worst_ad, detail::join_ms(run.results).c_str(), emitted_.size());
    d += buf;
    return ok;
  }
};

}  // namespace monodromy
