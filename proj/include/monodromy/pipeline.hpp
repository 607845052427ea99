#pragma once

// Monodromy around a named loop by the three methods, with the regularity
// precondition enforced up front.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "monodromy/bifurcation.hpp"
#include "monodromy/chern.hpp"
#include "monodromy/fixed_points.hpp"
#include "monodromy/rotation.hpp"

namespace monodromy {

inline constexpr double kDefaultRegularityMargin = 0.05;
// Level strips extend this fraction of the loop height past its extremes.
inline constexpr double kLevelMargin = 0.1;

/// Values of `integral` swept by the loop, widened by kLevelMargin of the height.
inline std::pair<double, double> level_strip(const LoopSpec& loop, Integral integral) {
  auto coord = [&](PlanePoint p) { return integral == Integral::H ? p.h : p.j; };
  double lo = 0, hi = 0;
  if (loop.kind == LoopKind::circle) {
    double c = coord(loop.center);
    lo = c - loop.radius;
    hi = c + loop.radius;
  } else {
    lo = hi = coord(loop.vertices.front());
    for (const auto& v : loop.vertices) {
      lo = std::min(lo, coord(v));
      hi = std::max(hi, coord(v));
    }
  }
  double pad = kLevelMargin * (hi - lo);
  return {lo - pad, hi + pad};
}

/// Fixed points whose value falls in the strip but not inside the loop. The
/// level method counts them too, so a usable integral has none.
inline std::vector<int> strip_intruders(const std::vector<FixedPointRecord>& fps,
                                        const LoopSpec& loop, Integral integral) {
  auto [lo, hi] = level_strip(loop, integral);
  std::vector<int> out;
  for (const auto& p : fps) {
    double v = integral == Integral::H ? p.value_H : p.value_J;
    if (v >= lo && v <= hi && !loop_contains(loop, {p.value_J, p.value_H})) out.push_back(p.id);
  }
  return out;
}

/// H unless its strip holds a fixed point outside the loop and J's does not.
inline Integral choose_level_integral(const std::vector<FixedPointRecord>& fps, const LoopSpec& loop) {
  if (strip_intruders(fps, loop, Integral::H).empty()) return Integral::H;
  if (strip_intruders(fps, loop, Integral::J).empty()) return Integral::J;
  return Integral::H;
}

inline MonodromyResult monodromy_from_takens(const SystemModel& sys,
                                             const std::vector<FixedPointRecord>& fps,
                                             const LoopSpec& loop,
                                             std::optional<Integral> integral = std::nullopt) {
  Integral which = integral.value_or(choose_level_integral(fps, loop));
  ChernLedger ledger = build_ledger(sys, which, fps);
  auto [lo, hi] = level_strip(loop, which);
  MonodromyResult levels = monodromy_from_levels(ledger, lo, hi);
  int orient = loop_orientation(loop);
  MonodromyResult r = make_monodromy(orient * levels.m, Method::takens_levels);
  r.diagnostics = levels.diagnostics;
  r.diagnostics["orientation"] = orient;
  r.diagnostics["intruders"] = strip_intruders(fps, loop, which);
  return r;
}

inline MonodromyResult monodromy_from_rotation(const SystemModel& sys, const LoopSpec& loop,
                                               std::uint64_t seed, RotationTrace* trace_out = nullptr) {
  TraceOptions opt = trace_options(sys);
  opt.seed = seed;
  opt.n0 = loop.n_samples;
  RotationTrace tr = rotation_trace(sys, loop, opt);
  MonodromyResult r = monodromy_from_rotation(tr);
  r.diagnostics["samples"] = tr.samples.size();
  if (trace_out) *trace_out = std::move(tr);
  return r;
}

/// Throws NumericError naming the first issue unless the loop passes.
inline RegularityReport require_regular(const SystemModel& sys, const std::vector<FixedPointRecord>& fps,
                                        const LoopSpec& loop, double margin, std::uint64_t seed) {
  RegularityReport rep = loop_regularity_check(sys, fps, loop, margin, seed);
  if (!rep.pass) {
    std::string msg = "loop '" + loop.name + "' is not regular";
    if (!rep.issues.empty()) {
      const auto& i = rep.issues.front();
      msg += " (" + std::to_string(rep.issues.size()) + " issues; first at (" +
             detail::number_text(i.f.j) + ", " + detail::number_text(i.f.h) + "): " + i.reason + ")";
    }
    throw NumericError("loop_regularity_check", msg);
  }
  return rep;
}

struct MonodromyRun {
  RegularityReport regularity;
  std::vector<MonodromyResult> results;
  std::optional<RotationTrace> trace;
  bool agree = true;
};

inline MonodromyRun run_monodromy(const SystemModel& sys, const std::vector<FixedPointRecord>& fps,
                                  const LoopSpec& loop, const std::vector<Method>& methods,
                                  std::uint64_t seed, double margin = kDefaultRegularityMargin,
                                  std::optional<Integral> integral = std::nullopt) {
  MonodromyRun run;
  run.regularity = require_regular(sys, fps, loop, margin, seed);
  for (Method m : methods) {
    switch (m) {
      case Method::takens_levels:
        run.results.push_back(monodromy_from_takens(sys, fps, loop, integral));
        break;
      case Method::disk_count:
        run.results.push_back(monodromy_from_disk(sys, fps, loop));
        break;
      case Method::rotation: {
        RotationTrace tr;
        run.results.push_back(monodromy_from_rotation(sys, loop, seed, &tr));
        run.trace = std::move(tr);
        break;
      }
    }
  }
  for (const auto& r : run.results) run.agree = run.agree && r.m == run.results.front().m;
  return run;
}

}  // namespace monodromy
