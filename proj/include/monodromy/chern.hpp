#pragma once

// Chern-number ledger of the reduced levels of H or J, monodromy by level
// differences and by signed fixed-point counts inside a loop, and the
// winding-number test for circle-bundle cocycles.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "monodromy/error.hpp"
#include "monodromy/extremum.hpp"
#include "monodromy/fixed_points.hpp"
#include "monodromy/system.hpp"

namespace monodromy {

enum class Integral { H, J };

inline const char* to_string(Integral i) { return i == Integral::H ? "H" : "J"; }

inline const Expression& integral_of(const SystemModel& sys, Integral i) {
  return i == Integral::H ? sys.H : sys.J;
}

struct LedgerEntry {
  double value = 0.0;
  int jump = 0;
  std::vector<int> points;
};

struct ChernLedger {
  Integral integral = Integral::H;
  std::vector<LedgerEntry> entries;
  // Estimated range of the integral on M; infinite ends when unbounded.
  double domain_lo = -std::numeric_limits<double>::infinity();
  double domain_hi = std::numeric_limits<double>::infinity();
};

/// Groups fixed points by critical value of the chosen integral; each jump is
/// the sum of the signs at that value.
inline ChernLedger build_ledger(const SystemModel& sys, Integral integral,
                                const std::vector<FixedPointRecord>& fps) {
  ChernLedger ledger;
  ledger.integral = integral;
  for (const auto& fp : fps) {
    if (fp.sing_type == SingType::unsupported)
      throw NumericError("build_ledger", "fixed point " + std::to_string(fp.id) +
                                             " has an unsupported singularity type");
    bool nondeg = integral == Integral::H ? fp.nondegenerate : fp.nondegenerate_J;
    if (!nondeg)
      throw NumericError("build_ledger", "fixed point " + std::to_string(fp.id) + " is degenerate for " +
                                             to_string(integral));
    double v = integral == Integral::H ? fp.value_H : fp.value_J;
    auto it = std::find_if(ledger.entries.begin(), ledger.entries.end(),
                           [&](const LedgerEntry& e) { return std::abs(e.value - v) <= 1e-8; });
    if (it == ledger.entries.end()) {
      ledger.entries.push_back({v, fp.sign, {fp.id}});
    } else {
      it->jump += fp.sign;
      it->points.push_back(fp.id);
    }
  }
  std::sort(ledger.entries.begin(), ledger.entries.end(),
            [](const LedgerEntry& a, const LedgerEntry& b) { return a.value < b.value; });
  if (!sys.bounds.empty()) {
    auto [lo, hi] = value_range(sys, integral_of(sys, integral), 8, 3);
    ledger.domain_lo = lo;
    ledger.domain_hi = hi;
  }
  return ledger;
}

/// c(h): sum of the jumps below h; 0 below every critical value.
inline int chern_number(const ChernLedger& ledger, double h) {
  int c = 0;
  for (const auto& e : ledger.entries) {
    if (std::abs(e.value - h) <= 1e-8)
      throw NumericError("chern_number", "critical value " + std::to_string(h));
    if (e.value < h) c += e.jump;
  }
  return c;
}

inline int chern_jump(const ChernLedger& ledger, double h_c) {
  for (const auto& e : ledger.entries)
    if (std::abs(e.value - h_c) <= 1e-8) return e.jump;
  throw NumericError("chern_jump", "no ledger entry at " + std::to_string(h_c));
}

// ---------------------------------------------------------------------------
// Monodromy results

enum class Method { takens_levels, disk_count, rotation };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::takens_levels: return "takens_levels";
    case Method::disk_count: return "disk_count";
    case Method::rotation: return "rotation";
  }
  return "";
}

inline constexpr const char* kBasisNote =
    "column basis (a,b), b = orbit class, matrix acts on columns";

struct MonodromyResult {
  int m = 0;
  std::array<std::array<int, 2>, 2> matrix{{{1, 0}, {0, 1}}};
  Method method = Method::takens_levels;
  std::string basis_note = kBasisNote;
  nlohmann::json diagnostics = nlohmann::json::object();
};

inline MonodromyResult make_monodromy(int m, Method method) {
  MonodromyResult r;
  r.m = m;
  r.matrix = {{{1, m}, {0, 1}}};
  r.method = method;
  return r;
}

inline bool is_unipotent_upper(const MonodromyResult& r) {
  const auto& a = r.matrix;
  return a[0][0] == 1 && a[1][1] == 1 && a[1][0] == 0 && a[0][1] == r.m &&
         a[0][0] * a[1][1] - a[0][1] * a[1][0] == 1;
}

/// m = c(h2) - c(h1); the matrix is [[1,c(h2)],[0,1]] [[1,c(h1)],[0,1]]^-1.
inline MonodromyResult monodromy_from_levels(const ChernLedger& ledger, double h1, double h2) {
  int c1 = chern_number(ledger, h1);
  int c2 = chern_number(ledger, h2);
  MonodromyResult r = make_monodromy(c2 - c1, Method::takens_levels);
  r.diagnostics = {{"integral", to_string(ledger.integral)}, {"h1", h1}, {"h2", h2},
                   {"c1", c1}, {"c2", c2}};
  return r;
}

// ---------------------------------------------------------------------------
// Loops in the (j, h) plane

struct PlanePoint {
  double j = 0.0;
  double h = 0.0;
};

enum class LoopKind { circle, polyline };

struct LoopSpec {
  std::string name;
  LoopKind kind = LoopKind::circle;
  PlanePoint center;
  double radius = 0.0;
  // Counterclockwise is +1. Circles carry it explicitly; polylines take it
  // from the vertex order.
  int direction = 1;
  std::vector<PlanePoint> vertices;
  int n_samples = 64;
};

namespace detail {

inline double cross(PlanePoint o, PlanePoint a, PlanePoint b) {
  return (a.j - o.j) * (b.h - o.h) - (a.h - o.h) * (b.j - o.j);
}

inline bool segments_intersect(PlanePoint a, PlanePoint b, PlanePoint c, PlanePoint d) {
  double d1 = cross(c, d, a), d2 = cross(c, d, b), d3 = cross(a, b, c), d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  auto on = [](PlanePoint p, PlanePoint q, PlanePoint r) {
    return std::min(p.j, q.j) <= r.j && r.j <= std::max(p.j, q.j) && std::min(p.h, q.h) <= r.h &&
           r.h <= std::max(p.h, q.h);
  };
  return (d1 == 0 && on(c, d, a)) || (d2 == 0 && on(c, d, b)) || (d3 == 0 && on(a, b, c)) ||
         (d4 == 0 && on(a, b, d));
}

inline double segment_distance(PlanePoint p, PlanePoint a, PlanePoint b) {
  double dj = b.j - a.j, dh = b.h - a.h;
  double len2 = dj * dj + dh * dh;
  double t = len2 > 0 ? std::clamp(((p.j - a.j) * dj + (p.h - a.h) * dh) / len2, 0.0, 1.0) : 0.0;
  return std::hypot(p.j - a.j - t * dj, p.h - a.h - t * dh);
}

}  // namespace detail

inline double polyline_signed_area(const std::vector<PlanePoint>& v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % v.size()];
    a += p.j * q.h - q.j * p.h;
  }
  return 0.5 * a;
}

/// Throws ConfigError unless the loop is closed, simple and sampled enough.
inline void validate_loop(const LoopSpec& loop) {
  if (loop.n_samples < 16) throw ConfigError("loop '" + loop.name + "': n_samples must be >= 16");
  if (loop.kind == LoopKind::circle) {
    if (!(loop.radius > 0) || !std::isfinite(loop.radius))
      throw ConfigError("loop '" + loop.name + "': radius must be positive");
    if (loop.direction != 1 && loop.direction != -1)
      throw ConfigError("loop '" + loop.name + "': direction must be +1 or -1");
    return;
  }
  const auto& v = loop.vertices;
  if (v.size() < 3) throw ConfigError("loop '" + loop.name + "': polyline needs >= 3 vertices");
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k) {
      bool adjacent = k == i + 1 || (i == 0 && k == n - 1);
      if (adjacent) continue;
      if (detail::segments_intersect(v[i], v[(i + 1) % n], v[k], v[(k + 1) % n]))
        throw ConfigError("loop '" + loop.name + "': polyline is not simple");
    }
  if (std::abs(polyline_signed_area(v)) < 1e-12)
    throw ConfigError("loop '" + loop.name + "': polyline encloses no area");
}

/// +1 for counterclockwise loops, -1 for clockwise ones.
inline int loop_orientation(const LoopSpec& loop) {
  if (loop.kind == LoopKind::circle) return loop.direction;
  return polyline_signed_area(loop.vertices) > 0 ? 1 : -1;
}

/// Point at parameter s in [0, 1) along the loop in its own direction.
inline PlanePoint loop_point(const LoopSpec& loop, double s) {
  s -= std::floor(s);
  if (loop.kind == LoopKind::circle) {
    double a = 2 * std::numbers::pi * s * loop.direction;
    return {loop.center.j + loop.radius * std::cos(a), loop.center.h + loop.radius * std::sin(a)};
  }
  const auto& v = loop.vertices;
  const std::size_t n = v.size();
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % n];
    cum[i + 1] = cum[i] + std::hypot(q.j - p.j, q.h - p.h);
  }
  double target = s * cum[n];
  std::size_t i = 0;
  while (i + 1 < n && cum[i + 1] <= target) ++i;
  double seg = cum[i + 1] - cum[i];
  double t = seg > 0 ? (target - cum[i]) / seg : 0.0;
  const auto& p = v[i];
  const auto& q = v[(i + 1) % n];
  return {p.j + t * (q.j - p.j), p.h + t * (q.h - p.h)};
}

inline std::vector<PlanePoint> loop_samples(const LoopSpec& loop, int n) {
  std::vector<PlanePoint> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(loop_point(loop, static_cast<double>(i) / n));
  return out;
}

/// Distance from p to the loop curve.
inline double distance_to_loop(const LoopSpec& loop, PlanePoint p) {
  if (loop.kind == LoopKind::circle)
    return std::abs(std::hypot(p.j - loop.center.j, p.h - loop.center.h) - loop.radius);
  double best = std::numeric_limits<double>::infinity();
  const auto& v = loop.vertices;
  for (std::size_t i = 0; i < v.size(); ++i)
    best = std::min(best, detail::segment_distance(p, v[i], v[(i + 1) % v.size()]));
  return best;
}

/// Even-odd containment; points within 1e-9 of the curve are an error.
inline bool loop_contains(const LoopSpec& loop, PlanePoint p) {
  if (distance_to_loop(loop, p) < 1e-9)
    throw NumericError("loop_contains", "point lies on the loop '" + loop.name + "'");
  if (loop.kind == LoopKind::circle)
    return std::hypot(p.j - loop.center.j, p.h - loop.center.h) < loop.radius;
  bool inside = false;
  const auto& v = loop.vertices;
  for (std::size_t i = 0, k = v.size() - 1; i < v.size(); k = i++) {
    if ((v[i].h > p.h) != (v[k].h > p.h)) {
      double x = v[k].j + (p.h - v[k].h) * (v[i].j - v[k].j) / (v[i].h - v[k].h);
      if (p.j < x) inside = !inside;
    }
  }
  return inside;
}

/// m = orientation * (sum of signs of fixed points whose value lies inside).
inline MonodromyResult monodromy_from_disk(const SystemModel& sys,
                                           const std::vector<FixedPointRecord>& fps,
                                           const LoopSpec& loop) {
  (void)sys;
  validate_loop(loop);
  int total = 0;
  std::vector<int> inside;
  for (const auto& fp : fps) {
    PlanePoint v{fp.value_J, fp.value_H};
    if (distance_to_loop(loop, v) < 1e-6)
      throw NumericError("monodromy_from_disk",
                         "fixed point " + std::to_string(fp.id) + " lies on the loop");
    if (loop_contains(loop, v)) {
      total += fp.sign;
      inside.push_back(fp.id);
    }
  }
  int orient = loop_orientation(loop);
  MonodromyResult r = make_monodromy(orient * total, Method::disk_count);
  r.diagnostics = {{"inside", inside}, {"orientation", orient}};
  return r;
}

// ---------------------------------------------------------------------------
// Winding numbers

/// Degree of a sampled map to the unit circle. A phase step of 3pi/4 or more
/// between neighbours is rejected as undersampled.
inline int winding_number(const std::vector<std::complex<double>>& samples, bool closed) {
  const char* op = "winding_number";
  if (samples.empty()) return 0;
  double total = 0.0;
  const std::size_t n = samples.size();
  const std::size_t steps = closed ? n : n - 1;
  for (std::size_t i = 0; i < steps; ++i) {
    auto a = samples[i], b = samples[(i + 1) % n];
    if (std::abs(a) == 0.0 || std::abs(b) == 0.0) throw NumericError(op, "zero sample");
    double d = std::arg(b / a);
    if (std::abs(d) >= 0.75 * std::numbers::pi)
      throw NumericError(op, "undersampled (phase step " + std::to_string(d) + " at sample " +
                                 std::to_string(i) + ")");
    total += d;
  }
  double turns = total / (2 * std::numbers::pi);
  double r = std::round(turns);
  if (std::abs(turns - r) >= 1e-6)
    throw NumericError(op, "rounding residual " + std::to_string(std::abs(turns - r)) + " too large");
  return static_cast<int>(r);
}

}  // namespace monodromy
