#pragma once

// Projected gradient descent on M, used to locate extrema of H or J.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "monodromy/linalg.hpp"
#include "monodromy/system.hpp"

namespace monodromy {

struct ExtremumResult {
  Vec x;
  double value = 0.0;
  bool converged = false;
  bool left_bounds = false;
};

inline bool within_bounds(const SystemModel& sys, const Vec& x, double slack = 0.0) {
  for (int i = 0; i < static_cast<int>(sys.bounds.size()); ++i) {
    auto [lo, hi] = sys.bounds[static_cast<std::size_t>(i)];
    double pad = slack * (hi - lo);
    if (x[i] < lo - pad || x[i] > hi + pad) return false;
  }
  return true;
}

/// Gradient of f projected onto the tangent space of M at x.
inline Vec tangent_gradient(const SystemModel& sys, const Expression& f, const Vec& x) {
  Vec g = f.gradient(x);
  if (sys.constraints.empty()) return g;
  Mat dc = constraint_jacobian(sys, x);
  return g - dc.transpose() * min_norm_solve(dc.transpose(), g, 1e-12);
}

/// Minimizes dir * f on M starting at x0 (dir = +1 minimum, -1 maximum).
/// Stops when the tangent gradient vanishes or the iterate leaves the bounds
/// box enlarged by `escape` times its size.
inline ExtremumResult extremize(const SystemModel& sys, const Expression& f, double dir, Vec x,
                                double escape = 1.0, int max_iter = 5000) {
  ExtremumResult out;
  auto p = try_project(sys, x);
  if (!p) return out;
  x = *p;
  double val = dir * f(x);
  double step = 0.1;
  for (int it = 0; it < max_iter; ++it) {
    Vec g = tangent_gradient(sys, f, x) * dir;
    double gn = g.norm();
    if (gn < 1e-12) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    while (step > 1e-16) {
      auto y = try_project(sys, Vec(x - step * g));
      if (y && dir * f(*y) < val - 1e-4 * step * gn * gn) {
        x = *y;
        val = dir * f(x);
        accepted = true;
        step *= 2.0;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.converged = gn < 1e-8;
      break;
    }
    if (!within_bounds(sys, x, escape)) {
      out.left_bounds = true;
      break;
    }
  }
  out.x = x;
  out.value = f(x);
  return out;
}

/// Estimated global minimum and maximum of f on M from sampled starts.
/// Either side is infinite when a descent escapes the bounds box.
inline std::pair<double, double> value_range(const SystemModel& sys, const Expression& f,
                                             int starts, std::uint64_t seed) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Vec& x : sample_feasible_points(sys, starts, seed)) {
    auto mn = extremize(sys, f, +1.0, x);
    auto mx = extremize(sys, f, -1.0, x);
    lo = mn.left_bounds ? -std::numeric_limits<double>::infinity() : std::min(lo, mn.value);
    hi = mx.left_bounds ? std::numeric_limits<double>::infinity() : std::max(hi, mx.value);
  }
  return {lo, hi};
}

}  // namespace monodromy
