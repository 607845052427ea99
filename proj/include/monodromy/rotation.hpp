#pragma once

// First-return times and rotation numbers on regular tori, continuous
// tracking along a loop of values, and monodromy from the total variation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "monodromy/chern.hpp"
#include "monodromy/error.hpp"
#include "monodromy/integrate.hpp"
#include "monodromy/linalg.hpp"
#include "monodromy/parallel.hpp"
#include "monodromy/system.hpp"

namespace monodromy {

inline constexpr double kTwoPi = 2 * std::numbers::pi;

// ---------------------------------------------------------------------------
// Points on fibers

namespace detail {

inline Vec fiber_residual(const SystemModel& sys, const Vec& x, double h, double j) {
  const auto k = static_cast<Eigen::Index>(sys.constraints.size());
  Vec r(2 + k);
  r[0] = sys.H(x) - h;
  r[1] = sys.J(x) - j;
  if (k > 0) r.tail(k) = constraint_values(sys, x);
  return r;
}

inline std::optional<Vec> solve_fiber(const SystemModel& sys, Vec x, double h, double j) {
  const auto k = static_cast<Eigen::Index>(sys.constraints.size());
  Vec r = fiber_residual(sys, x, h, j);
  for (int it = 0; it < 60; ++it) {
    if (!r.allFinite()) return std::nullopt;
    if (r.cwiseAbs().maxCoeff() < 1e-12) return x;
    Mat d(2 + k, sys.dim);
    d.row(0) = sys.H.gradient(x).transpose();
    d.row(1) = sys.J.gradient(x).transpose();
    if (k > 0) d.bottomRows(k) = constraint_jacobian(sys, x);
    Vec step = min_norm_solve(d, r, 1e-10);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      Vec y = x - t * step;
      Vec ry = fiber_residual(sys, y, h, j);
      if (ry.allFinite() && ry.norm() < r.norm()) {
        x = y;
        r = ry;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return r.cwiseAbs().maxCoeff() < 1e-11 ? std::optional<Vec>(x) : std::nullopt;
}

}  // namespace detail

/// A point of F^-1(h, j) on M. Hints are tried first, then seeded random
/// points of M.
inline Vec point_on_fiber(const SystemModel& sys, double h, double j,
                          const std::vector<Vec>& hints = {}, std::uint64_t seed = 1) {
  std::vector<Vec> tries = hints;
  tries.insert(tries.end(), sys.fiber_seed_hints.begin(), sys.fiber_seed_hints.end());
  for (const Vec& x : tries)
    if (x.size() == sys.dim)
      if (auto p = detail::solve_fiber(sys, x, h, j)) return *p;
  if (!sys.bounds.empty())
    for (const Vec& x : sample_feasible_points(sys, 64, seed))
      if (auto p = detail::solve_fiber(sys, x, h, j)) return *p;
  throw NumericError("point_on_fiber", "(h, j) = (" + std::to_string(h) + ", " + std::to_string(j) +
                                           ") is outside image of F (no seed converged)");
}

// ---------------------------------------------------------------------------
// First return

struct ReturnOptions {
  int orbit_points = 512;
  double t_max = 1e3;
  // Capture radius as a fraction of the orbit size.
  double capture = 1e-3;
  double t_tol = 1e-10;
  FlowOptions flow;
};

inline ReturnOptions return_options(const SystemModel& sys) {
  ReturnOptions o;
  o.flow = FlowOptions::from(sys.tol);
  return o;
}

struct FirstReturn {
  double T = 0.0;
  double theta = 0.0;  // in [0, 1)
  double s = 0.0;      // phi_H^T(x0) = phi_J^s(x0), s in [0, 2 pi)
  double residual = 0.0;
};

namespace detail {

struct OrbitSample {
  Vec y;
  Vec normal;  // unit component of X_H orthogonal to X_J
};

inline std::vector<OrbitSample> discretize_orbit(const SystemModel& sys, const Vec& x0,
                                                 const ReturnOptions& opt) {
  const char* op = "first_return";
  std::vector<OrbitSample> orbit;
  orbit.reserve(static_cast<std::size_t>(opt.orbit_points));
  const double ds = kTwoPi / opt.orbit_points;
  Vec y = x0;
  for (int k = 0; k < opt.orbit_points; ++k) {
    if (k > 0) y = flow_to(sys, sys.J, y, ds, opt.flow);
    Vec xj = vector_field_raw(sys, sys.J, y);
    Vec xh = vector_field_raw(sys, sys.H, y);
    if (xj.norm() < 1e-8) throw NumericError(op, "base point is fixed by the circle action");
    Vec n = xh - (xh.dot(xj) / xj.squaredNorm()) * xj;
    if (n.norm() < 1e-8 * std::max(1.0, xh.norm()))
      throw NumericError(op, "base point lies on a relative equilibrium (not a regular torus)");
    orbit.push_back({y, n.normalized()});
  }
  Vec closing = flow_to(sys, sys.J, y, ds, opt.flow);
  if ((closing - x0).norm() > 1e-6)
    throw NumericError(op, "momentum flow is not 2pi-periodic at the base point");
  return orbit;
}

}  // namespace detail

/// First time T > 0 at which the H-trajectory of x0 meets the J-orbit of x0,
/// and the J-phase s with phi_J^s(x0) = phi_H^T(x0).
inline FirstReturn first_return(const SystemModel& sys, const Vec& x0, const ReturnOptions& opt) {
  const char* op = "first_return";
  require_feasible(sys, x0, op);
  auto orbit = detail::discretize_orbit(sys, x0, opt);
  double size = 0.0;
  for (const auto& o : orbit) size = std::max(size, (o.y - x0).norm());
  const double r_cap = opt.capture * size;
  const double ds = kTwoPi / opt.orbit_points;

  FlowOptions flow = opt.flow;
  double speed = vector_field_raw(sys, sys.H, x0).norm();
  flow.max_step = 0.02 * size / std::max(speed, 1e-300);

  auto nearest = [&](const Vec& x) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < orbit.size(); ++k) {
      double d = (x - orbit[k].y).squaredNorm();
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    return std::pair{best, std::sqrt(bd)};
  };

  // Gauss-Newton on (T, s) for phi_H^T(x0) = phi_J^s(x0).
  auto refine = [&](Vec xh, double t, std::size_t k) -> std::optional<FirstReturn> {
    double s = static_cast<double>(k) * ds;
    Vec yj = orbit[k].y;
    double res = (xh - yj).norm();
    for (int it = 0; it < 30; ++it) {
      Mat a(sys.dim, 2);
      a.col(0) = vector_field_raw(sys, sys.H, xh);
      a.col(1) = -vector_field_raw(sys, sys.J, yj);
      Vec step = a.colPivHouseholderQr().solve(Vec(yj - xh));
      if (!step.allFinite()) return std::nullopt;
      if (std::abs(step[0]) > 0.5 * t) step *= 0.5 * t / std::abs(step[0]);
      xh = flow_to(sys, sys.H, xh, step[0], opt.flow);
      yj = flow_to(sys, sys.J, yj, step[1], opt.flow);
      t += step[0];
      s += step[1];
      res = (xh - yj).norm();
      if (std::abs(step[0]) < opt.t_tol && std::abs(step[1]) < opt.t_tol) break;
    }
    if (!(res < r_cap) || !(t > 0)) return std::nullopt;
    FirstReturn fr;
    fr.T = t;
    fr.s = s - kTwoPi * std::floor(s / kTwoPi);
    // Sign calibrated so that counterclockwise loops around a positive
    // focus-focus value have variation -1.
    double th = -sys.orientation * fr.s / kTwoPi;
    fr.theta = th - std::floor(th);
    if (fr.theta >= 1.0) fr.theta -= 1.0;
    fr.residual = res;
    return fr;
  };

  std::optional<FirstReturn> found;
  double max_d = 0.0;
  double prev_sigma = 0.0, prev_d = 0.0, prev_t = 0.0;
  Vec prev_x = x0;
  integrate_observed(sys, sys.H, x0, opt.t_max, flow, [&](double t, const Vec& x) {
    auto [k, d] = nearest(x);
    double sigma = (x - orbit[k].y).dot(orbit[k].normal);
    max_d = std::max(max_d, d);
    bool armed = max_d > 20 * r_cap;
    if (armed && prev_sigma < 0 && sigma >= 0 && std::min(d, prev_d) < 0.5 * max_d) {
      double frac = prev_sigma / (prev_sigma - sigma);
      double t0 = prev_t + frac * (t - prev_t);
      Vec x_start = flow_to(sys, sys.H, prev_x, t0 - prev_t, opt.flow);
      found = refine(x_start, t0, nearest(x_start).first);
      if (found) return false;
    }
    prev_sigma = sigma;
    prev_d = d;
    prev_t = t;
    prev_x = x;
    return true;
  });
  if (!found) {
    if (max_d <= 20 * r_cap)
      throw NumericError(op, "trajectory never left the capture radius of its orbit");
    throw NumericError(op, "no return within t_max = " + std::to_string(opt.t_max));
  }
  return *found;
}

inline FirstReturn first_return(const SystemModel& sys, const Vec& x0) {
  return first_return(sys, x0, return_options(sys));
}

// ---------------------------------------------------------------------------
// Rotation traces

struct RotationSample {
  double s = 0.0;  // loop parameter in [0, 1]
  PlanePoint f;
  Vec x;
  double T = 0.0;
  double theta = 0.0;
  double theta_unwrapped = 0.0;
};

struct RotationTrace {
  LoopSpec loop;
  std::vector<RotationSample> samples;
  double variation = 0.0;
};

struct TraceOptions {
  int n0 = 64;
  int max_samples = 4096;
  // Segments with a larger unwrapped step are bisected.
  double max_jump = 0.25;
  std::uint64_t seed = 1;
  ReturnOptions ret;
};

inline TraceOptions trace_options(const SystemModel& sys) {
  TraceOptions o;
  o.ret = return_options(sys);
  return o;
}

namespace detail {

inline RotationSample rotation_sample(const SystemModel& sys, const LoopSpec& loop, double s,
                                      const std::vector<Vec>& hints, const TraceOptions& opt) {
  RotationSample r;
  r.s = s;
  r.f = loop_point(loop, s);
  r.x = point_on_fiber(sys, r.f.h, r.f.j, hints, opt.seed);
  FirstReturn fr = first_return(sys, r.x, opt.ret);
  r.T = fr.T;
  r.theta = fr.theta;
  return r;
}

inline double wrap_step(double d) { return d - std::round(d); }

}  // namespace detail

/// Samples the loop, computes rotation numbers and unwraps them into one
/// continuous branch, bisecting segments until every step is below max_jump.
inline RotationTrace rotation_trace(const SystemModel& sys, const LoopSpec& loop,
                                    const TraceOptions& opt) {
  const char* op = "rotation_trace";
  validate_loop(loop);
  if (opt.n0 < 2) throw Error("rotation_trace: n0 must be >= 2");
  std::vector<Vec> hints;
  std::vector<double> params;
  for (int i = 0; i < opt.n0; ++i) params.push_back(static_cast<double>(i) / opt.n0);
  auto samples = parallel_map<RotationSample>(params.size(), [&](std::size_t i) {
    return detail::rotation_sample(sys, loop, params[i], hints, opt);
  });
  // Closing sample: the base point of s = 0 seen at s = 1.
  RotationSample closing = samples.front();
  closing.s = 1.0;
  samples.push_back(closing);

  for (;;) {
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i)
      if (std::abs(detail::wrap_step(samples[i + 1].theta - samples[i].theta)) > opt.max_jump)
        bad.push_back(i);
    if (bad.empty()) break;
    if (samples.size() - 1 + bad.size() > static_cast<std::size_t>(opt.max_samples))
      throw NumericError(op, "refinement exceeds " + std::to_string(opt.max_samples) +
                                 " samples (loop too close to singular values)");
    auto mids = parallel_map<RotationSample>(bad.size(), [&](std::size_t b) {
      const auto& a = samples[bad[b]];
      const auto& c = samples[bad[b] + 1];
      return detail::rotation_sample(sys, loop, 0.5 * (a.s + c.s), {a.x, c.x}, opt);
    });
    std::vector<RotationSample> merged;
    merged.reserve(samples.size() + mids.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      merged.push_back(samples[i]);
      if (next < bad.size() && bad[next] == i) merged.push_back(mids[next++]);
    }
    samples = std::move(merged);
  }

  samples.front().theta_unwrapped = samples.front().theta;
  for (std::size_t i = 1; i < samples.size(); ++i)
    samples[i].theta_unwrapped = samples[i - 1].theta_unwrapped +
                                 detail::wrap_step(samples[i].theta - samples[i - 1].theta);
  RotationTrace trace;
  trace.loop = loop;
  trace.variation = samples.back().theta_unwrapped - samples.front().theta_unwrapped;
  trace.samples = std::move(samples);
  return trace;
}

inline RotationTrace rotation_trace(const SystemModel& sys, const LoopSpec& loop, int n0) {
  TraceOptions opt = trace_options(sys);
  opt.n0 = n0;
  return rotation_trace(sys, loop, opt);
}

/// m = -round(variation of the rotation number).
inline MonodromyResult monodromy_from_rotation(const RotationTrace& trace) {
  double r = std::round(trace.variation);
  if (std::abs(trace.variation - r) >= 1e-2)
    throw NumericError("monodromy_from_rotation",
                       "unresolved variation " + std::to_string(trace.variation));
  MonodromyResult out = make_monodromy(-static_cast<int>(r), Method::rotation);
  out.diagnostics = {{"variation", trace.variation},
                     {"samples", static_cast<int>(trace.samples.size())}};
  return out;
}

/// CSV with columns s, j, h, T, theta_unwrapped.
inline void write_trace_csv(std::ostream& os, const RotationTrace& trace) {
  os << "s,j,h,T,theta_unwrapped\n";
  os.precision(17);
  for (const auto& r : trace.samples)
    os << r.s << ',' << r.f.j << ',' << r.f.h << ',' << r.T << ',' << r.theta_unwrapped << '\n';
}

}  // namespace monodromy
