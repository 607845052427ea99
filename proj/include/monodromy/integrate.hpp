#pragma once

// Adaptive Dormand-Prince 5(4) integration of x' = X_f(x) on the constraint
// set. Every accepted step is followed by a Gauss-Newton projection back onto
// M; conserved quantities H and J are monitored along the way.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "monodromy/error.hpp"
#include "monodromy/system.hpp"

namespace monodromy {

struct FlowOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  // Fail when |H - H0| or |J - J0| exceeds drift_factor * (abs + rel * max(1, |v0|)).
  double drift_factor = 100.0;
  long max_steps = 10'000'000;
  // Pull each accepted state back onto the level set of (H, J) when the
  // correction is no larger than the local error tolerance.
  bool project_invariants = true;

  static FlowOptions from(const Tolerances& t) {
    FlowOptions o;
    o.rel_tol = t.rel;
    o.abs_tol = t.abs;
    return o;
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  double drift_H = 0.0;
  double drift_J = 0.0;
  double constraint_drift = 0.0;
};

struct FlowEnd {
  Vec x;
  double t = 0.0;
  long steps = 0;
  double drift_H = 0.0;
  double drift_J = 0.0;
  double constraint_drift = 0.0;
};

namespace detail {

struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

// One min-norm Newton step on (c, H - H0, J - J0); rejected when it would
// move the state further than the step tolerance allows.
inline void correct_invariants(const SystemModel& sys, Vec& x, double H0, double J0,
                               const FlowOptions& opt) {
  const Eigen::Index nc = static_cast<Eigen::Index>(sys.constraints.size());
  Vec r(nc + 2);
  Mat d(nc + 2, sys.dim);
  if (nc > 0) {
    r.head(nc) = constraint_values(sys, x);
    d.topRows(nc) = constraint_jacobian(sys, x);
  }
  r[nc] = sys.H(x) - H0;
  r[nc + 1] = sys.J(x) - J0;
  d.row(nc) = sys.H.gradient(x).transpose();
  d.row(nc + 1) = sys.J.gradient(x).transpose();
  Vec dx = min_norm_solve(d, r, 1e-6);
  double allowed = opt.abs_tol + opt.rel_tol * x.cwiseAbs().maxCoeff();
  if (!dx.allFinite() || dx.cwiseAbs().maxCoeff() > allowed) return;
  Vec y = x - dx;
  if (constraint_residual(sys, y) > sys.tol.constraint) return;
  if (std::abs(sys.H(y) - H0) + std::abs(sys.J(y) - J0) >= std::abs(r[nc]) + std::abs(r[nc + 1]))
    return;
  x = y;
}

}  // namespace detail

/// Integrates from x0 over signed time t_end. `observer(t, x)` runs after every
/// accepted (and projected) step; returning false stops early.
inline FlowEnd integrate_observed(const SystemModel& sys, const Expression& f, const Vec& x0,
                                  double t_end, const FlowOptions& opt,
                                  const std::function<bool(double, const Vec&)>& observer = {}) {
  using K = detail::Dopri5;
  const char* op = "integrate_flow";
  require_feasible(sys, x0, op);
  auto rhs = [&](const Vec& x) { return vector_field_raw(sys, f, x); };

  FlowEnd out;
  out.x = x0;
  const double dir = t_end < 0 ? -1.0 : 1.0;
  const double span = std::abs(t_end);
  const double H0 = sys.H(x0);
  const double J0 = sys.J(x0);
  auto limit = [&](double v0) {
    return opt.drift_factor * (opt.abs_tol + opt.rel_tol * std::max(1.0, std::abs(v0)));
  };
  if (span == 0.0) return out;

  Vec x = x0;
  Vec k1 = rhs(x);
  double done = 0.0;
  double h = std::min({span, opt.max_step, 1e-2 / std::max(1e-12, k1.norm())});
  h = std::max(h, 1e-6 * span);
  while (done < span) {
    if (out.steps >= opt.max_steps) throw NumericError(op, "step budget exhausted");
    h = std::min({h, span - done, opt.max_step});
    if (h < 1e-14 * std::max(1.0, done) && h < span - done)
      throw NumericError(op, "step-size underflow");
    const double s = dir * h;
    Vec k2 = rhs(x + s * (K::a21 * k1));
    Vec k3 = rhs(x + s * (K::a31 * k1 + K::a32 * k2));
    Vec k4 = rhs(x + s * (K::a41 * k1 + K::a42 * k2 + K::a43 * k3));
    Vec k5 = rhs(x + s * (K::a51 * k1 + K::a52 * k2 + K::a53 * k3 + K::a54 * k4));
    Vec k6 = rhs(x + s * (K::a61 * k1 + K::a62 * k2 + K::a63 * k3 + K::a64 * k4 + K::a65 * k5));
    Vec xn = x + s * (K::b1 * k1 + K::b3 * k3 + K::b4 * k4 + K::b5 * k5 + K::b6 * k6);
    Vec k7 = rhs(xn);
    Vec err = s * (K::e1 * k1 + K::e3 * k3 + K::e4 * k4 + K::e5 * k5 + K::e6 * k6 + K::e7 * k7);
    double en = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(x[i]), std::abs(xn[i]));
      en = std::max(en, std::abs(err[i]) / sc);
    }
    if (!std::isfinite(en)) {
      h *= 0.1;
      continue;
    }
    if (en <= 1.0) {
      auto proj = try_project(sys, xn);
      if (!proj) throw NumericError(op, "projection onto the constraint set failed");
      x = *proj;
      if (opt.project_invariants) detail::correct_invariants(sys, x, H0, J0, opt);
      done += h;
      ++out.steps;
      k1 = sys.constraints.empty() ? k7 : rhs(x);
      out.drift_H = std::max(out.drift_H, std::abs(sys.H(x) - H0));
      out.drift_J = std::max(out.drift_J, std::abs(sys.J(x) - J0));
      out.constraint_drift = std::max(out.constraint_drift, constraint_residual(sys, x));
      if (out.drift_H > limit(H0) || out.drift_J > limit(J0))
        throw NumericError(op, "conserved-quantity drift exceeds tolerance (dH=" +
                                   std::to_string(out.drift_H) +
                                   ", dJ=" + std::to_string(out.drift_J) + ")");
      if (observer && !observer(dir * done, x)) break;
    }
    double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    h *= factor;
  }
  out.x = x;
  out.t = dir * done;
  return out;
}

/// Integrates and records every accepted step.
inline Trajectory integrate_flow(const SystemModel& sys, const Expression& f, const Vec& x0,
                                 double t_end, const FlowOptions& opt) {
  Trajectory tr;
  tr.times.push_back(0.0);
  tr.states.push_back(x0);
  FlowEnd end = integrate_observed(sys, f, x0, t_end, opt, [&](double t, const Vec& x) {
    tr.times.push_back(t);
    tr.states.push_back(x);
    return true;
  });
  tr.drift_H = end.drift_H;
  tr.drift_J = end.drift_J;
  tr.constraint_drift = end.constraint_drift;
  return tr;
}

inline Trajectory integrate_flow(const SystemModel& sys, const Expression& f, const Vec& x0,
                                 double t_end) {
  return integrate_flow(sys, f, x0, t_end, FlowOptions::from(sys.tol));
}

/// End point of the flow of f after signed time t.
inline Vec flow_to(const SystemModel& sys, const Expression& f, const Vec& x0, double t,
                   const FlowOptions& opt) {
  return integrate_observed(sys, f, x0, t, opt).x;
}

}  // namespace monodromy
