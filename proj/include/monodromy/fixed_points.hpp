#pragma once

// Fixed points of the circle action: search, tangent linearization, Morse
// data, singularity type and the +-1 sign from the weights of the action.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "monodromy/error.hpp"
#include "monodromy/linalg.hpp"
#include "monodromy/parallel.hpp"
#include "monodromy/system.hpp"

namespace monodromy {

enum class SingType { elliptic_elliptic, focus_focus, unsupported };

inline const char* to_string(SingType t) {
  switch (t) {
    case SingType::elliptic_elliptic: return "elliptic_elliptic";
    case SingType::focus_focus: return "focus_focus";
    case SingType::unsupported: return "unsupported";
  }
  return "unsupported";
}

using Spectrum = std::vector<std::complex<double>>;

struct FixedPointRecord {
  int id = 0;
  Vec position;
  double value_H = 0.0;
  double value_J = 0.0;
  // Morse data of H and of J.
  int morse_index = 0;
  bool nondegenerate = false;
  int morse_index_J = 0;
  bool nondegenerate_J = false;
  SingType sing_type = SingType::unsupported;
  std::pair<int, int> weights{1, 1};
  int sign = -1;
  Spectrum eigen_H;
  Spectrum eigen_J;
};

struct FixedPointOptions {
  int grid_density = 3;
  std::uint64_t seed = 1;
  int classify_trials = 16;
  double dedupe = 1e-6;
  double field_tol = 1e-10;
};

namespace detail {

// Sum of mu_k Hess c_k.
inline Mat weighted_constraint_hessian(const SystemModel& sys, const Vec& x, const Vec& mu) {
  Mat h = Mat::Zero(sys.dim, sys.dim);
  for (std::size_t k = 0; k < sys.constraints.size(); ++k)
    h += mu[static_cast<Eigen::Index>(k)] * sys.constraints[k].hessian(x);
  return h;
}

inline Spectrum spectrum(const Mat& a) {
  Eigen::EigenSolver<Mat> es(a, false);
  Spectrum s(es.eigenvalues().begin(), es.eigenvalues().end());
  std::sort(s.begin(), s.end(), [](auto l, auto r) {
    return l.real() != r.real() ? l.real() < r.real() : l.imag() < r.imag();
  });
  return s;
}

// Newton on grad J = Dc^T lambda, c = 0 from x0. Returns the converged point.
inline std::optional<Vec> newton_fixed_point(const SystemModel& sys, Vec x) {
  const int n = sys.dim;
  const int k = static_cast<int>(sys.constraints.size());
  auto proj = try_project(sys, x);
  if (!proj) return std::nullopt;
  x = *proj;
  Vec lambda = min_norm_solve(constraint_jacobian(sys, x).transpose(), sys.J.gradient(x), 1e-12);
  auto residual = [&](const Vec& y, const Vec& l) {
    Vec r(n + k);
    r.head(n) = sys.J.gradient(y);
    if (k > 0) {
      r.head(n) -= constraint_jacobian(sys, y).transpose() * l;
      r.tail(k) = constraint_values(sys, y);
    }
    return r;
  };
  Vec r = residual(x, lambda);
  for (int it = 0; it < 60; ++it) {
    if (!r.allFinite()) return std::nullopt;
    if (r.cwiseAbs().maxCoeff() < 1e-13) return x;
    Mat jac = Mat::Zero(n + k, n + k);
    jac.topLeftCorner(n, n) = sys.J.hessian(x) - weighted_constraint_hessian(sys, x, lambda);
    if (k > 0) {
      Mat dc = constraint_jacobian(sys, x);
      jac.topRightCorner(n, k) = -dc.transpose();
      jac.bottomLeftCorner(k, n) = dc;
    }
    Vec step = min_norm_solve(jac, r, 1e-12);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 20; ++ls, t *= 0.5) {
      Vec xn = x - t * step.head(n);
      Vec ln = lambda - t * step.tail(k);
      Vec rn = residual(xn, ln);
      if (rn.allFinite() && rn.norm() < r.norm()) {
        x = xn;
        lambda = ln;
        r = rn;
        moved = true;
        break;
      }
    }
    if (!moved) return r.cwiseAbs().maxCoeff() < 1e-11 ? std::optional<Vec>(x) : std::nullopt;
  }
  return r.cwiseAbs().maxCoeff() < 1e-11 ? std::optional<Vec>(x) : std::nullopt;
}

inline bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) <= 1e-8) continue;
    return a[i] < b[i];
  }
  return false;
}

}  // namespace detail

/// Orthonormal basis (columns) of the tangent space of M at x, positively
/// oriented for the symplectic orientation times sys.orientation.
inline Mat tangent_basis(const SystemModel& sys, const Vec& x) {
  PoissonFrame pf(sys, x);
  Mat e = null_space(pf.Dc, sys.dim);
  if (e.cols() != 4)
    throw NumericError("tangent_linearization",
                       "constraint Jacobian is rank deficient (tangent dimension " +
                           std::to_string(e.cols()) + ")");
  double pf4 = pfaffian4(e.transpose() * pf.dirac() * e);
  if (std::abs(pf4) < 1e-12)
    throw NumericError("tangent_linearization", "Poisson structure degenerate on the tangent space");
  if (pf4 * sys.orientation < 0) e.col(3) *= -1.0;
  return e;
}

/// Matrix of D(X_f) at a fixed point p in the positive tangent basis.
inline Mat tangent_linearization(const SystemModel& sys, const Expression& f, const Vec& p) {
  require_feasible(sys, p, "tangent_linearization");
  PoissonFrame pf(sys, p);
  Vec g = f.gradient(p);
  Vec mu = pf.multipliers(g);
  Vec w = sys.constraints.empty() ? g : Vec(g - pf.Dc.transpose() * mu);
  Mat hl = f.hessian(p);
  if (!sys.constraints.empty()) hl -= detail::weighted_constraint_hessian(sys, p, mu);
  // D B[v] w, column by column: d/dx_l of B(x) w.
  Mat dbw = Mat::Zero(sys.dim, sys.dim);
  for (const auto& e : sys.bivector) {
    Vec grad = e.value.gradient(p);
    dbw.row(e.i) += w[e.j] * grad.transpose();
    dbw.row(e.j) -= w[e.i] * grad.transpose();
  }
  Mat a = pf.projector() * (dbw + pf.B * hl);
  Mat e = tangent_basis(sys, p);
  return e.transpose() * a * e;
}

inline Mat tangent_linearization(const SystemModel& sys, const Expression& f,
                                 const FixedPointRecord& p) {
  return tangent_linearization(sys, f, p.position);
}

/// Focus-focus if some combination c1 A_H + c2 A_J has a complex quadruple,
/// elliptic-elliptic if every sampled combination is purely imaginary.
inline SingType classify_singularity(const Mat& a_h, const Mat& a_j, int trials,
                                     std::uint64_t seed) {
  double defect = (a_h * a_j - a_j * a_h).cwiseAbs().maxCoeff();
  if (defect > 1e-8)
    throw NumericError("classify_singularity",
                       "linearizations do not commute (defect " + std::to_string(defect) + ")");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2 * 3.14159265358979323846);
  bool all_imaginary = true;
  for (int t = 0; t < trials; ++t) {
    double phi = angle(rng);
    for (auto ev : detail::spectrum(std::cos(phi) * a_h + std::sin(phi) * a_j)) {
      double re = std::abs(ev.real()), im = std::abs(ev.imag());
      if (re > 1e-6 && im > 1e-6) return SingType::focus_focus;
      if (re > 1e-8) all_imaginary = false;
    }
  }
  return all_imaginary ? SingType::elliptic_elliptic : SingType::unsupported;
}

struct CircleWeights {
  std::pair<int, int> weights;
  int sign = 0;
};

/// Weights of the linearized circle action in the positive tangent basis.
/// With A_J^2 = -1 the complex structure A_J orients the tangent space; it
/// agrees with the positive orientation for the Hopf model (1, 1) and is
/// opposite for the anti-Hopf model (-1, 1).
inline CircleWeights circle_weights(const Mat& a_j) {
  for (auto ev : detail::spectrum(a_j))
    if (std::abs(ev.real()) > 1e-6 || std::abs(std::abs(ev.imag()) - 1.0) > 1e-6)
      throw NumericError("circle_weights", "non-unit weight (eigenvalue " +
                                               std::to_string(ev.real()) + (ev.imag() < 0 ? "" : "+") +
                                               std::to_string(ev.imag()) + "i)");
  if ((a_j * a_j + Mat::Identity(4, 4)).cwiseAbs().maxCoeff() > 1e-6)
    throw NumericError("circle_weights", "non-unit weight (linearized action is not periodic)");
  // Pick u1 and u2 so that (u1, A u1, u2, A u2) is a basis.
  Mat best;
  double best_det = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      Mat m(4, 4);
      Vec u1 = Vec::Unit(4, i), u2 = Vec::Unit(4, j);
      m << u1, a_j * u1, u2, a_j * u2;
      double d = m.determinant();
      if (std::abs(d) > std::abs(best_det)) best_det = d;
    }
  if (std::abs(best_det) < 1e-6)
    throw NumericError("circle_weights", "invariant planes are degenerate");
  if (best_det > 0) return {{1, 1}, -1};
  return {{-1, 1}, +1};
}

inline CircleWeights circle_weights(const SystemModel& sys, const FixedPointRecord& p) {
  return circle_weights(tangent_linearization(sys, sys.J, p.position));
}

struct MorseData {
  int index = 0;
  bool nondegenerate = false;
};

/// Index and nondegeneracy of f restricted to M at p, via the Hessian of the
/// Lagrangian on the tangent space.
inline MorseData morse_data(const SystemModel& sys, const Vec& p, const Expression& f) {
  Vec g = f.gradient(p);
  Mat h = f.hessian(p);
  if (!sys.constraints.empty()) {
    Mat dc = constraint_jacobian(sys, p);
    Vec lambda = min_norm_solve(dc.transpose(), g, 1e-12);
    h -= detail::weighted_constraint_hessian(sys, p, lambda);
  }
  Mat e = null_space(constraint_jacobian(sys, p), sys.dim);
  Eigen::SelfAdjointEigenSolver<Mat> es(e.transpose() * h * e);
  MorseData out;
  out.nondegenerate = true;
  for (double v : es.eigenvalues()) {
    if (v < 0) ++out.index;
    if (std::abs(v) <= 1e-8) out.nondegenerate = false;
  }
  return out;
}

inline MorseData morse_data(const SystemModel& sys, const FixedPointRecord& p, const Expression& f) {
  return morse_data(sys, p.position, f);
}

/// Fills every derived field of a record from its position.
inline FixedPointRecord make_fixed_point_record(const SystemModel& sys, const Vec& x, int id,
                                                const FixedPointOptions& opt = {}) {
  FixedPointRecord r;
  r.id = id;
  r.position = x;
  r.value_H = sys.H(x);
  r.value_J = sys.J(x);
  auto mh = morse_data(sys, x, sys.H);
  auto mj = morse_data(sys, x, sys.J);
  r.morse_index = mh.index;
  r.nondegenerate = mh.nondegenerate;
  r.morse_index_J = mj.index;
  r.nondegenerate_J = mj.nondegenerate;
  Mat a_h = tangent_linearization(sys, sys.H, x);
  Mat a_j = tangent_linearization(sys, sys.J, x);
  r.eigen_H = detail::spectrum(a_h);
  r.eigen_J = detail::spectrum(a_j);
  r.sing_type = classify_singularity(a_h, a_j, opt.classify_trials, opt.seed);
  auto cw = circle_weights(a_j);
  r.weights = cw.weights;
  r.sign = cw.sign;
  return r;
}

/// Newton search for zeros of X_J on M from a jittered grid over the bounds
/// plus the system's seed hints. Records are sorted lexicographically by
/// position and numbered in that order.
inline std::vector<FixedPointRecord> find_fixed_points(const SystemModel& sys,
                                                       const FixedPointOptions& opt = {}) {
  const char* op = "find_fixed_points";
  if (sys.bounds.empty()) throw ConfigError("find_fixed_points: system bounds are required");
  if (opt.grid_density < 1) throw ConfigError("find_fixed_points: grid_density must be >= 1");

  std::vector<Vec> seeds = sys.fiber_seed_hints;
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  long total = 1;
  for (int i = 0; i < sys.dim; ++i) total *= opt.grid_density;
  for (long c = 0; c < total; ++c) {
    Vec x(sys.dim);
    long rest = c;
    for (int i = 0; i < sys.dim; ++i) {
      auto [lo, hi] = sys.bounds[static_cast<std::size_t>(i)];
      long cell = rest % opt.grid_density;
      rest /= opt.grid_density;
      x[i] = lo + (hi - lo) * (static_cast<double>(cell) + jitter(rng)) / opt.grid_density;
    }
    seeds.push_back(x);
  }

  auto found = parallel_map<std::optional<Vec>>(seeds.size(), [&](std::size_t i) {
    return detail::newton_fixed_point(sys, seeds[i]);
  });

  std::vector<Vec> points;
  for (const auto& f : found) {
    if (!f) continue;
    bool dup = std::any_of(points.begin(), points.end(),
                           [&](const Vec& p) { return (p - *f).norm() < opt.dedupe; });
    if (!dup) points.push_back(*f);
  }
  std::sort(points.begin(), points.end(), detail::lex_less);

  std::vector<FixedPointRecord> out;
  for (const Vec& p : points) {
    double xj = vector_field_raw(sys, sys.J, p).cwiseAbs().maxCoeff();
    double xh = vector_field_raw(sys, sys.H, p).cwiseAbs().maxCoeff();
    if (xj > opt.field_tol) continue;
    if (xh > opt.field_tol)
      throw NumericError(op, "fixed point of the circle action is not critical for H (|X_H| = " +
                                 std::to_string(xh) + ")");
    out.push_back(make_fixed_point_record(sys, p, static_cast<int>(out.size()), opt));
  }
  return out;
}

}  // namespace monodromy
