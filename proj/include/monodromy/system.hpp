#pragma once

// Integrable systems (M, Omega, H, J) embedded in R^N.
//
// M is the common zero set of the constraints. The Poisson structure is given
// by an antisymmetric bivector B(x) whose entries are expressions (stored for
// i < j only). Two kinds of constraints are supported: Casimirs of B (spheres
// in a spin bracket) and second-class constraints (T*S^2 inside canonical
// R^6). Hamiltonian vector fields are corrected along B * grad(c) so that they
// are tangent to M, which is the Dirac-bracket flow restricted to M.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "monodromy/error.hpp"
#include "monodromy/expr.hpp"
#include "monodromy/linalg.hpp"

namespace monodromy {

struct Tolerances {
  double rel = 1e-10;
  double abs = 1e-12;
  double constraint = 1e-12;
  // Points with a larger constraint residual are rejected by checked entry points.
  double feasibility = 1e-8;
};

struct BivectorEntry {
  int i = 0;  // i < j, 0-based
  int j = 0;
  Expression value;
};

struct SystemModel {
  std::string name;
  int dim = 0;
  Expression H;
  Expression J;
  std::vector<BivectorEntry> bivector;
  std::vector<Expression> constraints;
  int orientation = 1;
  std::vector<std::pair<double, double>> bounds;
  std::vector<Vec> fiber_seed_hints;
  Tolerances tol;
};

enum class BuiltinSystem { spherical_pendulum, champagne_bottle, coupled_spin_s2s2 };

inline std::optional<BuiltinSystem> builtin_from_name(std::string_view name) {
  if (name == "spherical_pendulum") return BuiltinSystem::spherical_pendulum;
  if (name == "champagne_bottle") return BuiltinSystem::champagne_bottle;
  if (name == "coupled_spin_s2s2") return BuiltinSystem::coupled_spin_s2s2;
  return std::nullopt;
}

/// Validates the shape of a model assembled by hand or from a config.
inline void validate_system(const SystemModel& sys) {
  if (sys.dim <= 0) throw ConfigError("system dimension must be positive");
  auto check = [&](const Expression& e, const std::string& what) {
    if (e.empty()) throw ConfigError(what + " is missing");
    if (e.dim() != sys.dim) throw ConfigError(what + " has wrong dimension");
  };
  check(sys.H, "hamiltonian");
  check(sys.J, "momentum");
  for (const auto& c : sys.constraints) check(c, "constraint");
  for (const auto& b : sys.bivector) {
    if (b.i < 0 || b.j <= b.i || b.j >= sys.dim)
      throw ConfigError("bivector entries must satisfy 0 <= i < j < dim");
    check(b.value, "bivector entry");
  }
  if (sys.dim - static_cast<int>(sys.constraints.size()) != 4)
    throw ConfigError("phase space must be 4-dimensional (dim - #constraints = 4)");
  if (sys.orientation != 1 && sys.orientation != -1)
    throw ConfigError("orientation must be +1 or -1");
  if (!sys.bounds.empty() && static_cast<int>(sys.bounds.size()) != sys.dim)
    throw ConfigError("bounds must list one interval per variable");
  for (const auto& [lo, hi] : sys.bounds)
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
      throw ConfigError("bounds must be finite intervals with lo < hi");
}

namespace detail {

inline SystemModel make_system(std::string name, int dim, std::string_view h, std::string_view j,
                               std::vector<std::tuple<int, int, std::string>> bivector,
                               std::vector<std::string> constraints,
                               std::vector<std::pair<double, double>> bounds) {
  SystemModel s;
  s.name = std::move(name);
  s.dim = dim;
  s.H = parse_expression(h, dim);
  s.J = parse_expression(j, dim);
  for (auto& [i, k, e] : bivector) s.bivector.push_back({i, k, parse_expression(e, dim)});
  for (auto& c : constraints) s.constraints.push_back(parse_expression(c, dim));
  s.bounds = std::move(bounds);
  validate_system(s);
  return s;
}

}  // namespace detail

/// Built-in systems.
///
/// spherical_pendulum: (x, y, z, px, py, pz) in canonical R^6 restricted to
///   T*S^2; H = |p|^2/2 + z, J = x py - y px.
/// champagne_bottle: canonical R^4 with H = |p|^2/2 + r^4 - r^2, J = x py - y px.
/// coupled_spin_s2s2: (x1, y1, z1, x2, y2, z2) on S^2 x S^2 with the form
///   omega + 2 omega, realized as spin brackets scaled 1 and 1/2;
///   H = z1/4 + z2/4 + (x1 x2 + y1 y2)/2 and J = z1 + 2 z2, with critical
///   values -3, -1, 1, 3 of J.
inline SystemModel builtin_system(BuiltinSystem which) {
  switch (which) {
    case BuiltinSystem::spherical_pendulum:
      return detail::make_system(
          "spherical_pendulum", 6, "0.5*(x4^2+x5^2+x6^2) + x3", "x1*x5 - x2*x4",
          {{0, 3, "1"}, {1, 4, "1"}, {2, 5, "1"}},
          {"x1^2+x2^2+x3^2-1", "x1*x4+x2*x5+x3*x6"},
          {{-1, 1}, {-1, 1}, {-1, 1}, {-2, 2}, {-2, 2}, {-2, 2}});
    case BuiltinSystem::champagne_bottle:
      return detail::make_system(
          "champagne_bottle", 4, "0.5*(x3^2+x4^2) + (x1^2+x2^2)^2 - (x1^2+x2^2)",
          "x1*x4 - x2*x3", {{0, 2, "1"}, {1, 3, "1"}}, {},
          {{-1.5, 1.5}, {-1.5, 1.5}, {-2, 2}, {-2, 2}});
    case BuiltinSystem::coupled_spin_s2s2:
      return detail::make_system(
          "coupled_spin_s2s2", 6, "0.25*x3 + 0.25*x6 + 0.5*(x1*x4+x2*x5)", "x3 + 2*x6",
          {{0, 1, "x3"}, {0, 2, "-x2"}, {1, 2, "x1"},
           {3, 4, "0.5*x6"}, {3, 5, "-0.5*x5"}, {4, 5, "0.5*x4"}},
          {"x1^2+x2^2+x3^2-1", "x4^2+x5^2+x6^2-1"},
          {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}});
  }
  throw ConfigError("unknown builtin system");
}

inline SystemModel builtin_system(std::string_view name) {
  auto which = builtin_from_name(name);
  if (!which) throw ConfigError("unknown builtin system '" + std::string(name) + "'");
  return builtin_system(*which);
}

// ---------------------------------------------------------------------------
// Constraint geometry

inline Vec constraint_values(const SystemModel& sys, const Vec& x) {
  Vec c(static_cast<Eigen::Index>(sys.constraints.size()));
  for (std::size_t k = 0; k < sys.constraints.size(); ++k) c[k] = sys.constraints[k](x);
  return c;
}

inline Mat constraint_jacobian(const SystemModel& sys, const Vec& x) {
  Mat d(static_cast<Eigen::Index>(sys.constraints.size()), sys.dim);
  for (std::size_t k = 0; k < sys.constraints.size(); ++k)
    d.row(static_cast<Eigen::Index>(k)) = sys.constraints[k].gradient(x).transpose();
  return d;
}

inline double constraint_residual(const SystemModel& sys, const Vec& x) {
  if (sys.constraints.empty()) return 0.0;
  return constraint_values(sys, x).cwiseAbs().maxCoeff();
}

inline void require_feasible(const SystemModel& sys, const Vec& x, const char* op) {
  if (x.size() != sys.dim) throw Error(std::string(op) + ": state has wrong dimension");
  double r = constraint_residual(sys, x);
  if (!(r <= sys.tol.feasibility))
    throw NumericError(op, "constraint violation " + std::to_string(r) + " beyond tolerance");
}

/// Gauss-Newton projection onto M with minimum-norm steps. Returns nullopt
/// when the residual does not drop below the constraint tolerance.
inline std::optional<Vec> try_project(const SystemModel& sys, Vec x, int max_iter = 50) {
  for (int it = 0; it <= max_iter; ++it) {
    Vec c = constraint_values(sys, x);
    if (c.size() == 0 || c.cwiseAbs().maxCoeff() < sys.tol.constraint) return x;
    if (it == max_iter || !c.allFinite()) break;
    x -= min_norm_solve(constraint_jacobian(sys, x), c, 1e-14);
  }
  return std::nullopt;
}

inline Vec project_to_manifold(const SystemModel& sys, const Vec& x) {
  if (x.size() != sys.dim) throw Error("project_to_manifold: state has wrong dimension");
  auto p = try_project(sys, x);
  if (!p) throw NumericError("project_to_manifold", "no convergence in 50 iterations");
  return *p;
}

// ---------------------------------------------------------------------------
// Poisson structure and vector fields

inline Mat bivector_raw(const SystemModel& sys, const Vec& x) {
  Mat b = Mat::Zero(sys.dim, sys.dim);
  for (const auto& e : sys.bivector) {
    double v = e.value(x);
    b(e.i, e.j) = v;
    b(e.j, e.i) = -v;
  }
  return b;
}

inline Mat bivector_at(const SystemModel& sys, const Vec& x) {
  require_feasible(sys, x, "bivector_at");
  return bivector_raw(sys, x);
}

/// Pieces of the tangent correction at x: B, Dc and the pseudo-inverse of
/// Dc B Dc^T (zero for Casimir constraints).
struct PoissonFrame {
  Mat B;
  Mat Dc;
  Mat Minv;

  PoissonFrame(const SystemModel& sys, const Vec& x)
      : B(bivector_raw(sys, x)), Dc(constraint_jacobian(sys, x)) {
    const auto k = Dc.rows();
    Minv = Mat::Zero(k, k);
    if (k == 0) return;
    Mat m = Dc * B * Dc.transpose();
    double scale = std::max(1.0, Dc.squaredNorm() * std::max(1.0, B.norm()));
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = s[i] > 1e-10 * scale ? 1.0 / s[i] : 0.0;
    Minv = svd.matrixV() * s.asDiagonal() * svd.matrixU().transpose();
  }

  /// Multipliers mu for the covector g: X = B (g - Dc^T mu) is tangent.
  Vec multipliers(const Vec& g) const {
    if (Dc.rows() == 0) return Vec();
    return Minv * (Dc * (B * g));
  }

  Vec field(const Vec& g) const {
    if (Dc.rows() == 0) return B * g;
    return B * (g - Dc.transpose() * multipliers(g));
  }

  /// Projector onto ker Dc along range(B Dc^T).
  Mat projector() const {
    Mat p = Mat::Identity(B.rows(), B.cols());
    if (Dc.rows() == 0) return p;
    return p - B * Dc.transpose() * Minv * Dc;
  }

  /// Dirac bracket matrix, whose range lies in the tangent space of M.
  Mat dirac() const {
    if (Dc.rows() == 0) return B;
    return B - B * Dc.transpose() * Minv * Dc * B;
  }
};

inline Vec vector_field_raw(const SystemModel& sys, const Expression& f, const Vec& x) {
  return PoissonFrame(sys, x).field(f.gradient(x));
}

/// X_f(x) = B(x) grad f(x), corrected to be tangent to the constraint set.
inline Vec hamiltonian_vector_field(const SystemModel& sys, const Expression& f, const Vec& x) {
  require_feasible(sys, x, "hamiltonian_vector_field");
  return vector_field_raw(sys, f, x);
}

// ---------------------------------------------------------------------------
// Sampling

inline Vec random_in_bounds(const SystemModel& sys, std::mt19937_64& rng) {
  Vec x(sys.dim);
  for (int i = 0; i < sys.dim; ++i) {
    auto [lo, hi] = sys.bounds.empty() ? std::pair{-1.0, 1.0} : sys.bounds[i];
    x[i] = std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  return x;
}

/// Random points on M: uniform box samples pushed onto M by projection.
inline std::vector<Vec> sample_feasible_points(const SystemModel& sys, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(n));
  int attempts = 0;
  while (static_cast<int>(out.size()) < n) {
    if (++attempts > 100 * n + 100)
      throw NumericError("sample_feasible_points", "could not reach the constraint set");
    if (auto p = try_project(sys, random_in_bounds(sys, rng), 100)) out.push_back(*p);
  }
  return out;
}

/// max |{H, J}| = max |grad H . X_J| over random points of M.
inline double commutation_defect(const SystemModel& sys, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw Error("commutation_defect: n_samples must be >= 1");
  double worst = 0.0;
  for (const Vec& x : sample_feasible_points(sys, n_samples, seed)) {
    double v = sys.H.gradient(x).dot(vector_field_raw(sys, sys.J, x));
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Compactness: products of unit spheres

struct SphereBlock {
  int first = 0;  // indices first, first+1, first+2
};

/// Detects M as a product of unit 2-spheres, one constraint
/// x_a^2 + x_b^2 + x_c^2 - 1 per consecutive variable triple covering every
/// variable. Returns nullopt otherwise.
inline std::optional<std::vector<SphereBlock>> sphere_product_blocks(const SystemModel& sys) {
  if (sys.constraints.empty() || static_cast<int>(sys.constraints.size()) * 3 != sys.dim)
    return std::nullopt;
  std::vector<SphereBlock> blocks;
  std::vector<bool> used(static_cast<std::size_t>(sys.dim), false);
  std::mt19937_64 rng(7);
  for (const auto& c : sys.constraints) {
    Vec zero = Vec::Zero(sys.dim);
    if (std::abs(c(zero) + 1.0) > 1e-14 || c.gradient(zero).norm() > 1e-14) return std::nullopt;
    Mat h = c.hessian(zero);
    int first = -1;
    for (int i = 0; i < sys.dim; ++i)
      if (h(i, i) != 0.0) {
        first = i;
        break;
      }
    if (first < 0 || first + 3 > sys.dim) return std::nullopt;
    Mat expect = Mat::Zero(sys.dim, sys.dim);
    expect.block(first, first, 3, 3) = 2.0 * Mat::Identity(3, 3);
    for (int trial = 0; trial < 3; ++trial) {
      Vec p = Vec::NullaryExpr(sys.dim, [&](Eigen::Index) {
        return std::uniform_real_distribution<double>(-1, 1)(rng);
      });
      double predicted = p.segment(first, 3).squaredNorm() - 1.0;
      if ((c.hessian(p) - expect).norm() > 1e-12 || std::abs(c(p) - predicted) > 1e-12)
        return std::nullopt;
    }
    for (int i = first; i < first + 3; ++i) {
      if (used[static_cast<std::size_t>(i)]) return std::nullopt;
      used[static_cast<std::size_t>(i)] = true;
    }
    blocks.push_back({first});
  }
  return blocks;
}

inline bool is_compact(const SystemModel& sys) { return sphere_product_blocks(sys).has_value(); }

}  // namespace monodromy
