#pragma once

// The image of F = (J, H): relative-equilibrium boundary curves, diagram
// sampling on a grid of values, loop regularity, and the Monte Carlo
// pushforward density of J (Duistermaat-Heckman profile).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "monodromy/chern.hpp"
#include "monodromy/error.hpp"
#include "monodromy/extremum.hpp"
#include "monodromy/fixed_points.hpp"
#include "monodromy/parallel.hpp"
#include "monodromy/rotation.hpp"
#include "monodromy/system.hpp"

namespace monodromy {

// ---------------------------------------------------------------------------
// Relative equilibria

enum class CurveKind { min, max };

inline const char* to_string(CurveKind k) { return k == CurveKind::min ? "min" : "max"; }

struct BoundaryCurve {
  CurveKind kind = CurveKind::min;
  std::vector<PlanePoint> points;  // ascending in j
};

namespace detail {

inline std::string number_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// M intersected with {J = j}, for descent on a single momentum level.
inline SystemModel momentum_level(const SystemModel& sys, double j) {
  SystemModel aug = sys;
  aug.constraints.push_back(
      parse_expression("(" + sys.J.print() + ")-(" + number_text(j) + ")", sys.dim));
  return aug;
}

struct LagrangePoint {
  Vec x;
  Vec mult;  // (lambda, mu_1..mu_k)
};

// Newton on grad H = lambda grad J + Dc^T mu, J = j, c = 0. The solutions
// form circle-action orbits, so steps are minimum-norm.
inline std::optional<LagrangePoint> lagrange_newton(const SystemModel& sys, LagrangePoint z,
                                                    double j) {
  const int n = sys.dim;
  const int k = static_cast<int>(sys.constraints.size());
  auto normals = [&](const Vec& x) {
    Mat a(n, 1 + k);
    a.col(0) = sys.J.gradient(x);
    if (k > 0) a.rightCols(k) = constraint_jacobian(sys, x).transpose();
    return a;
  };
  if (z.mult.size() != 1 + k) z.mult = min_norm_solve(normals(z.x), sys.H.gradient(z.x), 1e-12);
  auto residual = [&](const Vec& x, const Vec& m) {
    Vec r(n + 1 + k);
    r.head(n) = sys.H.gradient(x) - normals(x) * m;
    r[n] = sys.J(x) - j;
    if (k > 0) r.tail(k) = constraint_values(sys, x);
    return r;
  };
  Vec r = residual(z.x, z.mult);
  for (int it = 0; it < 40; ++it) {
    if (!r.allFinite()) return std::nullopt;
    if (r.cwiseAbs().maxCoeff() < 1e-11) return z;
    Mat jac = Mat::Zero(n + 1 + k, n + 1 + k);
    Mat hess = sys.H.hessian(z.x) - z.mult[0] * sys.J.hessian(z.x);
    for (int c = 0; c < k; ++c) hess -= z.mult[1 + c] * sys.constraints[static_cast<std::size_t>(c)].hessian(z.x);
    Mat a = normals(z.x);
    jac.topLeftCorner(n, n) = hess;
    jac.topRightCorner(n, 1 + k) = -a;
    jac.bottomLeftCorner(1 + k, n) = a.transpose();
    Vec step = min_norm_solve(jac, r, 1e-10);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 20; ++ls, t *= 0.5) {
      Vec xn = z.x - t * step.head(n);
      Vec mn = z.mult - t * step.tail(1 + k);
      Vec rn = residual(xn, mn);
      if (rn.allFinite() && rn.norm() < r.norm()) {
        z.x = xn;
        z.mult = mn;
        r = rn;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return r.cwiseAbs().maxCoeff() < 1e-10 ? std::optional<LagrangePoint>(z) : std::nullopt;
}

// Extremum of H on {J = j} from sampled starts; nullopt when the level is
// empty or the descent leaves the bounds (no extremum of that kind).
inline std::optional<LagrangePoint> seed_extremum(const SystemModel& sys, double j, CurveKind kind,
                                                  std::uint64_t seed) {
  SystemModel level = momentum_level(sys, j);
  const double dir = kind == CurveKind::min ? 1.0 : -1.0;
  std::optional<ExtremumResult> best;
  for (const Vec& x : sample_feasible_points(sys, 12, seed)) {
    auto start = try_project(level, x, 100);
    if (!start) continue;
    auto r = extremize(level, sys.H, dir, *start);
    if (r.left_bounds) return std::nullopt;
    if (!r.converged) continue;
    if (!best || dir * r.value < dir * best->value) best = r;
  }
  if (!best) return std::nullopt;
  return lagrange_newton(sys, {best->x, Vec()}, j);
}

}  // namespace detail

/// Boundary curve h(j) of the given kind on [j_lo, j_hi] at n equally spaced
/// values, continued outward from the middle of the range.
inline BoundaryCurve relative_equilibria_curve(const SystemModel& sys, double j_lo, double j_hi,
                                               int n, CurveKind kind, std::uint64_t seed = 1) {
  const char* op = "relative_equilibria_curve";
  if (n < 2) throw ConfigError("relative_equilibria_curve: n must be >= 2");
  if (!(j_lo < j_hi)) throw ConfigError("relative_equilibria_curve: empty j range");
  std::vector<double> js(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) js[static_cast<std::size_t>(i)] = j_lo + (j_hi - j_lo) * i / (n - 1);
  const int mid = (n - 1) / 2;
  auto start = detail::seed_extremum(sys, js[static_cast<std::size_t>(mid)], kind, seed);
  if (!start)
    throw NumericError(op, std::string("no ") + to_string(kind) + " curve through j = " +
                               std::to_string(js[static_cast<std::size_t>(mid)]));
  std::vector<std::optional<detail::LagrangePoint>> sol(js.size());
  sol[static_cast<std::size_t>(mid)] = start;
  for (int dir : {1, -1}) {
    detail::LagrangePoint z = *start;
    double j_prev = js[static_cast<std::size_t>(mid)];
    for (int i = mid + dir; i >= 0 && i < n; i += dir) {
      const double target = js[static_cast<std::size_t>(i)];
      int sub = 1;
      std::optional<detail::LagrangePoint> got;
      while (!got && sub <= 64) {
        detail::LagrangePoint w = z;
        bool ok = true;
        for (int s = 1; s <= sub && ok; ++s) {
          auto r = detail::lagrange_newton(sys, w, j_prev + (target - j_prev) * s / sub);
          if (r) w = *r; else ok = false;
        }
        if (ok) got = w;
        sub *= 2;
      }
      // Through a degenerate point (an orbit collapsing onto a fixed point)
      // Newton cannot follow; descend again on the target level instead.
      if (!got) {
        SystemModel level = detail::momentum_level(sys, target);
        if (auto start_x = try_project(level, z.x, 100)) {
          auto e = extremize(level, sys.H, kind == CurveKind::min ? 1.0 : -1.0, *start_x);
          if (e.converged && !e.left_bounds) got = detail::lagrange_newton(sys, {e.x, Vec()}, target);
        }
      }
      if (!got) got = detail::seed_extremum(sys, target, kind, seed);
      if (!got)
        throw NumericError(op, std::string("continuation lost the ") + to_string(kind) +
                                   " branch after j = " + std::to_string(j_prev));
      z = *got;
      j_prev = target;
      sol[static_cast<std::size_t>(i)] = z;
    }
  }
  BoundaryCurve curve;
  curve.kind = kind;
  for (std::size_t i = 0; i < js.size(); ++i) curve.points.push_back({js[i], sys.H(sol[i]->x)});
  return curve;
}

/// Both boundary curves over [j_lo, j_hi]; a kind without extremum (the
/// descent escapes the bounds) is omitted.
inline std::vector<BoundaryCurve> boundary_curves(const SystemModel& sys, double j_lo, double j_hi,
                                                  int n, std::uint64_t seed = 1) {
  std::vector<BoundaryCurve> out;
  for (CurveKind kind : {CurveKind::min, CurveKind::max}) {
    double mid = 0.5 * (j_lo + j_hi);
    if (!detail::seed_extremum(sys, mid, kind, seed)) continue;
    out.push_back(relative_equilibria_curve(sys, j_lo, j_hi, n, kind, seed));
  }
  return out;
}

inline double distance_to_curve(const BoundaryCurve& c, PlanePoint p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < c.points.size(); ++i)
    best = std::min(best, detail::segment_distance(p, c.points[i], c.points[i + 1]));
  if (c.points.size() == 1)
    best = std::hypot(p.j - c.points[0].j, p.h - c.points[0].h);
  return best;
}

/// Linear interpolation of the curve at j, or nullopt outside its j range.
inline std::optional<double> curve_value(const BoundaryCurve& c, double j) {
  for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
    const auto& a = c.points[i];
    const auto& b = c.points[i + 1];
    if (j >= a.j && j <= b.j) return a.h + (b.h - a.h) * (j - a.j) / (b.j - a.j);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Diagram sampling

enum class CellTag { outside_image, regular, near_critical };

inline const char* to_string(CellTag t) {
  switch (t) {
    case CellTag::outside_image: return "outside_image";
    case CellTag::regular: return "regular";
    case CellTag::near_critical: return "near_critical";
  }
  return "";
}

struct DiagramCell {
  PlanePoint f;
  CellTag tag = CellTag::outside_image;
  std::optional<Vec> witness;
  std::string reason;
};

struct DiagramSample {
  int nx = 0;
  int ny = 0;
  std::vector<DiagramCell> cells;  // row-major, j fastest
  std::vector<BoundaryCurve> boundary_curves;
  std::vector<PlanePoint> fixed_point_values;
};

struct PlaneBox {
  double j_lo = 0, j_hi = 0, h_lo = 0, h_hi = 0;
};

struct ImageContext {
  std::vector<BoundaryCurve> curves;
  std::vector<PlanePoint> fixed_values;
  std::vector<Vec> hints;
  double j_min = -std::numeric_limits<double>::infinity();
  double j_max = std::numeric_limits<double>::infinity();
};

/// Boundary curves over the requested j window, clipped to the range of J.
inline ImageContext image_context(const SystemModel& sys, const std::vector<FixedPointRecord>& fps,
                                  double j_lo, double j_hi, int n_curve = 121,
                                  std::uint64_t seed = 1) {
  ImageContext ctx;
  for (const auto& fp : fps) {
    ctx.fixed_values.push_back({fp.value_J, fp.value_H});
    ctx.hints.push_back(fp.position);
  }
  auto [lo, hi] = value_range(sys, sys.J, 8, seed);
  ctx.j_min = lo;
  ctx.j_max = hi;
  const double pad = 1e-3 * std::max(1.0, std::isfinite(hi - lo) ? hi - lo : 1.0);
  double a = std::max(j_lo, lo + pad), b = std::min(j_hi, hi - pad);
  if (a < b) ctx.curves = boundary_curves(sys, a, b, n_curve, seed);
  return ctx;
}

inline double critical_distance(const ImageContext& ctx, PlanePoint p) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& c : ctx.curves) d = std::min(d, distance_to_curve(c, p));
  for (const auto& v : ctx.fixed_values) d = std::min(d, std::hypot(p.j - v.j, p.h - v.h));
  return d;
}

// Certificate that (j, h) lies outside the image, from the J range and the
// boundary curves.
inline std::optional<std::string> outside_certificate(const ImageContext& ctx, PlanePoint p) {
  if (p.j < ctx.j_min || p.j > ctx.j_max) return "j outside the range of J";
  for (const auto& c : ctx.curves) {
    auto v = curve_value(c, p.j);
    if (!v) continue;
    if (c.kind == CurveKind::min && p.h < *v) return "h below the minimum curve";
    if (c.kind == CurveKind::max && p.h > *v) return "h above the maximum curve";
  }
  return std::nullopt;
}

inline DiagramCell classify_value(const SystemModel& sys, const ImageContext& ctx, PlanePoint p,
                                  double margin, std::uint64_t seed) {
  DiagramCell cell;
  cell.f = p;
  bool near = critical_distance(ctx, p) <= margin;
  if (auto why = outside_certificate(ctx, p); why && !near) {
    cell.tag = CellTag::outside_image;
    cell.reason = *why;
    return cell;
  }
  try {
    Vec x = point_on_fiber(sys, p.h, p.j, ctx.hints, seed);
    cell.witness = x;
    if (near) {
      cell.tag = CellTag::near_critical;
      cell.reason = "within margin of a critical value";
      return cell;
    }
    Vec xh = vector_field_raw(sys, sys.H, x);
    Vec xj = vector_field_raw(sys, sys.J, x);
    Mat two(sys.dim, 2);
    two << xh, xj;
    Eigen::JacobiSVD<Mat> svd(two);
    double smin = svd.singularValues()[1];
    if (smin < 1e-6 * std::max(1.0, svd.singularValues()[0])) {
      cell.tag = CellTag::near_critical;
      cell.reason = "fiber point has rank < 2";
    } else {
      cell.tag = CellTag::regular;
    }
  } catch (const NumericError& e) {
    cell.tag = near ? CellTag::near_critical : CellTag::outside_image;
    cell.reason = e.what();
  }
  return cell;
}

inline DiagramSample sample_bifurcation_diagram(const SystemModel& sys,
                                                const std::vector<FixedPointRecord>& fps,
                                                const PlaneBox& box, int nx, int ny,
                                                std::uint64_t seed = 1, double margin = 1e-3) {
  if (nx < 1 || ny < 1) throw ConfigError("sample_bifurcation_diagram: grid must be at least 1x1");
  if (!(box.j_lo < box.j_hi) || !(box.h_lo < box.h_hi) || !std::isfinite(box.j_hi - box.j_lo) ||
      !std::isfinite(box.h_hi - box.h_lo))
    throw ConfigError("sample_bifurcation_diagram: bounds must be a finite nonempty box");
  ImageContext ctx = image_context(sys, fps, box.j_lo, box.j_hi, 121, seed);
  DiagramSample out;
  out.nx = nx;
  out.ny = ny;
  out.boundary_curves = ctx.curves;
  out.fixed_point_values = ctx.fixed_values;
  out.cells = parallel_map<DiagramCell>(static_cast<std::size_t>(nx * ny), [&](std::size_t idx) {
    int ix = static_cast<int>(idx) % nx, iy = static_cast<int>(idx) / nx;
    PlanePoint p{box.j_lo + (box.j_hi - box.j_lo) * (ix + 0.5) / nx,
                 box.h_lo + (box.h_hi - box.h_lo) * (iy + 0.5) / ny};
    return classify_value(sys, ctx, p, margin, seed);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Loop regularity

struct RegularityIssue {
  double s = 0.0;
  PlanePoint f;
  std::string reason;
};

struct RegularityReport {
  bool pass = false;
  double min_distance = 0.0;
  std::vector<RegularityIssue> issues;
};

inline RegularityReport loop_regularity_check(const SystemModel& sys,
                                              const std::vector<FixedPointRecord>& fps,
                                              const LoopSpec& loop, double margin,
                                              std::uint64_t seed = 1) {
  if (!(margin > 0)) throw ConfigError("loop_regularity_check: margin must be positive");
  RegularityReport rep;
  try {
    validate_loop(loop);
  } catch (const ConfigError& e) {
    rep.issues.push_back({0.0, loop.center, std::string("not a simple loop: ") + e.what()});
    return rep;
  }
  auto pts = loop_samples(loop, loop.n_samples);
  double jl = pts[0].j, jh = pts[0].j;
  for (const auto& p : pts) {
    jl = std::min(jl, p.j);
    jh = std::max(jh, p.j);
  }
  ImageContext ctx = image_context(sys, fps, jl - 2 * margin, jh + 2 * margin, 121, seed);
  rep.min_distance = std::numeric_limits<double>::infinity();
  // Fixed-point values on the curve itself, between samples.
  for (const auto& v : ctx.fixed_values)
    if (distance_to_loop(loop, v) <= margin)
      rep.issues.push_back({-1.0, v, "critical value within margin of the loop"});
  auto cells = parallel_map<DiagramCell>(pts.size(), [&](std::size_t i) {
    return classify_value(sys, ctx, pts[i], margin, seed);
  });
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double s = static_cast<double>(i) / static_cast<double>(pts.size());
    rep.min_distance = std::min(rep.min_distance, critical_distance(ctx, pts[i]));
    if (cells[i].tag != CellTag::regular)
      rep.issues.push_back({s, pts[i], std::string(to_string(cells[i].tag)) +
                                           (cells[i].reason.empty() ? "" : ": " + cells[i].reason)});
  }
  rep.pass = rep.issues.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// Duistermaat-Heckman profile

struct DHKink {
  double j = 0.0;
  double slope_change = 0.0;
  double stderr_ = 0.0;
  double normalized = 0.0;
  double normalized_stderr = 0.0;
  int ledger_jump = 0;
};

struct DHProfile {
  std::vector<double> j_values;
  std::vector<double> volumes;
  std::vector<double> stderrs;
  std::vector<double> fit;
  std::vector<DHKink> kinks;
  double kappa = 0.0;
  double fit_residual = 0.0;  // RMS of volume - fit, as a fraction of the range
  double range = 0.0;
  long samples = 0;
};

/// Default grid: bin centres of width `step` tiling [lo, hi].
inline std::vector<double> dh_grid(double lo, double hi, double step) {
  std::vector<double> g;
  const int n = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i < n; ++i) g.push_back(lo + (i + 0.5) * step);
  return g;
}

/// Monte Carlo estimate of the density of J under the Liouville measure on a
/// product of spheres, with boxcar bins of width equal to the grid spacing,
/// piecewise-linear fits between the critical values of J, and the slope
/// changes compared with the J-ledger up to one shared factor kappa.
inline DHProfile dh_profile(const SystemModel& sys, const std::vector<double>& j_grid,
                            long mc_samples, std::uint64_t seed, const ChernLedger& j_ledger) {
  const char* op = "dh_profile";
  auto blocks = sphere_product_blocks(sys);
  if (!blocks) throw NumericError(op, "noncompact system (phase space is not a product of spheres)");
  if (mc_samples < 10000) throw ConfigError("dh_profile: mc_samples must be >= 10^4");
  if (j_grid.size() < 4) throw ConfigError("dh_profile: j grid needs at least 4 points");
  if (j_ledger.integral != Integral::J) throw Error("dh_profile: ledger must be for J");
  for (std::size_t i = 1; i < j_grid.size(); ++i)
    if (!(j_grid[i] > j_grid[i - 1])) throw ConfigError("dh_profile: j grid must be increasing");

  double width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < j_grid.size(); ++i) width = std::min(width, j_grid[i] - j_grid[i - 1]);

  // Fixed-size batches with their own seeds; counts are summed in batch order.
  const long batch = 50000;
  const long n_batches = (mc_samples + batch - 1) / batch;
  const std::size_t nb = j_grid.size();
  auto counts = parallel_map<std::vector<long>>(static_cast<std::size_t>(n_batches), [&](std::size_t b) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + b);
    std::normal_distribution<double> gauss;
    std::vector<long> c(nb, 0);
    long here = std::min(batch, mc_samples - static_cast<long>(b) * batch);
    Vec x = Vec::Zero(sys.dim);
    for (long t = 0; t < here; ++t) {
      for (const auto& blk : *blocks) {
        Eigen::Vector3d v(gauss(rng), gauss(rng), gauss(rng));
        x.segment<3>(blk.first) = v.normalized();
      }
      double jv = sys.J(x);
      auto it = std::lower_bound(j_grid.begin(), j_grid.end(), jv - 0.5 * width);
      for (; it != j_grid.end() && *it <= jv + 0.5 * width; ++it)
        if (std::abs(*it - jv) < 0.5 * width) ++c[static_cast<std::size_t>(it - j_grid.begin())];
    }
    return c;
  });

  DHProfile prof;
  prof.samples = mc_samples;
  prof.j_values = j_grid;
  prof.volumes.assign(nb, 0.0);
  prof.stderrs.assign(nb, 0.0);
  const double n = static_cast<double>(mc_samples);
  for (std::size_t i = 0; i < nb; ++i) {
    long c = 0;
    for (const auto& bc : counts) c += bc[i];
    double p = c / n;
    prof.volumes[i] = p / width;
    prof.stderrs[i] = std::sqrt(std::max(p * (1 - p), 1.0 / n) / n) / width;
  }
  auto [vmin, vmax] = std::minmax_element(prof.volumes.begin(), prof.volumes.end());
  prof.range = *vmax - *vmin;
  if (!(prof.range > 0)) throw NumericError(op, "flat profile");
  for (double s : prof.stderrs)
    if (s > 0.05 * prof.range) throw NumericError(op, "undersampled (stderr above 5% of range)");

  // Segment boundaries: critical values of J plus the ends of the grid.
  std::vector<double> cuts;
  for (const auto& e : j_ledger.entries) cuts.push_back(e.value);
  std::vector<double> edges{-std::numeric_limits<double>::infinity()};
  edges.insert(edges.end(), cuts.begin(), cuts.end());
  edges.push_back(std::numeric_limits<double>::infinity());

  struct Seg {
    double slope = 0, intercept = 0, var_slope = 0;
    bool fitted = false;
  };
  std::vector<Seg> segs(edges.size() - 1);
  prof.fit.assign(nb, 0.0);
  double sq = 0.0;
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < nb; ++i) {
      double jv = j_grid[i];
      // Bins straddling a cut mix two linear pieces.
      if (jv - 0.5 * width < edges[s] - 1e-9 || jv + 0.5 * width > edges[s + 1] + 1e-9) continue;
      double w = 1.0 / (prof.stderrs[i] * prof.stderrs[i]);
      sw += w;
      sx += w * jv;
      sy += w * prof.volumes[i];
      sxx += w * jv * jv;
      sxy += w * jv * prof.volumes[i];
      idx.push_back(i);
    }
    Seg& g = segs[s];
    // Outside the image the density vanishes identically.
    bool outside = (s == 0 && !cuts.empty()) || (s + 2 == edges.size() && !cuts.empty());
    if (outside) {
      g.fitted = true;
      for (std::size_t i : idx) {
        double r = prof.volumes[i];
        sq += r * r;
      }
      continue;
    }
    if (idx.size() < 3) throw NumericError(op, "too few grid points between critical values");
    double det = sw * sxx - sx * sx;
    g.slope = (sw * sxy - sx * sy) / det;
    g.intercept = (sy - g.slope * sx) / sw;
    g.var_slope = sw / det;
    g.fitted = true;
    for (std::size_t i : idx) {
      prof.fit[i] = g.intercept + g.slope * j_grid[i];
      double r = prof.volumes[i] - prof.fit[i];
      sq += r * r;
    }
  }
  prof.fit_residual = std::sqrt(sq / static_cast<double>(nb)) / prof.range;

  double num = 0, den = 0;
  for (std::size_t c = 0; c < cuts.size(); ++c) {
    DHKink k;
    k.j = cuts[c];
    k.ledger_jump = j_ledger.entries[c].jump;
    k.slope_change = segs[c + 1].slope - segs[c].slope;
    k.stderr_ = std::sqrt(segs[c + 1].var_slope + segs[c].var_slope);
    prof.kinks.push_back(k);
    double w = 1.0 / (k.stderr_ * k.stderr_);
    num += w * k.slope_change * k.ledger_jump;
    den += w * k.ledger_jump * k.ledger_jump;
  }
  if (den > 0) prof.kappa = num / den;
  for (auto& k : prof.kinks) {
    k.normalized = prof.kappa != 0 ? k.slope_change / prof.kappa : 0.0;
    k.normalized_stderr = prof.kappa != 0 ? k.stderr_ / std::abs(prof.kappa) : 0.0;
  }
  return prof;
}

// ---------------------------------------------------------------------------
// CSV emitters

inline void write_diagram_csv(std::ostream& os, const DiagramSample& d) {
  os.precision(17);
  os << "j,h,tag\n";
  for (const auto& c : d.cells) os << c.f.j << ',' << c.f.h << ',' << to_string(c.tag) << '\n';
}

inline void write_boundary_csv(std::ostream& os, const std::vector<BoundaryCurve>& curves) {
  os.precision(17);
  os << "curve,j,h\n";
  for (const auto& c : curves)
    for (const auto& p : c.points) os << to_string(c.kind) << ',' << p.j << ',' << p.h << '\n';
}

inline void write_dh_csv(std::ostream& os, const DHProfile& p) {
  os.precision(17);
  os << "j,volume,stderr,fit\n";
  for (std::size_t i = 0; i < p.j_values.size(); ++i)
    os << p.j_values[i] << ',' << p.volumes[i] << ',' << p.stderrs[i] << ',' << p.fit[i] << '\n';
}

}  // namespace monodromy
