#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "monodromy/fixed_points.hpp"
#include "monodromy/rotation.hpp"

using namespace monodromy;

namespace {

SystemModel pendulum() { return builtin_system(BuiltinSystem::spherical_pendulum); }
SystemModel spin() { return builtin_system(BuiltinSystem::coupled_spin_s2s2); }

LoopSpec circle(double j, double h, double r, int dir = 1) {
  LoopSpec l;
  l.name = "c";
  l.center = {j, h};
  l.radius = r;
  l.direction = dir;
  return l;
}

LoopSpec spin_gamma3() {
  LoopSpec l;
  l.name = "gamma3";
  l.kind = LoopKind::polyline;
  l.vertices = {{-1.4, 0}, {-0.8, -0.2}, {0.8, -0.2}, {1.4, 0}, {0.8, 0.2}, {-0.8, 0.2}};
  return l;
}

// Oracle: first T > 0 at which exp(T A_H) v meets the orbit exp(s A_J) v of
// the linearized commuting flows, by scanning T and s.
double linear_return_time(const Mat& a_h, const Mat& a_j, const Vec& v) {
  auto dist = [&](double t) {
    Vec w = (t * a_h).exp() * v;
    double best = 1e300;
    for (int k = 0; k < 2000; ++k) {
      double s = kTwoPi * k / 2000;
      best = std::min(best, (w - (s * a_j).exp() * v).norm());
    }
    return best;
  };
  double prev2 = dist(0.01), prev = dist(0.02);
  for (double t = 0.03; t < 20; t += 0.01) {
    double cur = dist(t);
    if (prev < prev2 && prev < cur && prev < 1e-2 * v.norm()) {
      // Golden-section polish on [t - 0.02, t].
      double lo = t - 0.02, hi = t;
      for (int i = 0; i < 60; ++i) {
        double m1 = lo + 0.382 * (hi - lo), m2 = lo + 0.618 * (hi - lo);
        if (dist(m1) < dist(m2)) hi = m2; else lo = m1;
      }
      return 0.5 * (lo + hi);
    }
    prev2 = prev;
    prev = cur;
  }
  return -1;
}

}  // namespace

TEST(PointOnFiber, Examples) {
  auto p = pendulum();
  Vec x = point_on_fiber(p, 0.0, 0.5);
  EXPECT_LT(std::abs(p.H(x)), 1e-10);
  EXPECT_LT(std::abs(p.J(x) - 0.5), 1e-10);
  EXPECT_LT(constraint_residual(p, x), 1e-10);
  try {
    point_on_fiber(p, -2.0, 0.0);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("outside image"), std::string::npos);
  }
  auto s = spin();
  Vec y = point_on_fiber(s, 0.1, 0.0);
  EXPECT_LT(std::abs(s.H(y) - 0.1), 1e-10);
  EXPECT_LT(std::abs(s.J(y)), 1e-10);
  EXPECT_LT(constraint_residual(s, y), 1e-10);
}

TEST(FirstReturn, SmallAmplitudeMatchesLinearization) {
  auto p = pendulum();
  Vec pmin(6);
  pmin << 0, 0, -1, 0, 0, 0;
  Mat a_h = tangent_linearization(p, p.H, pmin);
  Mat a_j = tangent_linearization(p, p.J, pmin);
  Mat e = tangent_basis(p, pmin);
  Vec x = point_on_fiber(p, -1 + 1e-6, 2e-7);
  double t_lin = linear_return_time(a_h, a_j, e.transpose() * (x - pmin));
  ASSERT_GT(t_lin, 0);
  auto fr = first_return(p, x);
  EXPECT_NEAR(fr.T, t_lin, 1e-3);
  // Further out the return time moves away from the linear value.
  auto far = first_return(p, point_on_fiber(p, -0.5, 0.1));
  EXPECT_GT(std::abs(far.T - t_lin), 1e-2);
}

TEST(FirstReturn, ThetaInUnitIntervalAndEquivariant) {
  auto s = spin();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> phase(0, kTwoPi);
  for (auto [h, j] : {std::pair{0.1, 0.0}, std::pair{-0.2, -1.5}, std::pair{0.25, 1.2}}) {
    Vec x = point_on_fiber(s, h, j);
    auto base = first_return(s, x);
    EXPECT_GE(base.theta, 0.0);
    EXPECT_LT(base.theta, 1.0);
    EXPECT_GT(base.T, 0.0);
    for (int k = 0; k < 3; ++k) {
      Vec y = flow_to(s, s.J, x, phase(rng), FlowOptions::from(s.tol));
      auto other = first_return(s, y);
      double d = std::abs(other.theta - base.theta);
      EXPECT_LT(std::min(d, 1 - d), 1e-6);
      EXPECT_NEAR(other.T, base.T, 1e-6 * base.T);
    }
  }
}

TEST(FirstReturn, RejectsFixedPoint) {
  auto p = pendulum();
  Vec pmin(6);
  pmin << 0, 0, -1, 0, 0, 0;
  EXPECT_THROW(first_return(p, pmin), NumericError);
}

TEST(Trace, PendulumAroundFocusFocus) {
  auto p = pendulum();
  auto tr = rotation_trace(p, circle(0, 1, 0.5), 32);
  EXPECT_NEAR(tr.variation, -1.0, 1e-2);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) {
    EXPECT_LT(std::abs(tr.samples[i].theta_unwrapped - tr.samples[i - 1].theta_unwrapped), 0.5);
    EXPECT_GT(tr.samples[i].T, 0.0);
  }
  EXPECT_EQ(monodromy_from_rotation(tr).m, 1);
}

TEST(Trace, SpinEnclosingBoth) {
  auto tr = rotation_trace(spin(), spin_gamma3(), 48);
  EXPECT_NEAR(tr.variation, -2.0, 1e-2);
  auto r = monodromy_from_rotation(tr);
  EXPECT_EQ(r.m, 2);
  EXPECT_TRUE(is_unipotent_upper(r));
}

TEST(Trace, EmptyLoopHasNoVariation) {
  auto tr = rotation_trace(spin(), circle(0, 0.3, 0.1), 24);
  EXPECT_NEAR(tr.variation, 0.0, 1e-2);
  auto r = monodromy_from_rotation(tr);
  EXPECT_EQ(r.m, 0);
  EXPECT_EQ(r.matrix[0][1], 0);
}

TEST(Trace, ReversalNegatesVariation) {
  auto s = spin();
  auto fwd = rotation_trace(s, circle(-1, 0, 0.2), 24);
  auto back = rotation_trace(s, circle(-1, 0, 0.2, -1), 24);
  EXPECT_NEAR(fwd.variation, -back.variation, 2e-2);
  EXPECT_NEAR(fwd.variation, -1.0, 1e-2);
}

TEST(Trace, UnresolvedVariationIsAnError) {
  RotationTrace t;
  t.variation = 0.5;
  EXPECT_THROW(monodromy_from_rotation(t), NumericError);
}

TEST(Trace, CsvColumns) {
  auto tr = rotation_trace(spin(), circle(0, 0.3, 0.1), 16);
  std::ostringstream os;
  write_trace_csv(os, tr);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "s,j,h,T,theta_unwrapped");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, static_cast<int>(tr.samples.size()));
}
