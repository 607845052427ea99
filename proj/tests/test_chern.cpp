#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "monodromy/chern.hpp"

using namespace monodromy;

namespace {

SystemModel pendulum() { return builtin_system(BuiltinSystem::spherical_pendulum); }
SystemModel spin() { return builtin_system(BuiltinSystem::coupled_spin_s2s2); }

struct Fixture {
  SystemModel sys;
  std::vector<FixedPointRecord> fps;
};

const Fixture& spin_fx() {
  static const Fixture f{spin(), find_fixed_points(spin())};
  return f;
}

const Fixture& pendulum_fx() {
  static const Fixture f{pendulum(), find_fixed_points(pendulum())};
  return f;
}

LoopSpec circle(double j, double h, double r, int dir = 1) {
  LoopSpec l;
  l.name = "test";
  l.kind = LoopKind::circle;
  l.center = {j, h};
  l.radius = r;
  l.direction = dir;
  return l;
}

LoopSpec polyline(std::vector<PlanePoint> v) {
  LoopSpec l;
  l.name = "poly";
  l.kind = LoopKind::polyline;
  l.vertices = std::move(v);
  return l;
}

std::vector<std::pair<double, int>> pairs(const ChernLedger& l) {
  std::vector<std::pair<double, int>> out;
  for (const auto& e : l.entries) out.emplace_back(e.value, e.jump);
  return out;
}

void expect_entries(const ChernLedger& l, std::vector<std::pair<double, int>> want) {
  auto got = pairs(l);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_NEAR(got[i].first, want[i].first, 1e-10) << i;
    EXPECT_EQ(got[i].second, want[i].second) << i;
  }
}

std::vector<std::complex<double>> circle_samples(int n, double turns) {
  std::vector<std::complex<double>> s;
  for (int k = 0; k < n; ++k)
    s.push_back(std::polar(1.0, turns * 2 * std::numbers::pi * k / n));
  return s;
}

}  // namespace

TEST(Ledger, SpinJ) {
  const auto& f = spin_fx();
  auto l = build_ledger(f.sys, Integral::J, f.fps);
  expect_entries(l, {{-3, -1}, {-1, 1}, {1, 1}, {3, -1}});
  EXPECT_NEAR(l.domain_lo, -3.0, 1e-8);
  EXPECT_NEAR(l.domain_hi, 3.0, 1e-8);
}

TEST(Ledger, SpinH) {
  const auto& f = spin_fx();
  auto l = build_ledger(f.sys, Integral::H, f.fps);
  expect_entries(l, {{-0.5, -1}, {0, 2}, {0.5, -1}});
  ASSERT_EQ(l.entries[1].points.size(), 2u);
}

TEST(Ledger, PendulumH) {
  const auto& f = pendulum_fx();
  auto l = build_ledger(f.sys, Integral::H, f.fps);
  expect_entries(l, {{-1, 1}, {1, 1}});
  EXPECT_NEAR(l.domain_lo, -1.0, 1e-8);
  EXPECT_TRUE(std::isinf(l.domain_hi));
}

TEST(Ledger, AbortsOnUnsupportedOrDegenerate) {
  auto fps = spin_fx().fps;
  fps[2].sing_type = SingType::unsupported;
  try {
    build_ledger(spin_fx().sys, Integral::J, fps);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("fixed point 2"), std::string::npos);
  }
  fps = spin_fx().fps;
  fps[1].nondegenerate_J = false;
  EXPECT_THROW(build_ledger(spin_fx().sys, Integral::J, fps), NumericError);
}

TEST(ChernNumber, Examples) {
  const auto& f = spin_fx();
  auto lj = build_ledger(f.sys, Integral::J, f.fps);
  EXPECT_EQ(chern_number(lj, -2.0), -1);
  EXPECT_EQ(chern_number(lj, 0.0), 0);
  EXPECT_EQ(chern_number(lj, 2.0), 1);
  EXPECT_EQ(chern_number(lj, -10.0), 0);
  EXPECT_THROW(chern_number(lj, -1.0), NumericError);
  auto lh = build_ledger(f.sys, Integral::H, f.fps);
  EXPECT_EQ(chern_number(lh, -0.1), -1);
  EXPECT_EQ(chern_number(lh, 0.1), 1);
}

TEST(ChernNumber, ConstantOnIntervals) {
  const auto& f = spin_fx();
  auto lj = build_ledger(f.sys, Integral::J, f.fps);
  std::mt19937_64 rng(4);
  const double cuts[] = {-3, -1, 1, 3};
  for (int k = 0; k < 3; ++k) {
    std::uniform_real_distribution<double> u(cuts[k] + 1e-6, cuts[k + 1] - 1e-6);
    int first = chern_number(lj, u(rng));
    for (int t = 0; t < 50; ++t) EXPECT_EQ(chern_number(lj, u(rng)), first);
  }
}

TEST(ChernJump, Examples) {
  const auto& s = spin_fx();
  EXPECT_EQ(chern_jump(build_ledger(s.sys, Integral::H, s.fps), 0.0), 2);
  EXPECT_EQ(chern_jump(build_ledger(s.sys, Integral::J, s.fps), -3.0), -1);
  const auto& p = pendulum_fx();
  auto lp = build_ledger(p.sys, Integral::H, p.fps);
  EXPECT_EQ(chern_jump(lp, 1.0), 1);
  EXPECT_THROW(chern_jump(lp, 0.5), NumericError);
}

TEST(Levels, Examples) {
  const auto& p = pendulum_fx();
  auto r = monodromy_from_levels(build_ledger(p.sys, Integral::H, p.fps), 0.0, 2.0);
  EXPECT_EQ(r.m, 1);
  EXPECT_EQ(r.method, Method::takens_levels);
  const auto& s = spin_fx();
  EXPECT_EQ(monodromy_from_levels(build_ledger(s.sys, Integral::H, s.fps), -0.1, 0.1).m, 2);
  auto same = monodromy_from_levels(build_ledger(s.sys, Integral::H, s.fps), 0.1, 0.2);
  EXPECT_EQ(same.m, 0);
  EXPECT_EQ(same.matrix[0][1], 0);
  EXPECT_TRUE(is_unipotent_upper(r));
}

TEST(Disk, Examples) {
  const auto& s = spin_fx();
  EXPECT_EQ(monodromy_from_disk(s.sys, s.fps, circle(-1, 0, 0.5)).m, 1);
  EXPECT_EQ(monodromy_from_disk(s.sys, s.fps, circle(1, 0, 0.5)).m, 1);
  EXPECT_EQ(monodromy_from_disk(s.sys, s.fps, circle(0, 0, 1.5)).m, 2);
  const auto& p = pendulum_fx();
  EXPECT_EQ(monodromy_from_disk(p.sys, p.fps, circle(0, 1, 0.5)).m, 1);
  EXPECT_EQ(monodromy_from_disk(p.sys, p.fps, circle(0.5, 0.5, 0.2)).m, 0);
  EXPECT_THROW(monodromy_from_disk(p.sys, p.fps, circle(0, 1.5, 0.5)), NumericError);
}

TEST(Disk, PolylineEvenOdd) {
  const auto& s = spin_fx();
  auto box = polyline({{-2, -0.3}, {2, -0.3}, {2, 0.3}, {-2, 0.3}});
  EXPECT_EQ(monodromy_from_disk(s.sys, s.fps, box).m, 2);
  // An L-shaped region containing only the left focus-focus value.
  auto ell = polyline({{-2, -0.3}, {0, -0.3}, {0, 0.1}, {2, 0.1}, {2, 0.3}, {-2, 0.3}});
  EXPECT_EQ(monodromy_from_disk(s.sys, s.fps, ell).m, 1);
}

TEST(Loops, Validation) {
  EXPECT_THROW(validate_loop(circle(0, 0, 0.0)), ConfigError);
  auto bowtie = polyline({{0, 0}, {1, 1}, {1, 0}, {0, 1}});
  EXPECT_THROW(validate_loop(bowtie), ConfigError);
  auto few = circle(0, 0, 1);
  few.n_samples = 8;
  EXPECT_THROW(validate_loop(few), ConfigError);
  EXPECT_NO_THROW(validate_loop(polyline({{0, 0}, {1, 0}, {0, 1}})));
}

TEST(Loops, ParametrizationAndOrientation) {
  auto sq = polyline({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  EXPECT_EQ(loop_orientation(sq), 1);
  auto p = loop_point(sq, 0.375);
  EXPECT_NEAR(p.j, 1.0, 1e-15);
  EXPECT_NEAR(p.h, 0.5, 1e-15);
  auto q = loop_point(sq, 1.0);
  EXPECT_NEAR(q.j, 0.0, 1e-15);
  auto cw = polyline({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
  EXPECT_EQ(loop_orientation(cw), -1);
  auto c = circle(0, 0, 1);
  EXPECT_NEAR(loop_point(c, 0.25).h, 1.0, 1e-15);
  EXPECT_NEAR(loop_point(circle(0, 0, 1, -1), 0.25).h, -1.0, 1e-15);
}

TEST(Loops, ContainmentMatchesCircleOracle) {
  // Oracle: a 400-gon approximating the unit circle agrees with the disk test.
  std::vector<PlanePoint> v;
  for (int k = 0; k < 400; ++k) {
    double a = 2 * std::numbers::pi * k / 400;
    v.push_back({std::cos(a), std::sin(a)});
  }
  auto poly = polyline(v);
  auto disk = circle(0, 0, 1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  int checked = 0;
  while (checked < 500) {
    PlanePoint p{u(rng), u(rng)};
    if (std::abs(std::hypot(p.j, p.h) - 1) < 1e-3) continue;
    EXPECT_EQ(loop_contains(poly, p), loop_contains(disk, p));
    ++checked;
  }
}

TEST(Winding, Examples) {
  EXPECT_EQ(winding_number(circle_samples(256, -1), true), -1);
  EXPECT_EQ(winding_number(circle_samples(256, 1), true), 1);
  EXPECT_EQ(winding_number(std::vector<std::complex<double>>(10, {0.6, 0.8}), true), 0);
  EXPECT_EQ(winding_number(circle_samples(256, 3), true), 3);
}

TEST(Winding, Errors) {
  EXPECT_THROW(winding_number(circle_samples(5, 2), true), NumericError);
  // Open path covering half a turn is not an integer.
  EXPECT_THROW(winding_number(circle_samples(64, 0.5), false), NumericError);
}

TEST(Property, Additivity) {
  const auto& s = spin_fx();
  int m1 = monodromy_from_disk(s.sys, s.fps, circle(-1, 0, 0.5)).m;
  int m2 = monodromy_from_disk(s.sys, s.fps, circle(1, 0, 0.5)).m;
  int m3 = monodromy_from_disk(s.sys, s.fps, circle(0, 0, 1.5)).m;
  EXPECT_EQ(m3, m1 + m2);
}

TEST(Property, LevelsAgreeWithDisk) {
  const auto& s = spin_fx();
  auto lh = build_ledger(s.sys, Integral::H, s.fps);
  EXPECT_EQ(monodromy_from_levels(lh, -0.1, 0.1).m,
            monodromy_from_disk(s.sys, s.fps, circle(0, 0, 1.5)).m);
  const auto& p = pendulum_fx();
  EXPECT_EQ(monodromy_from_levels(build_ledger(p.sys, Integral::H, p.fps), 0.55, 1.45).m,
            monodromy_from_disk(p.sys, p.fps, circle(0, 1, 0.5)).m);
}

TEST(Property, CompactJumpsSumToZero) {
  const auto& s = spin_fx();
  for (Integral i : {Integral::H, Integral::J}) {
    int total = 0;
    for (const auto& e : build_ledger(s.sys, i, s.fps).entries) total += e.jump;
    EXPECT_EQ(total, 0);
  }
}

TEST(Property, OrientationFlipNegates) {
  auto sys = spin();
  sys.orientation = -1;
  auto fps = find_fixed_points(sys);
  auto flipped = build_ledger(sys, Integral::J, fps);
  auto base = build_ledger(spin_fx().sys, Integral::J, spin_fx().fps);
  ASSERT_EQ(flipped.entries.size(), base.entries.size());
  for (std::size_t i = 0; i < base.entries.size(); ++i)
    EXPECT_EQ(flipped.entries[i].jump, -base.entries[i].jump);
  for (double j : {-2.0, 0.0, 2.0}) EXPECT_EQ(chern_number(flipped, j), -chern_number(base, j));
  EXPECT_EQ(monodromy_from_disk(sys, fps, circle(0, 0, 1.5)).m,
            -monodromy_from_disk(spin_fx().sys, spin_fx().fps, circle(0, 0, 1.5)).m);
}

TEST(Property, ReversedLoopNegatesCount) {
  const auto& s = spin_fx();
  EXPECT_EQ(monodromy_from_disk(s.sys, s.fps, circle(-1, 0, 0.5, -1)).m, -1);
}

TEST(Property, EmittedMatricesAreUnipotent) {
  for (int m = -3; m <= 3; ++m) {
    auto r = make_monodromy(m, Method::disk_count);
    EXPECT_TRUE(is_unipotent_upper(r));
  }
}
