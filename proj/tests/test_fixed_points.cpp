#include <algorithm>
#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "monodromy/fixed_points.hpp"

using namespace monodromy;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

SystemModel pendulum() { return builtin_system(BuiltinSystem::spherical_pendulum); }
SystemModel spin() { return builtin_system(BuiltinSystem::coupled_spin_s2s2); }
SystemModel champagne() { return builtin_system(BuiltinSystem::champagne_bottle); }

const FixedPointRecord& at(const std::vector<FixedPointRecord>& fps, const Vec& x) {
  for (const auto& r : fps)
    if ((r.position - x).norm() < 1e-8) return r;
  ADD_FAILURE() << "no fixed point at " << x.transpose();
  return fps.front();
}

// Oracle: central differences of X_f along retracted tangent directions.
Mat fd_linearization(const SystemModel& sys, const Expression& f, const Vec& p) {
  Mat e = tangent_basis(sys, p);
  const double h = 1e-6;
  Mat a(4, 4);
  for (int c = 0; c < 4; ++c) {
    Vec plus = *try_project(sys, p + h * e.col(c));
    Vec minus = *try_project(sys, p - h * e.col(c));
    Vec d = (vector_field_raw(sys, f, plus) - vector_field_raw(sys, f, minus)) / (2 * h);
    a.col(c) = e.transpose() * d;
  }
  return a;
}

// Sorted numeric spectrum for comparisons against hand values.
std::vector<std::complex<double>> eig(const Mat& a) {
  Eigen::EigenSolver<Mat> es(a, false);
  std::vector<std::complex<double>> v(es.eigenvalues().begin(), es.eigenvalues().end());
  std::sort(v.begin(), v.end(), [](auto l, auto r) {
    return l.real() != r.real() ? l.real() < r.real() : l.imag() < r.imag();
  });
  return v;
}

void expect_spectrum(const Mat& a, std::vector<std::complex<double>> want) {
  auto got = eig(a);
  std::sort(want.begin(), want.end(), [](auto l, auto r) {
    return l.real() != r.real() ? l.real() < r.real() : l.imag() < r.imag();
  });
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_LT(std::abs(got[i] - want[i]), 1e-7) << i;
}

const std::complex<double> I(0, 1);

}  // namespace

TEST(FindFixedPoints, PendulumPoles) {
  auto fps = find_fixed_points(pendulum());
  ASSERT_EQ(fps.size(), 2u);
  EXPECT_LT((fps[0].position - vec({0, 0, -1, 0, 0, 0})).norm(), 1e-10);
  EXPECT_LT((fps[1].position - vec({0, 0, 1, 0, 0, 0})).norm(), 1e-10);
  EXPECT_NEAR(fps[0].value_H, -1.0, 1e-12);
  EXPECT_NEAR(fps[1].value_H, 1.0, 1e-12);
  EXPECT_NEAR(fps[0].value_J, 0.0, 1e-12);
  EXPECT_EQ(fps[0].id, 0);
  EXPECT_EQ(fps[1].id, 1);
}

TEST(FindFixedPoints, SpinPoleCombinations) {
  auto fps = find_fixed_points(spin());
  ASSERT_EQ(fps.size(), 4u);
  for (double z1 : {-1.0, 1.0})
    for (double z2 : {-1.0, 1.0}) {
      const auto& r = at(fps, vec({0, 0, z1, 0, 0, z2}));
      EXPECT_NEAR(r.value_J, z1 + 2 * z2, 1e-12);
    }
}

TEST(FindFixedPoints, ChampagneOrigin) {
  auto fps = find_fixed_points(champagne());
  ASSERT_EQ(fps.size(), 1u);
  EXPECT_LT(fps[0].position.norm(), 1e-10);
}

TEST(FindFixedPoints, FieldsVanish) {
  for (const auto& sys : {pendulum(), spin(), champagne()})
    for (const auto& r : find_fixed_points(sys)) {
      EXPECT_LT(hamiltonian_vector_field(sys, sys.J, r.position).norm(), 1e-10);
      EXPECT_LT(hamiltonian_vector_field(sys, sys.H, r.position).norm(), 1e-10);
    }
}

TEST(FindFixedPoints, IndependentOfSeed) {
  for (const auto& sys : {pendulum(), spin(), champagne()}) {
    FixedPointOptions a, b;
    a.seed = 1;
    b.seed = 977;
    auto fa = find_fixed_points(sys, a);
    auto fb = find_fixed_points(sys, b);
    ASSERT_EQ(fa.size(), fb.size()) << sys.name;
    for (const auto& r : fa) {
      bool matched = std::any_of(fb.begin(), fb.end(), [&](const FixedPointRecord& q) {
        return (q.position - r.position).norm() < 1e-8;
      });
      EXPECT_TRUE(matched) << sys.name;
    }
  }
}

TEST(FindFixedPoints, RequiresBounds) {
  auto sys = champagne();
  sys.bounds.clear();
  EXPECT_THROW(find_fixed_points(sys), ConfigError);
}

TEST(Linearization, PendulumSpectra) {
  auto sys = pendulum();
  Vec pc = vec({0, 0, 1, 0, 0, 0});
  Vec pmin = vec({0, 0, -1, 0, 0, 0});
  expect_spectrum(tangent_linearization(sys, sys.J, pc), {I, I, -I, -I});
  expect_spectrum(tangent_linearization(sys, sys.H, pc), {1, 1, -1, -1});
  expect_spectrum(tangent_linearization(sys, sys.H, pmin), {I, I, -I, -I});
}

TEST(Linearization, MatchesFiniteDifferenceOracle) {
  for (const auto& sys : {pendulum(), spin(), champagne()})
    for (const auto& r : find_fixed_points(sys))
      for (const Expression* f : {&sys.H, &sys.J}) {
        Mat a = tangent_linearization(sys, *f, r.position);
        Mat fd = fd_linearization(sys, *f, r.position);
        EXPECT_LT((a - fd).cwiseAbs().maxCoeff(), 1e-6) << sys.name << " point " << r.id;
      }
}

TEST(Linearization, TangentBasisIsOrthonormalAndTangent) {
  auto sys = spin();
  Vec p = vec({0, 0, 1, 0, 0, -1});
  Mat e = tangent_basis(sys, p);
  EXPECT_LT((e.transpose() * e - Mat::Identity(4, 4)).norm(), 1e-12);
  EXPECT_LT((constraint_jacobian(sys, p) * e).norm(), 1e-12);
  PoissonFrame pf(sys, p);
  EXPECT_GT(pfaffian4(e.transpose() * pf.dirac() * e), 0.0);
}

TEST(Classify, Examples) {
  auto p = pendulum();
  Vec pc = vec({0, 0, 1, 0, 0, 0});
  EXPECT_EQ(classify_singularity(tangent_linearization(p, p.H, pc), tangent_linearization(p, p.J, pc),
                                 16, 1),
            SingType::focus_focus);
  auto s = spin();
  Vec ss = vec({0, 0, -1, 0, 0, -1});
  Vec ns = vec({0, 0, 1, 0, 0, -1});
  EXPECT_EQ(classify_singularity(tangent_linearization(s, s.H, ss), tangent_linearization(s, s.J, ss),
                                 16, 1),
            SingType::elliptic_elliptic);
  EXPECT_EQ(classify_singularity(tangent_linearization(s, s.H, ns), tangent_linearization(s, s.J, ns),
                                 16, 1),
            SingType::focus_focus);
}

TEST(Classify, PendulumCombinationHasComplexQuadruple) {
  auto p = pendulum();
  Vec pc = vec({0, 0, 1, 0, 0, 0});
  const double eps = 0.1;
  Mat combo = tangent_linearization(p, p.H, pc) + eps * tangent_linearization(p, p.J, pc);
  expect_spectrum(combo, {1.0 + eps * I, 1.0 - eps * I, -1.0 + eps * I, -1.0 - eps * I});
}

TEST(Classify, NonCommutingIsAnError) {
  Mat a = Mat::Zero(4, 4), b = Mat::Zero(4, 4);
  a(0, 1) = 1;
  b(1, 0) = 1;
  EXPECT_THROW(classify_singularity(a, b, 16, 1), NumericError);
}

TEST(Classify, HyperbolicIsUnsupported) {
  Mat a = Mat::Zero(4, 4);
  a.diagonal() << 1, -1, 0, 0;
  a(2, 3) = 1;
  a(3, 2) = -1;
  EXPECT_EQ(classify_singularity(a, a, 16, 1), SingType::unsupported);
}

TEST(Weights, Signs) {
  auto s = spin();
  auto fps = find_fixed_points(s);
  EXPECT_EQ(at(fps, vec({0, 0, -1, 0, 0, -1})).sign, -1);
  EXPECT_EQ(at(fps, vec({0, 0, 1, 0, 0, -1})).sign, +1);
  EXPECT_EQ(at(fps, vec({0, 0, -1, 0, 0, 1})).sign, +1);
  EXPECT_EQ(at(fps, vec({0, 0, 1, 0, 0, 1})).sign, -1);
  auto p = find_fixed_points(pendulum());
  EXPECT_EQ(p[0].sign, +1);
  EXPECT_EQ(p[1].sign, +1);
  EXPECT_EQ(p[1].weights, std::make_pair(-1, 1));
  auto c = find_fixed_points(champagne());
  EXPECT_EQ(c[0].sign, +1);
}

TEST(Weights, ModelActions) {
  // Generator of (e^{it} z, e^{it} w) and of (e^{-it} z, e^{it} w) in the
  // coordinates (x1, y1, x2, y2).
  Mat hopf = Mat::Zero(4, 4);
  hopf(1, 0) = 1;
  hopf(0, 1) = -1;
  hopf(3, 2) = 1;
  hopf(2, 3) = -1;
  Mat anti = hopf;
  anti.topLeftCorner(2, 2) *= -1;
  EXPECT_EQ(circle_weights(hopf).sign, -1);
  EXPECT_EQ(circle_weights(anti).sign, +1);
  EXPECT_EQ(circle_weights(hopf).weights, std::make_pair(1, 1));
  EXPECT_THROW(circle_weights(Mat(2.0 * hopf)), NumericError);
}

TEST(Morse, Examples) {
  auto p = pendulum();
  auto fps = find_fixed_points(p);
  EXPECT_EQ(fps[0].morse_index, 0);
  EXPECT_TRUE(fps[0].nondegenerate);
  EXPECT_EQ(fps[1].morse_index, 2);
  EXPECT_TRUE(fps[1].nondegenerate);
  auto s = spin();
  auto md = morse_data(s, vec({0, 0, 1, 0, 0, 1}), s.J);
  EXPECT_EQ(md.index, 4);
  EXPECT_TRUE(md.nondegenerate);
  EXPECT_EQ(morse_data(s, vec({0, 0, -1, 0, 0, -1}), s.J).index, 0);
}

TEST(Morse, DegenerateIsFlagged) {
  auto sys = champagne();
  sys.H = parse_expression("x1^4 + x2^2 + x3^2 + x4^2", 4);
  auto md = morse_data(sys, vec({0, 0, 0, 0}), sys.H);
  EXPECT_FALSE(md.nondegenerate);
}

TEST(Property, FocusFocusIsPositive) {
  for (const auto& sys : {pendulum(), spin(), champagne()})
    for (const auto& r : find_fixed_points(sys))
      if (r.sing_type == SingType::focus_focus) EXPECT_EQ(r.sign, +1) << sys.name;
}

TEST(Property, OrientationFlipNegatesSigns) {
  for (const auto& sys : {pendulum(), spin(), champagne()}) {
    auto flipped = sys;
    flipped.orientation = -1;
    auto a = find_fixed_points(sys);
    auto b = find_fixed_points(flipped);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].sign, -b[i].sign);
      EXPECT_NE(a[i].weights, b[i].weights);
      EXPECT_EQ(a[i].sing_type, b[i].sing_type);
      EXPECT_EQ(a[i].morse_index, b[i].morse_index);
    }
  }
}

TEST(Property, CompactSignsSumToZero) {
  int total = 0;
  for (const auto& r : find_fixed_points(spin())) total += r.sign;
  EXPECT_EQ(total, 0);
}
