#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "monodromy/integrate.hpp"
#include "monodromy/system.hpp"

using namespace monodromy;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

SystemModel pendulum() { return builtin_system(BuiltinSystem::spherical_pendulum); }
SystemModel spin() { return builtin_system(BuiltinSystem::coupled_spin_s2s2); }
SystemModel champagne() { return builtin_system(BuiltinSystem::champagne_bottle); }

}  // namespace

TEST(Builtins, Values) {
  EXPECT_DOUBLE_EQ(pendulum().H(vec({0, 0, 1, 0, 0, 0})), 1.0);
  EXPECT_DOUBLE_EQ(spin().J(vec({0, 0, 1, 0, 0, -1})), -1.0);
  EXPECT_DOUBLE_EQ(champagne().H(vec({0, 0, 0, 0})), 0.0);
  EXPECT_THROW(builtin_system("double_pendulum"), ConfigError);
}

TEST(Bivector, SpinBlockIsCrossProductWithPosition) {
  Mat b = bivector_at(spin(), vec({0, 0, 1, 0, 0, 1}));
  Eigen::Matrix3d block1;
  block1 << 0, 1, 0, -1, 0, 0, 0, 0, 0;
  EXPECT_EQ(Mat(b.topLeftCorner(3, 3)), Mat(block1));
  EXPECT_EQ(Mat(b.bottomRightCorner(3, 3)), Mat(0.5 * block1));
}

TEST(Bivector, ChampagneIsCanonical) {
  Mat b = bivector_at(champagne(), vec({0.3, -0.2, 1.0, 0.5}));
  Mat expect = Mat::Zero(4, 4);
  expect.topRightCorner(2, 2) = Mat::Identity(2, 2);
  expect.bottomLeftCorner(2, 2) = -Mat::Identity(2, 2);
  EXPECT_EQ(b, expect);
}

TEST(Bivector, AntisymmetricAndCanonicalPairs) {
  for (const auto& sys : {pendulum(), spin(), champagne()}) {
    for (const Vec& x : sample_feasible_points(sys, 20, 3)) {
      Mat b = bivector_at(sys, x);
      EXPECT_EQ((b + b.transpose()).cwiseAbs().maxCoeff(), 0.0);
    }
  }
  Mat b = bivector_at(pendulum(), vec({0, 0, 1, 0, 0, 0}));
  for (int i = 0; i < 3; ++i) EXPECT_EQ(b(i, i + 3), 1.0);
}

TEST(Bivector, RejectsInfeasiblePoint) {
  EXPECT_THROW(bivector_at(spin(), vec({1, 1, 1, 0, 0, 1})), NumericError);
}

TEST(VectorField, PendulumMomentumRotatesAboutZ) {
  auto sys = pendulum();
  for (const Vec& x : sample_feasible_points(sys, 10, 11)) {
    Vec expect = vec({-x[1], x[0], 0, -x[4], x[3], 0});
    EXPECT_LT((hamiltonian_vector_field(sys, sys.J, x) - expect).norm(), 1e-14);
  }
}

TEST(VectorField, SpinMomentumMatchesCrossProduct) {
  auto sys = spin();
  Vec x = vec({1, 0, 0, 1, 0, 0});
  // Oracle: each sphere turns as e_z x r.
  Eigen::Vector3d ez(0, 0, 1);
  Eigen::Vector3d r1 = x.head<3>(), r2 = x.tail<3>();
  Vec expect(6);
  expect << ez.cross(r1), ez.cross(r2);
  EXPECT_LT((hamiltonian_vector_field(sys, sys.J, x) - expect).norm(), 1e-15);
  EXPECT_LT((expect - vec({0, 1, 0, 0, 1, 0})).norm(), 1e-15);
}

TEST(VectorField, VanishesAtFixedPoints) {
  auto p = pendulum();
  for (double z : {-1.0, 1.0}) {
    Vec x = vec({0, 0, z, 0, 0, 0});
    EXPECT_LT(hamiltonian_vector_field(p, p.H, x).norm(), 1e-12);
    EXPECT_LT(hamiltonian_vector_field(p, p.J, x).norm(), 1e-12);
  }
  auto s = spin();
  for (double z1 : {-1.0, 1.0})
    for (double z2 : {-1.0, 1.0}) {
      Vec x = vec({0, 0, z1, 0, 0, z2});
      EXPECT_LT(hamiltonian_vector_field(s, s.H, x).norm(), 1e-12);
    }
}

TEST(VectorField, PendulumFieldIsTheConstrainedEquationOfMotion) {
  // Oracle: q' = p, p' = -e_z + (z - |p|^2) q on T*S^2.
  auto sys = pendulum();
  for (const Vec& x : sample_feasible_points(sys, 10, 4)) {
    Eigen::Vector3d q = x.head<3>(), p = x.tail<3>();
    Eigen::Vector3d pd = Eigen::Vector3d(0, 0, -1) + (q.z() - p.squaredNorm()) * q;
    Vec expect(6);
    expect << p, pd;
    EXPECT_LT((hamiltonian_vector_field(sys, sys.H, x) - expect).norm(), 1e-12);
  }
}

TEST(Flow, MomentumFlowIsTwoPiPeriodic) {
  for (const auto& sys : {pendulum(), spin(), champagne()}) {
    for (const Vec& x0 : sample_feasible_points(sys, 20, 17)) {
      Trajectory tr = integrate_flow(sys, sys.J, x0, kTwoPi);
      EXPECT_LT((tr.states.back() - x0).norm(), 1e-8) << sys.name;
      // Equivariance of F along the circle action.
      for (const Vec& x : tr.states) {
        EXPECT_LT(std::abs(sys.H(x) - sys.H(x0)), 1e-10) << sys.name << " H0=" << sys.H(x0);
        EXPECT_LT(std::abs(sys.J(x) - sys.J(x0)), 1e-10);
      }
      EXPECT_LT(tr.constraint_drift, 1e-12);
    }
  }
}

TEST(Flow, PendulumEnergyConservedOverLongRun) {
  auto sys = pendulum();
  Vec x0 = project_to_manifold(sys, vec({0.6, 0.0, -0.8, 0.0, 0.9, 0.0}));
  Trajectory tr = integrate_flow(sys, sys.H, x0, 100.0);
  EXPECT_LT(tr.drift_H, 1e-8);
  // Oracle: rerun at halved tolerances and compare end points.
  FlowOptions tight = FlowOptions::from(sys.tol);
  tight.rel_tol /= 2;
  tight.abs_tol /= 2;
  Trajectory ref = integrate_flow(sys, sys.H, x0, 100.0, tight);
  EXPECT_LT(std::abs(sys.H(ref.states.back()) - sys.H(x0)), 1e-8);
  EXPECT_LT((ref.states.back() - tr.states.back()).norm(), 1e-6);
}

TEST(Flow, FixedPointStaysPut) {
  auto sys = pendulum();
  Vec x0 = vec({0, 0, -1, 0, 0, 0});
  Trajectory tr = integrate_flow(sys, sys.H, x0, 10.0);
  for (const Vec& x : tr.states) EXPECT_EQ(x, x0);
}

TEST(Flow, BackwardTimeInvertsForward) {
  auto sys = spin();
  Vec x0 = sample_feasible_points(sys, 1, 8)[0];
  FlowOptions opt = FlowOptions::from(sys.tol);
  Vec fwd = flow_to(sys, sys.H, x0, 3.0, opt);
  Vec back = flow_to(sys, sys.H, fwd, -3.0, opt);
  EXPECT_LT((back - x0).norm(), 1e-8);
}

TEST(Flow, RejectsInfeasibleStart) {
  auto sys = pendulum();
  EXPECT_THROW(integrate_flow(sys, sys.H, vec({0, 0, 1.1, 0, 0, 0}), 1.0), NumericError);
}

TEST(Commutation, DefectIsRoundoff) {
  EXPECT_LT(commutation_defect(pendulum(), 100, 1), 1e-10);
  EXPECT_LT(commutation_defect(spin(), 100, 1), 1e-10);
  EXPECT_LT(commutation_defect(champagne(), 100, 1), 1e-10);
  auto same = spin();
  same.H = same.J;
  EXPECT_EQ(commutation_defect(same, 50, 2), 0.0);
}

TEST(Projection, Examples) {
  auto p = pendulum();
  Vec x = project_to_manifold(p, vec({0, 0, -1.001, 0, 0, 0}));
  EXPECT_LT((x - vec({0, 0, -1, 0, 0, 0})).norm(), 1e-12);

  auto s = spin();
  Vec y = project_to_manifold(s, vec({1.1, 0, 0, 0, 0, 0.9}));
  EXPECT_NEAR(y.head<3>().norm(), 1.0, 1e-12);
  EXPECT_NEAR(y.tail<3>().norm(), 1.0, 1e-12);
  EXPECT_LT((y - vec({1, 0, 0, 0, 0, 1})).norm(), 1e-12);

  Vec f = sample_feasible_points(s, 1, 9)[0];
  EXPECT_LT((project_to_manifold(s, f) - f).norm(), 1e-15);
}

TEST(Compactness, SphereProductDetection) {
  auto blocks = sphere_product_blocks(spin());
  ASSERT_TRUE(blocks.has_value());
  ASSERT_EQ(blocks->size(), 2u);
  EXPECT_EQ((*blocks)[0].first, 0);
  EXPECT_EQ((*blocks)[1].first, 3);
  EXPECT_FALSE(is_compact(pendulum()));
  EXPECT_FALSE(is_compact(champagne()));
}
