#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "softder/elastic.hpp"
#include "softder/errors.hpp"
#include "softder/fixtures.hpp"
#include "test_support.hpp"

namespace softder {
namespace {

using testing::arc_state;
using testing::rotation_about_e3;

RodParams ten_node_params() { return make_uniform_params({10}, 0.25, 0.05, 1e4, 0.4, 0.3); }

// Three nodes along +x, rest edge 0.05 m, last node pulled out by delta.
RodState stretched(double delta) {
  return build_state({Vec3(0, 0, 0), Vec3(0.05, 0, 0), Vec3(0.1 + delta, 0, 0)}, {0.0, 0.0});
}

TEST(Energy, RestIsZero) {
  const RodParams p = fixtures::rod_params();
  const ElasticEnergy e = elastic_energy(straight_rod(p.num_nodes, p.rest_length), p);
  EXPECT_NEAR(e.stretching, 0.0, 1e-24);
  EXPECT_NEAR(e.bending, 0.0, 1e-24);
  EXPECT_NEAR(e.twisting, 0.0, 1e-24);
}

TEST(Energy, StretchedEdge) {
  const RodParams p = make_uniform_params({3}, 0.1, 0.01, 100.0, 0.0, 0.0);
  const ElasticEnergy e = elastic_energy(stretched(1e-3), p);
  EXPECT_NEAR(e.stretching, 5e-5, 1e-15);
  EXPECT_EQ(e.bending, 0.0);
}

TEST(Energy, UniformArcBending) {
  // Ten interior joints turning 0.3 rad each: 1/2 EI 10 (2 tan 0.15)^2.
  const RodParams p = make_uniform_params({12}, 0.11, 0.01, 0.0, 1e-3, 0.0);
  const ElasticEnergy e = elastic_energy(arc_state(12, 0.01, 0.3), p);
  const double expected = 0.5 * 1e-3 * 10 * std::pow(2.0 * std::tan(0.15), 2);
  EXPECT_NEAR(e.bending, expected, 1e-15);
  EXPECT_NEAR(e.bending, 4.568e-4, 1e-7);
  EXPECT_NEAR(e.stretching, 0.0, 1e-20);
}

TEST(Energy, UniformTwist) {
  const RodParams p = make_uniform_params({4}, 0.3, 0.01, 0.0, 0.0, 2.0);
  const RodState s =
      build_state(testing::planar_arc(4, 0.1, 0.0), std::vector<double>{0.0, 0.1, 0.2});
  // Two interior twists of 0.1 rad.
  EXPECT_NEAR(elastic_energy(s, p).twisting, 0.5 * 2.0 * 2 * 0.01, 1e-15);
}

TEST(Forces, RestIsZero) {
  const RodParams p = fixtures::rod_params();
  const RodState s = straight_rod(p.num_nodes, p.rest_length);
  EXPECT_LE(internal_forces(s, p).lpNorm<Eigen::Infinity>(), 1e-12 * p.EA);
  EXPECT_LE(internal_forces_fd(s, p).lpNorm<Eigen::Infinity>(), 1e-8 * p.EA);
}

TEST(Forces, StretchedEdgeHandValue) {
  const double delta = 1e-3;
  const RodParams p = make_uniform_params({3}, 0.1, 0.01, 100.0, 0.0, 0.0);
  const RodState s = stretched(delta);
  for (const Eigen::VectorXd& f : {internal_forces(s, p), internal_forces_fd(s, p)}) {
    EXPECT_NEAR(f[node_offset(1)], 100.0 * delta, 1e-6);
    EXPECT_NEAR(f[node_offset(2)], -100.0 * delta, 1e-6);
    EXPECT_NEAR(f[node_offset(0)], 0.0, 1e-12);
    EXPECT_NEAR(f.segment<2>(node_offset(2) + 1).norm(), 0.0, 1e-12);
  }
}

TEST(Forces, MatchFiniteDifferencesOnRandomStates) {
  std::mt19937_64 rng(21);
  const RodParams p = make_uniform_params({8}, 0.25, 0.05, 1e4, 0.4, 0.3);
  for (int trial = 0; trial < 20; ++trial) {
    const RodState s = testing::perturbed_rod(rng, 8, 0.25, 0.05, 0.2);
    EXPECT_LE(relative_max_error(internal_forces(s, p), internal_forces_fd(s, p)), 1e-5);
  }
}

TEST(Forces, BendingOnlyMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  const RodParams p = bending_only(ten_node_params());
  const RodState s = testing::perturbed_rod(rng, 10, 0.25, 0.05, 0.2);
  EXPECT_LE(relative_max_error(internal_forces(s, p), internal_forces_fd(s, p)), 1e-5);
}

TEST(Forces, TranslationalSelfEquilibrium) {
  std::mt19937_64 rng(9);
  const RodParams p = ten_node_params();
  for (int trial = 0; trial < 10; ++trial) {
    const RodState s = testing::perturbed_rod(rng, 10, 0.25, 0.05, 0.2);
    const Eigen::VectorXd f = internal_forces(s, p);
    Vec3 sum = Vec3::Zero();
    for (int i = 0; i < s.num_nodes(); ++i) sum += f.segment<3>(node_offset(i));
    EXPECT_LE(sum.norm(), 1e-9 * f.lpNorm<Eigen::Infinity>());
  }
}

TEST(Forces, WorkMatchesEnergyAlongPath) {
  std::mt19937_64 rng(13);
  const RodParams p = ten_node_params();
  const RodState a = testing::perturbed_rod(rng, 10, 0.25, 0.05, 0.2);
  Eigen::VectorXd dq = Eigen::VectorXd::Random(a.num_dofs()) * 1e-3;
  const Eigen::VectorXd qa = a.dofs();
  const Eigen::VectorXd qb = qa + dq;
  const int steps = 100;
  double work = 0.0;
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd q = qa + (k + 0.5) / steps * dq;
    work += internal_forces(q, a.reference(), p).dot(dq / steps);
  }
  const double dE = elastic_energy(qb, a.reference(), p).total() -
                    elastic_energy(qa, a.reference(), p).total();
  EXPECT_NEAR(-work, dE, 1e-6 * std::abs(dE));
}

TEST(Forces, RotateWithPlanarState) {
  std::mt19937_64 rng(17);
  const RodParams p = ten_node_params();
  const RodState s = testing::random_planar(rng, 10, 0.025, 0.5);
  const Eigen::Matrix3d R = rotation_about_e3(0.9);
  const RodState r = testing::transformed(s, R, Vec3(0.05, -0.1, 0.0));
  const Eigen::VectorXd f = internal_forces(s, p);
  const Eigen::VectorXd g = internal_forces(r, p);
  const double scale = f.lpNorm<Eigen::Infinity>();
  for (int i = 0; i < s.num_nodes(); ++i) {
    EXPECT_LE((R * f.segment<3>(node_offset(i)) - g.segment<3>(node_offset(i))).norm(),
              1e-9 * scale);
  }
  for (int e = 0; e < s.num_edges(); ++e) {
    EXPECT_NEAR(f[twist_offset(e)], g[twist_offset(e)], 1e-9 * scale);
  }
}

TEST(Forces, ThrowOnDimensionMismatch) {
  const RodParams p = ten_node_params();
  EXPECT_THROW(internal_forces(straight_rod(8, 0.25), p), DimensionMismatch);
}

TEST(Mass, ThreeNodeLayout) {
  RodParams p;
  p.num_nodes = 3;
  p.segment_nodes = {3};
  p.rest_length = 0.1;
  p.node_masses = {0.1, 0.2, 0.1};
  p.edge_inertias = {1e-6, 1e-6};
  p.damping = Eigen::VectorXd::Zero(11);
  Eigen::VectorXd expected(11);
  expected << 0.1, 0.1, 0.1, 1e-6, 0.2, 0.2, 0.2, 1e-6, 0.1, 0.1, 0.1;
  EXPECT_EQ(mass_diagonal(p), expected);
  EXPECT_EQ(Eigen::VectorXd(mass_matrix(p).diagonal()), expected);
}

TEST(Mass, HalfEdgeLumping) {
  const std::vector<double> m = lumped_node_masses(11, 0.05);
  EXPECT_DOUBLE_EQ(m.front(), 0.0025);
  EXPECT_DOUBLE_EQ(m.back(), 0.0025);
  for (int i = 1; i < 10; ++i) EXPECT_DOUBLE_EQ(m[i], 0.005);
  const RodParams p = make_uniform_params({11}, 0.25, 0.05, 1.0, 1.0, 1.0);
  EXPECT_NEAR(p.total_mass(), 0.05, 1e-15);
}

TEST(Params, ValidationRejectsBadFields) {
  RodParams p = ten_node_params();
  p.EI = -1.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = ten_node_params();
  p.node_masses[3] = 0.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = ten_node_params();
  p.segment_nodes = {4, 5};
  EXPECT_THROW(p.validate(), ValidationError);
  p = ten_node_params();
  p.damping.resize(3);
  EXPECT_THROW(p.validate(), DimensionMismatch);
}

TEST(Jacobian, SymmetricOnRandomStates) {
  std::mt19937_64 rng(23);
  const RodParams p = ten_node_params();
  for (int trial = 0; trial < 5; ++trial) {
    const RodState s = testing::perturbed_rod(rng, 10, 0.25, 0.05, 0.2);
    const Eigen::MatrixXd J = force_jacobian(s, p);
    EXPECT_LE((J - J.transpose()).norm() / J.norm(), 1e-4);
  }
}

TEST(Jacobian, MatchesDirectionalDerivative) {
  std::mt19937_64 rng(29);
  const RodParams p = ten_node_params();
  const RodState s = testing::perturbed_rod(rng, 10, 0.25, 0.05, 0.2);
  const Eigen::MatrixXd J = force_jacobian(s, p);
  const Eigen::VectorXd v = Eigen::VectorXd::Random(s.num_dofs());
  const double h = 1e-7;
  const Eigen::VectorXd fd = (internal_forces(s.dofs() + h * v, s.reference(), p) -
                              internal_forces(s.dofs() - h * v, s.reference(), p)) /
                             (2 * h);
  EXPECT_LE(relative_max_error(J * v, fd), 1e-5);
}

TEST(Jacobian, NegativeSemidefiniteAtRest) {
  const RodParams p = ten_node_params();
  const Eigen::MatrixXd J = force_jacobian(straight_rod(10, 0.25), p);
  const Eigen::MatrixXd S = 0.5 * (J + J.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  EXPECT_LE(eig.eigenvalues().maxCoeff(), 1e-6 * eig.eigenvalues().cwiseAbs().maxCoeff());
}

TEST(Jacobian, AxialBlockOfLastNode) {
  const Vec3 dir = Vec3(1.0, 2.0, 0.0).normalized();
  const RodParams p = make_uniform_params({5}, 0.2, 0.01, 50.0, 0.0, 0.0);
  const Eigen::MatrixXd J = force_jacobian(straight_rod(5, 0.2, Vec3::Zero(), dir), p);
  const Eigen::Matrix3d block = J.block<3, 3>(node_offset(4), node_offset(4));
  EXPECT_LE((block + 50.0 * dir * dir.transpose()).norm(), 1e-6 * 50.0);
}

}  // namespace
}  // namespace softder
