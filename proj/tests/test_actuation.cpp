#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "softder/actuation.hpp"
#include "softder/errors.hpp"
#include "softder/fixtures.hpp"
#include "softder/trajgen.hpp"
#include "test_support.hpp"

namespace softder {
namespace {

ActuationModel lambda_diag(const RodParams& p, double a, double b) {
  return make_actuation(p, Eigen::Vector2d(a, b).asDiagonal().toDenseMatrix());
}

std::vector<int> boundary_nodes(const ActuationModel& a, int j) {
  const int s = a.segment_offsets[j];
  const int last = s + a.segment_nodes[j] - 1;
  return {s, s + 1, last - 1, last};
}

TEST(BuildB, StraightRodRowsAreLateral) {
  const RodParams p = fixtures::rod_params();
  const ActuationModel a = fixtures::actuation(p);
  const Eigen::MatrixXd B = build_B(straight_rod(p.num_nodes, p.rest_length), a);
  ASSERT_EQ(B.rows(), p.num_dofs());
  ASSERT_EQ(B.cols(), 2);
  for (int j = 0; j < 2; ++j) {
    const std::vector<int> nodes = boundary_nodes(a, j);
    const double signs[4] = {1, -1, -1, 1};
    for (int k = 0; k < 4; ++k) {
      EXPECT_EQ(Vec3(B.block<3, 1>(node_offset(nodes[k]), j)), signs[k] * Vec3::UnitY());
    }
  }
}

TEST(BuildB, SupportedOnBoundaryNodesOnly) {
  const RodParams p = fixtures::rod_params();
  const ActuationModel a = fixtures::actuation(p);
  const RodState s = reference_configuration(Eigen::Vector2d(0.5, -0.3), p, a);
  const Eigen::MatrixXd B = build_B(s, a);
  for (int j = 0; j < 2; ++j) {
    const std::vector<int> nodes = boundary_nodes(a, j);
    for (int i = 0; i < p.num_nodes; ++i) {
      const bool boundary = std::find(nodes.begin(), nodes.end(), i) != nodes.end();
      const double norm = B.block<3, 1>(node_offset(i), j).norm();
      if (boundary) {
        EXPECT_NEAR(norm, 1.0, 1e-12);
      } else {
        EXPECT_EQ(norm, 0.0);
      }
    }
    for (int e = 0; e < s.num_edges(); ++e) EXPECT_EQ(B(twist_offset(e), j), 0.0);
  }
}

TEST(BuildB, RowsOrthogonalToLocalTangent) {
  std::mt19937_64 rng(2);
  const RodParams p = fixtures::rod_params();
  const ActuationModel a = fixtures::actuation(p);
  for (int trial = 0; trial < 10; ++trial) {
    const RodState s = testing::random_planar(rng, p.num_nodes, p.rest_edge_length(), 0.3);
    const FrameSet f = compute_frames(s);
    const Eigen::MatrixXd B = build_B(s, a);
    for (int j = 0; j < 2; ++j) {
      const std::vector<int> nodes = boundary_nodes(a, j);
      // Node pairs share the tangent of the edge between them.
      const int edges[4] = {nodes[0], nodes[0], nodes[2], nodes[2]};
      for (int k = 0; k < 4; ++k) {
        const Vec3 row = B.block<3, 1>(node_offset(nodes[k]), j);
        const Vec3& t = f.tangents[edges[k]];
        EXPECT_LE(std::abs(row.dot(t)), 1e-12);
        EXPECT_NEAR(row.norm(), e3().cross(t).norm(), 1e-12);
      }
    }
  }
}

TEST(BuildB, NetForceVanishes) {
  std::mt19937_64 rng(6);
  const RodParams p = fixtures::rod_params();
  const ActuationModel a = fixtures::actuation(p);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  for (int trial = 0; trial < 10; ++trial) {
    const RodState s = testing::random_planar(rng, p.num_nodes, p.rest_edge_length(), 0.3);
    const Eigen::VectorXd f = build_B(s, a) * a.Lambda * Eigen::Vector2d(d(rng), d(rng));
    Vec3 sum = Vec3::Zero();
    for (int i = 0; i < p.num_nodes; ++i) sum += f.segment<3>(node_offset(i));
    EXPECT_LE(sum.norm(), 1e-12);
  }
}

TEST(BuildB, PositiveInputBendsTowardPlusY) {
  const RodParams p = fixtures::rod_params();
  const ActuationModel a = fixtures::actuation(p);
  const Eigen::MatrixXd B = build_B(straight_rod(p.num_nodes, p.rest_length), a);
  // The far node of the first pair is pushed toward +y relative to its neighbor,
  // and the last node of the segment likewise.
  EXPECT_GT(B(node_offset(7) + 1, 0), 0.0);
  EXPECT_GT(B(node_offset(0) + 1, 0), 0.0);
  EXPECT_LT(B(node_offset(1) + 1, 0), 0.0);
}

TEST(BuildB, LayoutMismatchThrows) {
  const RodParams p = fixtures::rod_params();
  const ActuationModel a = fixtures::actuation(p);
  EXPECT_THROW(build_B(straight_rod(12, 0.25), a), LayoutMismatch);
}

TEST(Actuation, RejectsShortSegmentsAndSingularLambda) {
  const RodParams short_segments = make_uniform_params({3, 8}, 0.25, 0.05, 1.0, 1.0, 1.0);
  EXPECT_THROW(make_actuation(short_segments, Eigen::Matrix2d::Identity()), LayoutMismatch);
  const RodParams p = fixtures::rod_params();
  EXPECT_THROW(make_actuation(p, Eigen::Matrix2d::Zero()), SingularLambda);
  EXPECT_THROW(make_actuation(p, Eigen::Matrix3d::Identity()), LayoutMismatch);
}

TEST(ExternalForce, ZeroInputZeroVelocity) {
  const RodParams p = fixtures::rod_params();
  const ActuationModel a = fixtures::actuation(p);
  const RodState s = straight_rod(p.num_nodes, p.rest_length);
  const Eigen::VectorXd f =
      external_force(s, Eigen::VectorXd::Zero(p.num_dofs()), Eigen::Vector2d::Zero(), a, p);
  EXPECT_EQ(f.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(ExternalForce, DampingOnly) {
  const RodParams p = fixtures::rod_params();
  const ActuationModel a = fixtures::actuation(p);
  const RodState s = straight_rod(p.num_nodes, p.rest_length);
  const Eigen::VectorXd v = Eigen::VectorXd::Random(p.num_dofs());
  const Eigen::VectorXd f = external_force(s, v, Eigen::Vector2d::Zero(), a, p);
  EXPECT_EQ(f, Eigen::VectorXd(-p.damping.cwiseProduct(v)));
}

TEST(ExternalForce, UnitInputOnFirstSegment) {
  const RodParams p = fixtures::rod_params();
  const ActuationModel a = lambda_diag(p, 2.0, 2.0);
  const RodState s = straight_rod(p.num_nodes, p.rest_length);
  const Eigen::VectorXd f =
      external_force(s, Eigen::VectorXd::Zero(p.num_dofs()), Eigen::Vector2d(1.0, 0.0), a, p);
  const std::vector<int> nodes = boundary_nodes(a, 0);
  for (int i = 0; i < p.num_nodes; ++i) {
    const Vec3 fi = f.segment<3>(node_offset(i));
    if (std::find(nodes.begin(), nodes.end(), i) != nodes.end()) {
      EXPECT_DOUBLE_EQ(fi.norm(), 2.0);
      EXPECT_DOUBLE_EQ(std::abs(fi.y()), 2.0);
    } else {
      EXPECT_EQ(fi.norm(), 0.0);
    }
  }
}

TEST(ExternalForce, DimensionMismatchThrows) {
  const RodParams p = fixtures::rod_params();
  const ActuationModel a = fixtures::actuation(p);
  const RodState s = straight_rod(p.num_nodes, p.rest_length);
  EXPECT_THROW(external_force(s, Eigen::VectorXd::Zero(3), Eigen::Vector2d::Zero(), a, p),
               DimensionMismatch);
  EXPECT_THROW(
      external_force(s, Eigen::VectorXd::Zero(p.num_dofs()), Eigen::Vector3d::Zero(), a, p),
      DimensionMismatch);
}

TEST(ExternalForce, GravityIsLumped) {
  RodParams p = fixtures::rod_params();
  p.gravity = Vec3(0, 0, -9.81);
  const Eigen::VectorXd g = gravity_force(p);
  EXPECT_DOUBLE_EQ(g[node_offset(3) + 2], -9.81 * p.node_masses[3]);
  EXPECT_EQ(g[twist_offset(3)], 0.0);
}

RodParams single_arc_params() { return make_uniform_params({12}, 0.11, 0.01, 1e4, 1e-3, 1e-3); }

class UniformArc : public ::testing::TestWithParam<double> {};

TEST_P(UniformArc, BendingForcesLocalize) {
  const RodParams p = single_arc_params();
  const LocalizationDiagnostics d =
      localization_report(testing::arc_state(12, 0.01, GetParam()), p);
  ASSERT_EQ(d.segments.size(), 1u);
  const SegmentLocalization& s = d.segments[0];
  EXPECT_FALSE(s.zero_boundary);
  EXPECT_LE(s.interior_ratio, 1e-9);
  EXPECT_LE(s.pair_start, 1e-9);
  EXPECT_LE(s.pair_end, 1e-9);
  EXPECT_LE(s.orthogonal_start, 1e-9);
  EXPECT_LE(s.orthogonal_end, 1e-9);
  EXPECT_NEAR(s.boundary_start, s.boundary_end, 1e-9 * s.boundary_start);
}

INSTANTIATE_TEST_SUITE_P(Angles, UniformArc, ::testing::Values(0.1, 0.3, 0.6));

TEST(Localization, BoundaryMagnitudeLaw) {
  const RodParams p = single_arc_params();
  auto law = [](double t) { return std::sin(t) / std::pow(1.0 + std::cos(t), 2); };
  auto boundary = [&](double t) {
    return localization_report(testing::arc_state(12, 0.01, t), p).segments[0].boundary_start;
  };
  const double thetas[3] = {0.1, 0.3, 0.6};
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      const double measured = boundary(thetas[a]) / boundary(thetas[b]);
      const double expected = law(thetas[a]) / law(thetas[b]);
      EXPECT_NEAR(measured / expected, 1.0, 1e-6);
    }
  }
}

TEST(Localization, StraightRodFlagsZeroBoundary) {
  const RodParams p = fixtures::rod_params();
  const LocalizationDiagnostics d = localization_report(straight_rod(p.num_nodes, p.rest_length), p);
  EXPECT_EQ(d.bending_forces.lpNorm<Eigen::Infinity>(), 0.0);
  for (const SegmentLocalization& s : d.segments) {
    EXPECT_TRUE(s.zero_boundary);
    EXPECT_EQ(s.interior_ratio, 0.0);
    EXPECT_EQ(s.pair_start, 0.0);
  }
  EXPECT_EQ(d.junction_coupling, 0.0);
}

TEST(Localization, SegmentsDecoupleAtColinearJunction) {
  const RodParams p = fixtures::rod_params();
  const ActuationModel a = fixtures::actuation(p);
  const RodState s = reference_configuration(Eigen::Vector2d(0.4, -0.25), p, a);
  const LocalizationDiagnostics d = localization_report(s, p);
  ASSERT_EQ(d.segments.size(), 2u);
  EXPECT_LE(d.junction_coupling, 1e-9);
  for (const SegmentLocalization& seg : d.segments) {
    EXPECT_LE(seg.isolated_mismatch, 1e-9);
    EXPECT_LE(seg.interior_ratio, 1e-9);
  }
  EXPECT_LE(d.worst(), 1e-9);
}

TEST(Localization, UnevenArcsAreNotLocalized) {
  std::mt19937_64 rng(31);
  const RodParams p = single_arc_params();
  const RodState s = testing::random_planar(rng, 12, 0.01, 0.5);
  EXPECT_GT(localization_report(s, p).segments[0].interior_ratio, 1e-3);
}

}  // namespace
}  // namespace softder
