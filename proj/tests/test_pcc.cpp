#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "softder/errors.hpp"
#include "softder/fixtures.hpp"
#include "softder/pcc.hpp"

namespace softder {
namespace {

struct Baseline {
  RodParams rod = fixtures::rod_params();
  ActuationModel actuation = fixtures::actuation(rod);
  PccParams params = fixtures::pcc_params(rod);
  PccGains gains = fixtures::pcc_gains();
};

PccState at(const Eigen::Vector2d& theta, const Eigen::Vector2d& rate = Eigen::Vector2d::Zero()) {
  return PccState{theta, rate};
}

TaskReference ramp_reference(const ArcChain& chain, const Eigen::Vector2d& target, double ramp,
                             double hold) {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> angles;
  const int n = static_cast<int>(std::lround((ramp + hold) / 0.05));
  for (int k = 0; k <= n; ++k) {
    const double x = std::min(0.05 * k / ramp, 1.0);
    times.push_back(0.05 * k);
    angles.push_back((x - std::sin(2 * std::numbers::pi * x) / (2 * std::numbers::pi)) * target);
  }
  return reference_from_angles(times, angles, chain);
}

TEST(MassMatrix, SymmetricPositiveDefiniteOnGrid) {
  Baseline b;
  for (double t1 = -2.0; t1 <= 2.0 + 1e-12; t1 += 0.5) {
    for (double t2 = -2.0; t2 <= 2.0 + 1e-12; t2 += 0.5) {
      const Eigen::MatrixXd M = pcc_mass_matrix(Eigen::Vector2d(t1, t2), b.params);
      EXPECT_LE((M - M.transpose()).norm(), 1e-12 * M.norm());
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
      EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    }
  }
}

TEST(Dynamics, RestIsEquilibrium) {
  Baseline b;
  const Eigen::VectorXd acc = pcc_dynamics(at(Eigen::Vector2d::Zero()), Eigen::Vector2d::Zero(), b.params);
  EXPECT_LE(acc.norm(), 1e-15);
}

TEST(Dynamics, StiffnessTorqueHoldsBend) {
  Baseline b;
  const Eigen::Vector2d theta(0.7, -0.4);
  const Eigen::VectorXd tau = b.params.stiffness.cwiseProduct(theta);
  EXPECT_LE(pcc_dynamics(at(theta), tau, b.params).norm(), 1e-12);
  PccState s = at(theta);
  for (int k = 0; k < 200; ++k) s = pcc_step(s, tau, b.params, 0.005);
  EXPECT_LE((s.theta - theta).norm(), 1e-12);
}

TEST(Dynamics, ConservativeWithoutDampingAndStiffness) {
  Baseline b;
  PccParams p = b.params;
  p.damping.setZero();
  p.stiffness.setZero();
  PccState s = at(Eigen::Vector2d(0.3, -0.2), Eigen::Vector2d(1.0, -2.0));
  const double e0 = pcc_energy(s, p);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    s = pcc_step(s, Eigen::Vector2d::Zero(), p, 1e-3);
    worst = std::max(worst, std::abs(pcc_energy(s, p) - e0));
  }
  EXPECT_LE(worst, 0.01 * e0);
}

TEST(Dynamics, WrongTorqueSizeThrows) {
  Baseline b;
  EXPECT_THROW(pcc_dynamics(at(Eigen::Vector2d::Zero()), Eigen::Vector3d::Zero(), b.params),
               DimensionMismatch);
}

TEST(VirtualTorque, RestGivesZero) {
  Baseline b;
  const Eigen::Vector2d z = Eigen::Vector2d::Zero();
  EXPECT_LE(pcc_virtual_torque(z, z, z, at(z), b.gains, b.params).norm(), 1e-15);
}

TEST(VirtualTorque, StaticReferenceGivesStiffnessTorque) {
  Baseline b;
  const Eigen::Vector2d theta(-0.5, 1.1), z = Eigen::Vector2d::Zero();
  const Eigen::VectorXd tau = pcc_virtual_torque(theta, z, z, at(theta), b.gains, b.params);
  EXPECT_LE((tau - b.params.stiffness.cwiseProduct(theta)).norm(), 1e-12);
}

TEST(VirtualTorque, StateEntersOnlyThroughFeedback) {
  Baseline b;
  const Eigen::Vector2d ref(0.4, -0.3), rate(0.5, 1.2), acc(-2.0, 3.0);
  const Eigen::Vector2d dtheta(0.05, -0.02), drate(-0.3, 0.1);
  const Eigen::VectorXd on = pcc_virtual_torque(ref, rate, acc, at(ref, rate), b.gains, b.params);
  const Eigen::VectorXd off =
      pcc_virtual_torque(ref, rate, acc, at(ref + dtheta, rate + drate), b.gains, b.params);
  const Eigen::VectorXd expected =
      -pcc_mass_matrix(ref, b.params) * (b.gains.kp * dtheta + b.gains.kd * drate);
  EXPECT_LE((off - on - expected).norm(), 1e-12 * on.norm());
}

TEST(VirtualTorque, SplitFormMatchesSingleSample) {
  Baseline b;
  const Eigen::Vector2d ref(0.4, -0.3), rate(0.5, 1.2), acc(-2.0, 3.0);
  const PccState s = at(Eigen::Vector2d(0.35, -0.2), Eigen::Vector2d(0.1, 0.9));
  EXPECT_LE((pcc_virtual_torque(ref, rate, acc, ref, rate, s, b.gains, b.params) -
             pcc_virtual_torque(ref, rate, acc, s, b.gains, b.params))
                .norm(),
            1e-15);
}

TEST(Input, Examples) {
  EXPECT_EQ(pcc_input(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity()).norm(), 0.0);
  const Eigen::Matrix2d L = Eigen::Vector2d(2.0, 4.0).asDiagonal();
  EXPECT_LE((pcc_input(Eigen::Vector2d(2.0, 4.0), L) - Eigen::Vector2d(1.0, 1.0)).norm(), 1e-15);
  const Eigen::Vector2d tau(0.3, -7.0);
  EXPECT_LE((pcc_input(tau, Eigen::Matrix2d::Identity()) - tau).norm(), 1e-15);
  EXPECT_THROW(pcc_input(tau, Eigen::Matrix2d::Zero()), SingularLambda);
  EXPECT_THROW(pcc_input(Eigen::Vector3d::Zero(), Eigen::Matrix2d::Identity()), DimensionMismatch);
}

TEST(Generate, RestReferenceGivesZeroInput) {
  Baseline b;
  const TaskReference ref = ramp_reference(b.params.chain, Eigen::Vector2d::Zero(), 1.0, 0.0);
  const PccTrajectory t = pcc_generate(ref, b.params, b.gains, b.actuation, 0.005);
  for (const auto& u : t.inputs) EXPECT_LE(u.norm(), 1e-12);
  for (const auto& s : t.states) EXPECT_LE(s.theta.norm(), 1e-12);
}

TEST(Generate, MatchedPlantTracksReference) {
  Baseline b;
  const Eigen::Vector2d target(0.6, 0.6);
  const TaskReference ref = ramp_reference(b.params.chain, target, 5.0, 3.0);
  const PccTrajectory t = pcc_generate(ref, b.params, b.gains, b.actuation, 0.005);
  ASSERT_EQ(t.size(), ref.times.size());
  // Replaying the recorded torques on the model reproduces the recorded states.
  PccState s = t.states.front();
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    for (int i = 0; i < 10; ++i) s = pcc_step(s, t.torques[k], b.params, 0.005);
    EXPECT_LE((s.theta - t.states[k + 1].theta).norm(), 1e-12);
  }
  double ramp_error = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    ramp_error = std::max(ramp_error, (t.states[k].theta - ref.angles[k]).norm());
  }
  EXPECT_LE(ramp_error, 5e-3);
  EXPECT_LE((s.theta - target).norm(), 1e-3);
}

TEST(Generate, InputsMapTorquesThroughLambda) {
  Baseline b;
  const TaskReference ref = ramp_reference(b.params.chain, Eigen::Vector2d(0.5, -0.5), 2.0, 0.0);
  const PccTrajectory t = pcc_generate(ref, b.params, b.gains, b.actuation, 0.005);
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_LE((b.actuation.Lambda * t.inputs[k] - t.torques[k]).norm(), 1e-12);
  }
  const InputSchedule sched = schedule_of(t);
  EXPECT_EQ(sched.inputs.size(), t.size() - 1);
  EXPECT_DOUBLE_EQ(sched.interval, 0.05);
}

TEST(Identification, ReproducesFixtureConstants) {
  Baseline b;
  const PccIdentification id = identify_pcc(b.rod, b.actuation, fixtures::sim_config());
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(id.stiffness[j], fixtures::kPccStiffness[j], 1e-9 * fixtures::kPccStiffness[j]);
    EXPECT_NEAR(id.damping[j], fixtures::kPccDamping[j], 1e-9 * fixtures::kPccDamping[j]);
  }
}

TEST(Params, Layout) {
  Baseline b;
  ASSERT_EQ(b.params.masses.size(), 4u);
  double total = 0.0;
  for (const PointMass& m : b.params.masses) total += m.mass;
  EXPECT_NEAR(total, fixtures::kRodMass, 1e-15);
  EXPECT_DOUBLE_EQ(b.params.masses[1].node_index, 7.0);
  EXPECT_DOUBLE_EQ(b.params.masses[3].node_index, 15.0);
  EXPECT_DOUBLE_EQ(b.params.lever_arm, b.rod.rest_edge_length());
}

}  // namespace
}  // namespace softder
