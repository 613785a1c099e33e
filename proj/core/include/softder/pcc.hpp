#pragma once

// Two-coordinate constant-curvature baseline. The arm is the arc chain with
// lumped point masses at the middle and the end of every segment; its
// Lagrangian dynamics
//   M_p(theta) theta'' + C_p(theta, theta') theta' + D_p theta' + K theta = tau
// are divided through by a lever arm, so tau reads as an equivalent boundary
// force and maps to inputs through the same Lambda as the rod (u = Lambda^+ tau).

#include <vector>

#include <Eigen/Core>

#include "softder/actuation.hpp"
#include "softder/arc_chain.hpp"
#include "softder/dynamics.hpp"
#include "softder/elastic.hpp"
#include "softder/trajgen.hpp"

namespace softder {

struct PointMass {
  double node_index = 0.0;  // fractional position along the chain
  double mass = 0.0;        // kg
};

struct PccParams {
  ArcChain chain;
  std::vector<PointMass> masses;
  double lever_arm = 0.0;   // m
  Eigen::VectorXd damping;  // diagonal of D_p, N s/rad
  Eigen::VectorXd stiffness;  // diagonal of K, N/rad

  int dim() const { return chain.num_segments(); }
  void validate() const;
};

struct PccState {
  Eigen::VectorXd theta;
  Eigen::VectorXd theta_dot;
};

/// Each segment's mass split between its midpoint and its end; lever arm is
/// the rest edge length.
PccParams make_pcc_params(const RodParams& rod, Eigen::VectorXd stiffness, Eigen::VectorXd damping);

Eigen::MatrixXd pcc_mass_matrix(const Eigen::VectorXd& theta, const PccParams& params);
/// C_p from Christoffel symbols of M_p, derivatives by central differences.
Eigen::MatrixXd pcc_coriolis(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_dot,
                             const PccParams& params);

/// Solves for theta''. Throws SingularInertia.
Eigen::VectorXd pcc_dynamics(const PccState& state, const Eigen::VectorXd& tau,
                             const PccParams& params);

/// Kinetic plus elastic energy of the lumped model.
double pcc_energy(const PccState& state, const PccParams& params);

/// Classic fourth-order Runge-Kutta step with tau held.
PccState pcc_step(const PccState& state, const Eigen::VectorXd& tau, const PccParams& params,
                  double dt);

struct PccGains {
  double kp = 100.0;  // 1/s^2
  double kd = 20.0;   // 1/s
};

PccGains make_pcc_gains(double omega, double zeta);

/// Computed torque with the inverse-dynamics part, stiffness and damping
/// included, evaluated on the reference rather than the measured state; the
/// PD feedback is scaled by M(theta_ref).
Eigen::VectorXd pcc_virtual_torque(const Eigen::VectorXd& ref, const Eigen::VectorXd& ref_velocity,
                                   const Eigen::VectorXd& ref_acceleration, const PccState& state,
                                   const PccGains& gains, const PccParams& params);

/// Same law with the inverse-dynamics part taken from a separate sample.
Eigen::VectorXd pcc_virtual_torque(const Eigen::VectorXd& ff, const Eigen::VectorXd& ff_velocity,
                                   const Eigen::VectorXd& ff_acceleration, const Eigen::VectorXd& ref,
                                   const Eigen::VectorXd& ref_velocity, const PccState& state,
                                   const PccGains& gains, const PccParams& params);

/// u = Lambda^+ tau. Throws SingularLambda, DimensionMismatch.
Eigen::VectorXd pcc_input(const Eigen::VectorXd& tau, const Eigen::MatrixXd& Lambda);

struct PccTrajectory {
  std::vector<double> times;
  std::vector<PccState> states;
  std::vector<Eigen::VectorXd> torques;
  std::vector<Eigen::VectorXd> inputs;  // clamped to the actuator bound
  std::vector<bool> saturated;
  std::vector<Vec3> tips;

  std::size_t size() const { return times.size(); }
};

/// Inverse kinematics, computed torque on the PCC plant, then the input map.
/// Same structure as the rod generator: one held input per control interval,
/// feedback at the control instant, inverse dynamics at the interval midpoint.
PccTrajectory pcc_generate(const TaskReference& reference, const PccParams& params,
                           const PccGains& gains, const ActuationModel& actuation, double dt);

InputSchedule schedule_of(const PccTrajectory& trajectory);

struct PccIdentification {
  Eigen::VectorXd stiffness;
  Eigen::VectorXd damping;
};

/// Fits K by least squares to steady bend angles of rod step responses at the
/// given input levels, then D_p per segment by golden-section search on the
/// step-response mismatch of theta(t).
PccIdentification identify_pcc(const RodParams& rod, const ActuationModel& actuation,
                               const SimConfig& config, const std::vector<double>& levels = {0.5, 1.0},
                               double settle_time = 3.0, double fit_horizon = 1.5);

}  // namespace softder
