#pragma once

// Rod trajectory generation: tip reference -> bend angles by inverse
// kinematics -> nodal reference shapes -> model-based feedback
//   u = (B(q) Lambda)^+ (M qref'' - F_int(qref) + Kp (qref - q) + Kd (qref' - q') + D q')
// applied in closed loop on the rod model, which makes the recorded
// {q(t), u(t)} a solution of the dynamics by construction.

#include <vector>

#include <Eigen/Core>

#include "softder/actuation.hpp"
#include "softder/arc_chain.hpp"
#include "softder/dynamics.hpp"
#include "softder/elastic.hpp"

namespace softder {

/// Tip targets on a uniform control grid. `angles` optionally carries the bend
/// schedule the targets were built from; it seeds the inverse kinematics.
struct TaskReference {
  std::vector<double> times;
  std::vector<Vec3> tips;
  std::vector<Eigen::VectorXd> angles;

  double interval() const;
  /// Throws TooFewSamples / ValidationError on a short or non-uniform grid.
  void validate() const;
};

TaskReference reference_from_angles(std::vector<double> times,
                                    std::vector<Eigen::VectorXd> angles, const ArcChain& chain);

struct Gains {
  Eigen::VectorXd Kp;  // 1/s^2 scaled by the dof's mass
  Eigen::VectorXd Kd;  // 1/s scaled by the dof's mass
};

/// Kp = omega^2 M, Kd = 2 zeta omega M, zero on clamped dofs.
Gains make_gains(const RodParams& params, double omega, double zeta,
                 const std::vector<int>& clamped_dofs);

/// Bend angles for every reference sample, continuous along the sequence.
std::vector<Eigen::VectorXd> solve_ik(const TaskReference& reference, const ArcChain& chain);

/// Rod shape of two (or more) constant-curvature arcs; zero twist and velocity.
RodState reference_configuration(const Eigen::VectorXd& theta, const RodParams& params,
                                 const ActuationModel& actuation);

struct ReferenceDerivatives {
  std::vector<Eigen::VectorXd> velocity;
  std::vector<Eigen::VectorXd> acceleration;
};

/// Central differences inside, second-order one-sided differences at the
/// ends. Throws TooFewSamples with fewer than 3 samples.
ReferenceDerivatives reference_derivatives(const std::vector<Eigen::VectorXd>& samples, double dt);

struct ControlResult {
  Eigen::VectorXd u;
  Eigen::VectorXd unclamped;
  bool saturated = false;
};

/// Damped least squares on the free dofs with lambda = 1e-6 |B Lambda|_F,
/// then clamped to the actuator bound.
ControlResult control_input(const RodState& reference, const Eigen::VectorXd& ref_velocity,
                            const Eigen::VectorXd& ref_acceleration, const RodState& state,
                            const Gains& gains, const RodParams& params,
                            const ActuationModel& actuation, const SimConfig& config);

/// Same law with the feedforward part, M qref'' - F_int(qref), taken from a
/// separate reference sample. The generator evaluates it mid-interval so the
/// held input matches the interval's average demand instead of lagging it.
ControlResult control_input(const RodState& feedforward_shape,
                            const Eigen::VectorXd& feedforward_acceleration,
                            const RodState& reference, const Eigen::VectorXd& ref_velocity,
                            const RodState& state, const Gains& gains, const RodParams& params,
                            const ActuationModel& actuation, const SimConfig& config);

/// Samples halfway between consecutive entries (cubic interpolation inside,
/// quadratic next to the ends). Throws TooFewSamples with fewer than 3.
std::vector<Eigen::VectorXd> interval_midpoints(const std::vector<Eigen::VectorXd>& samples);

/// Closed-loop synthesis on the rod model. Starts on the first reference shape
/// at rest and records one sample per control instant. Each held input uses
/// feedback at the control instant and feedforward at the interval midpoint.
Trajectory generate(const TaskReference& reference, const RodParams& params,
                    const ActuationModel& actuation, const Gains& gains, const SimConfig& config);

/// The recorded inputs as a zero-order-hold schedule.
InputSchedule schedule_of(const Trajectory& trajectory);

}  // namespace softder
