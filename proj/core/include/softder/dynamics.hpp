#pragma once

// Implicit-Euler time stepping of M qddot = F_int(q) - D qdot + B(q) Lambda u.
//
// Each step solves, on the free dofs,
//   M (q+ - q - dt v) / dt^2 = F_int(q+) - D (q+ - q) / dt + B(q) Lambda u
// by Newton iteration with a backtracking line search. B is frozen at the
// pre-step configuration. Clamped dofs keep their value and get zero velocity.

#include <vector>

#include <Eigen/Core>

#include "softder/actuation.hpp"
#include "softder/elastic.hpp"
#include "softder/geometry.hpp"

namespace softder {

struct SimConfig {
  double dt = 0.005;
  double newton_tol = 1e-9;  // relative to the step's force scale
  int newton_max_iters = 50;
  /// Cantilever clamp: node 0, twist 0 and node 1.
  std::vector<int> clamped_dofs = {0, 1, 2, 3, 4, 5, 6};

  void validate(int num_dofs) const;
};

struct StepStats {
  int iterations = 0;
  double residual = 0.0;  // final free-dof residual norm (N)
};

struct Trajectory {
  std::vector<double> times;
  std::vector<RodState> states;
  std::vector<Eigen::VectorXd> inputs;  // applied over [t_k, t_{k+1}); last repeats
  std::vector<Vec3> tips;
  std::vector<bool> saturated;

  std::size_t size() const { return times.size(); }
};

/// Zero-order-held inputs, one per control interval.
struct InputSchedule {
  double interval = 0.05;
  std::vector<Eigen::VectorXd> inputs;
};

/// One implicit step. Throws NewtonDivergence, AntipodalTangents.
RodState step(const RodState& state, const Eigen::VectorXd& u, const RodParams& params,
              const ActuationModel& actuation, const SimConfig& config,
              StepStats* stats = nullptr);

/// Steps through the schedule, recording one sample per control instant.
Trajectory rollout(const RodState& state0, const InputSchedule& schedule, const RodParams& params,
                   const ActuationModel& actuation, const SimConfig& config);

/// Number of simulator steps per control interval; throws ValidationError when
/// the interval is not an integer multiple of dt.
int substeps_per_interval(double interval, double dt);

struct EnergyReport {
  double kinetic = 0.0;
  double elastic = 0.0;

  double total() const { return kinetic + elastic; }
};

EnergyReport total_energy(const RodState& state, const RodParams& params);

/// Free-dof residual of F_int(q) + B(q) Lambda u + gravity, for steady states.
Eigen::VectorXd static_residual(const RodState& state, const Eigen::VectorXd& u,
                                const RodParams& params, const ActuationModel& actuation,
                                const SimConfig& config);

}  // namespace softder
