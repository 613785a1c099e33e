#include "softder/trajgen.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "softder/errors.hpp"

namespace softder {

double TaskReference::interval() const {
  return times.size() >= 2 ? times[1] - times[0] : 0.0;
}

void TaskReference::validate() const {
  if (times.size() < 3) throw TooFewSamples("a reference needs at least 3 samples");
  if (tips.size() != times.size()) throw DimensionMismatch("one tip target per sample expected");
  if (!angles.empty() && angles.size() != times.size()) {
    throw DimensionMismatch("one angle sample per time expected");
  }
  const double h = interval();
  if (!(h > 0.0)) throw ValidationError("reference.times", "must increase");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (std::abs(times[k] - times[k - 1] - h) > 1e-9 * h) {
      throw ValidationError("reference.times", "grid must be uniform");
    }
  }
}

TaskReference reference_from_angles(std::vector<double> times,
                                    std::vector<Eigen::VectorXd> angles, const ArcChain& chain) {
  TaskReference r;
  r.tips.reserve(angles.size());
  for (const auto& a : angles) r.tips.push_back(pcc_forward_kinematics(a, chain));
  r.times = std::move(times);
  r.angles = std::move(angles);
  r.validate();
  return r;
}

Gains make_gains(const RodParams& params, double omega, double zeta,
                 const std::vector<int>& clamped_dofs) {
  if (!(omega >= 0.0) || !(zeta >= 0.0)) {
    throw ValidationError("gains", "omega and zeta must be non-negative");
  }
  const Eigen::VectorXd m = mass_diagonal(params);
  Gains g{omega * omega * m, 2.0 * zeta * omega * m};
  for (int d : clamped_dofs) {
    g.Kp[d] = 0.0;
    g.Kd[d] = 0.0;
  }
  return g;
}

std::vector<Eigen::VectorXd> solve_ik(const TaskReference& reference, const ArcChain& chain) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(reference.tips.size());
  for (std::size_t k = 0; k < reference.tips.size(); ++k) {
    const Eigen::VectorXd* prior = nullptr;
    if (!reference.angles.empty()) {
      prior = &reference.angles[k];
    } else if (k > 0) {
      prior = &out.back();
    }
    out.push_back(pcc_ik(reference.tips[k], chain, prior));
  }
  return out;
}

RodState reference_configuration(const Eigen::VectorXd& theta, const RodParams& params,
                                 const ActuationModel& actuation) {
  if (actuation.num_nodes() != params.num_nodes) {
    throw LayoutMismatch("actuation layout does not match the rod");
  }
  const std::vector<Vec3> nodes = chain_nodes(arc_chain(params), theta);
  return build_state(nodes, std::vector<double>(nodes.size() - 1, 0.0));
}

ReferenceDerivatives reference_derivatives(const std::vector<Eigen::VectorXd>& q, double dt) {
  const std::size_t n = q.size();
  if (n < 3) throw TooFewSamples("derivatives need at least 3 samples, got " + std::to_string(n));
  if (!(dt > 0.0)) throw ValidationError("dt", "must be positive");
  ReferenceDerivatives d;
  d.velocity.resize(n);
  d.acceleration.resize(n);
  const double h2 = dt * dt;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    d.velocity[k] = (q[k + 1] - q[k - 1]) / (2.0 * dt);
    d.acceleration[k] = (q[k + 1] - 2.0 * q[k] + q[k - 1]) / h2;
  }
  d.velocity[0] = (-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * dt);
  d.velocity[n - 1] = (3.0 * q[n - 1] - 4.0 * q[n - 2] + q[n - 3]) / (2.0 * dt);
  if (n >= 4) {
    d.acceleration[0] = (2.0 * q[0] - 5.0 * q[1] + 4.0 * q[2] - q[3]) / h2;
    d.acceleration[n - 1] = (2.0 * q[n - 1] - 5.0 * q[n - 2] + 4.0 * q[n - 3] - q[n - 4]) / h2;
  } else {
    d.acceleration[0] = d.acceleration[2] = d.acceleration[1];
  }
  return d;
}

std::vector<Eigen::VectorXd> interval_midpoints(const std::vector<Eigen::VectorXd>& q) {
  const std::size_t n = q.size();
  if (n < 3) throw TooFewSamples("midpoints need at least 3 samples, got " + std::to_string(n));
  std::vector<Eigen::VectorXd> mid(n - 1);
  mid[0] = (3.0 * q[0] + 6.0 * q[1] - q[2]) / 8.0;
  mid[n - 2] = (3.0 * q[n - 1] + 6.0 * q[n - 2] - q[n - 3]) / 8.0;
  for (std::size_t k = 1; k + 2 < n; ++k) {
    mid[k] = (-q[k - 1] + 9.0 * q[k] + 9.0 * q[k + 1] - q[k + 2]) / 16.0;
  }
  return mid;
}

ControlResult control_input(const RodState& feedforward_shape,
                            const Eigen::VectorXd& feedforward_acceleration,
                            const RodState& reference, const Eigen::VectorXd& ref_velocity,
                            const RodState& state, const Gains& gains, const RodParams& params,
                            const ActuationModel& actuation, const SimConfig& config) {
  const int nd = state.num_dofs();
  if (reference.num_dofs() != nd || feedforward_shape.num_dofs() != nd ||
      ref_velocity.size() != nd || feedforward_acceleration.size() != nd ||
      gains.Kp.size() != nd || gains.Kd.size() != nd || params.num_dofs() != nd) {
    throw DimensionMismatch("control_input: dof counts disagree");
  }
  const Eigen::VectorXd mass = mass_diagonal(params);
  const Eigen::VectorXd& v = state.velocity();
  Eigen::VectorXd w = mass.cwiseProduct(feedforward_acceleration) -
                      internal_forces(feedforward_shape, params) +
                      gains.Kp.cwiseProduct(reference.dofs() - state.dofs()) +
                      gains.Kd.cwiseProduct(ref_velocity - v) + params.damping.cwiseProduct(v) -
                      gravity_force(params);
  Eigen::MatrixXd A = build_B(state, actuation) * actuation.Lambda;
  for (int d : config.clamped_dofs) {
    w[d] = 0.0;
    A.row(d).setZero();
  }
  const double lambda = 1e-6 * A.norm();
  Eigen::MatrixXd normal = A.transpose() * A;
  normal.diagonal().array() += lambda * lambda;
  ControlResult out;
  out.unclamped = normal.ldlt().solve(A.transpose() * w);
  out.u = out.unclamped;
  for (int j = 0; j < out.u.size(); ++j) {
    if (std::abs(out.u[j]) > actuation.input_bound) {
      out.u[j] = std::copysign(actuation.input_bound, out.u[j]);
      out.saturated = true;
    }
  }
  return out;
}

ControlResult control_input(const RodState& reference, const Eigen::VectorXd& ref_velocity,
                            const Eigen::VectorXd& ref_acceleration, const RodState& state,
                            const Gains& gains, const RodParams& params,
                            const ActuationModel& actuation, const SimConfig& config) {
  return control_input(reference, ref_acceleration, reference, ref_velocity, state, gains, params,
                       actuation, config);
}

Trajectory generate(const TaskReference& reference, const RodParams& params,
                    const ActuationModel& actuation, const Gains& gains, const SimConfig& config) {
  reference.validate();
  const double h = reference.interval();
  const int sub = substeps_per_interval(h, config.dt);
  const std::vector<Eigen::VectorXd> angles = solve_ik(reference, arc_chain(params));
  const std::vector<Eigen::VectorXd> mid_angles = interval_midpoints(angles);

  std::vector<RodState> shapes;
  std::vector<Eigen::VectorXd> qref;
  shapes.reserve(angles.size());
  for (const auto& a : angles) {
    shapes.push_back(reference_configuration(a, params, actuation));
    qref.push_back(shapes.back().dofs());
  }
  const ReferenceDerivatives der = reference_derivatives(qref, h);

  Trajectory traj;
  RodState s = shapes.front();
  const std::size_t n = shapes.size();
  for (std::size_t k = 0; k < n; ++k) {
    ControlResult c;
    if (k + 1 < n) {
      const RodState ff = reference_configuration(mid_angles[k], params, actuation);
      const Eigen::VectorXd ff_acc = 0.5 * (der.acceleration[k] + der.acceleration[k + 1]);
      c = control_input(ff, ff_acc, shapes[k], der.velocity[k], s, gains, params, actuation, config);
    } else {
      c = control_input(shapes[k], der.velocity[k], der.acceleration[k], s, gains, params,
                        actuation, config);
    }
    traj.times.push_back(reference.times[k]);
    traj.states.push_back(s);
    traj.inputs.push_back(c.u);
    traj.tips.push_back(tip_position(s));
    traj.saturated.push_back(c.saturated);
    if (k + 1 == n) break;
    for (int i = 0; i < sub; ++i) s = step(s, c.u, params, actuation, config);
  }
  // The final sample has no interval to drive; it repeats the last applied input.
  if (n >= 2) {
    traj.inputs.back() = traj.inputs[n - 2];
    traj.saturated.back() = traj.saturated[n - 2];
  }
  return traj;
}

InputSchedule schedule_of(const Trajectory& trajectory) {
  InputSchedule s;
  if (trajectory.times.size() >= 2) s.interval = trajectory.times[1] - trajectory.times[0];
  s.inputs.assign(trajectory.inputs.begin(), trajectory.inputs.end() - (trajectory.inputs.empty() ? 0 : 1));
  return s;
}

}  // namespace softder
