#include "softder/pcc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "softder/errors.hpp"

namespace softder {

void PccParams::validate() const {
  const int m = dim();
  if (m < 1) throw ValidationError("pcc", "needs at least one segment");
  if (stiffness.size() != m || damping.size() != m) {
    throw DimensionMismatch("pcc stiffness and damping need one entry per segment");
  }
  if (!(lever_arm > 0.0)) throw ValidationError("pcc.lever_arm", "must be positive");
  if (masses.empty()) throw ValidationError("pcc.masses", "need at least one point mass");
  for (const auto& pm : masses) {
    if (!(pm.mass > 0.0)) throw ValidationError("pcc.masses", "must be positive");
  }
  if (!(stiffness.array() >= 0.0).all() || !(damping.array() >= 0.0).all()) {
    throw ValidationError("pcc", "stiffness and damping must be non-negative");
  }
}

PccParams make_pcc_params(const RodParams& rod, Eigen::VectorXd stiffness, Eigen::VectorXd damping) {
  PccParams p;
  p.chain = arc_chain(rod);
  p.lever_arm = rod.rest_edge_length();
  const int m = p.chain.num_segments();
  double s = 0.0;
  for (int j = 0; j < m; ++j) {
    const double seg_mass = rod.total_mass() / m;
    const double end = s + p.chain.segment_nodes[j] - 1;
    p.masses.push_back({0.5 * (s + end), 0.5 * seg_mass});
    p.masses.push_back({end, 0.5 * seg_mass});
    s += p.chain.segment_nodes[j];
  }
  p.stiffness = std::move(stiffness);
  p.damping = std::move(damping);
  p.validate();
  return p;
}

Eigen::MatrixXd pcc_mass_matrix(const Eigen::VectorXd& theta, const PccParams& params) {
  const int m = params.dim();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
  for (const auto& pm : params.masses) {
    const Eigen::MatrixXd J = chain_point_jacobian(params.chain, theta, pm.node_index);
    M += pm.mass * J.transpose() * J;
  }
  return M / params.lever_arm;
}

Eigen::MatrixXd pcc_coriolis(const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_dot,
                             const PccParams& params) {
  const int m = params.dim();
  const double h = 1e-6;
  std::vector<Eigen::MatrixXd> dM(m);
  for (int k = 0; k < m; ++k) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp[k] += h;
    tm[k] -= h;
    dM[k] = (pcc_mass_matrix(tp, params) - pcc_mass_matrix(tm, params)) / (2.0 * h);
  }
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < m; ++k) {
        C(i, j) += 0.5 * (dM[k](i, j) + dM[j](i, k) - dM[i](j, k)) * theta_dot[k];
      }
    }
  }
  return C;
}

namespace {

void check_state(const PccState& s, const PccParams& p) {
  if (s.theta.size() != p.dim() || s.theta_dot.size() != p.dim()) {
    throw DimensionMismatch("pcc state has the wrong size");
  }
  if (!s.theta.allFinite() || !s.theta_dot.allFinite()) throw NonFinite("pcc state is not finite");
}

}  // namespace

Eigen::VectorXd pcc_dynamics(const PccState& state, const Eigen::VectorXd& tau,
                             const PccParams& params) {
  check_state(state, params);
  if (tau.size() != params.dim()) throw DimensionMismatch("tau has the wrong size");
  const Eigen::MatrixXd M = pcc_mass_matrix(state.theta, params);
  const Eigen::VectorXd rhs = tau - pcc_coriolis(state.theta, state.theta_dot, params) * state.theta_dot -
                              params.damping.cwiseProduct(state.theta_dot) -
                              params.stiffness.cwiseProduct(state.theta);
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw SingularInertia("PCC mass matrix is not positive definite");
  return llt.solve(rhs);
}

double pcc_energy(const PccState& state, const PccParams& params) {
  check_state(state, params);
  const Eigen::MatrixXd M = pcc_mass_matrix(state.theta, params);
  return 0.5 * state.theta_dot.dot(M * state.theta_dot) +
         0.5 * state.theta.dot(params.stiffness.cwiseProduct(state.theta));
}

PccState pcc_step(const PccState& s, const Eigen::VectorXd& tau, const PccParams& params, double dt) {
  auto f = [&](const PccState& x) { return pcc_dynamics(x, tau, params); };
  const Eigen::VectorXd k1v = f(s);
  const Eigen::VectorXd k1x = s.theta_dot;
  const PccState s2{s.theta + 0.5 * dt * k1x, s.theta_dot + 0.5 * dt * k1v};
  const Eigen::VectorXd k2v = f(s2);
  const Eigen::VectorXd k2x = s2.theta_dot;
  const PccState s3{s.theta + 0.5 * dt * k2x, s.theta_dot + 0.5 * dt * k2v};
  const Eigen::VectorXd k3v = f(s3);
  const Eigen::VectorXd k3x = s3.theta_dot;
  const PccState s4{s.theta + dt * k3x, s.theta_dot + dt * k3v};
  const Eigen::VectorXd k4v = f(s4);
  const Eigen::VectorXd k4x = s4.theta_dot;
  return {s.theta + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
          s.theta_dot + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)};
}

PccGains make_pcc_gains(double omega, double zeta) {
  if (!(omega >= 0.0) || !(zeta >= 0.0)) {
    throw ValidationError("gains", "omega and zeta must be non-negative");
  }
  return {omega * omega, 2.0 * zeta * omega};
}

Eigen::VectorXd pcc_virtual_torque(const Eigen::VectorXd& ff, const Eigen::VectorXd& ff_velocity,
                                   const Eigen::VectorXd& ff_acceleration, const Eigen::VectorXd& ref,
                                   const Eigen::VectorXd& ref_velocity, const PccState& state,
                                   const PccGains& gains, const PccParams& params) {
  check_state(state, params);
  const int m = params.dim();
  if (ff.size() != m || ff_velocity.size() != m || ff_acceleration.size() != m || ref.size() != m ||
      ref_velocity.size() != m) {
    throw DimensionMismatch("pcc reference has the wrong size");
  }
  const Eigen::MatrixXd M = pcc_mass_matrix(ff, params);
  const Eigen::VectorXd feedback =
      gains.kp * (ref - state.theta) + gains.kd * (ref_velocity - state.theta_dot);
  return M * (ff_acceleration + feedback) + pcc_coriolis(ff, ff_velocity, params) * ff_velocity +
         params.damping.cwiseProduct(ff_velocity) + params.stiffness.cwiseProduct(ff);
}

Eigen::VectorXd pcc_virtual_torque(const Eigen::VectorXd& ref, const Eigen::VectorXd& ref_velocity,
                                   const Eigen::VectorXd& ref_acceleration, const PccState& state,
                                   const PccGains& gains, const PccParams& params) {
  return pcc_virtual_torque(ref, ref_velocity, ref_acceleration, ref, ref_velocity, state, gains,
                            params);
}

Eigen::VectorXd pcc_input(const Eigen::VectorXd& tau, const Eigen::MatrixXd& Lambda) {
  if (Lambda.rows() != tau.size()) throw DimensionMismatch("Lambda rows must match tau");
  if (Lambda.rows() == Lambda.cols()) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Lambda);
    if (!lu.isInvertible()) throw SingularLambda("Lambda is not invertible");
    return lu.solve(tau);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Lambda);
  if (cod.rank() == 0) throw SingularLambda("Lambda has rank zero");
  return cod.solve(tau);
}

PccTrajectory pcc_generate(const TaskReference& reference, const PccParams& params,
                           const PccGains& gains, const ActuationModel& actuation, double dt) {
  reference.validate();
  params.validate();
  const double h = reference.interval();
  const int sub = substeps_per_interval(h, dt);
  const std::vector<Eigen::VectorXd> angles = solve_ik(reference, params.chain);
  const ReferenceDerivatives der = reference_derivatives(angles, h);
  const std::vector<Eigen::VectorXd> mid = interval_midpoints(angles);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(actuation.Lambda);
  if (!lu.isInvertible()) throw SingularLambda("Lambda is not invertible");

  PccTrajectory traj;
  PccState s{angles.front(), Eigen::VectorXd::Zero(params.dim())};
  const std::size_t n = angles.size();
  for (std::size_t k = 0; k < n; ++k) {
    traj.times.push_back(reference.times[k]);
    traj.states.push_back(s);
    traj.tips.push_back(pcc_forward_kinematics(s.theta, params.chain));
    if (k + 1 == n) break;

    const Eigen::VectorXd mid_velocity = 0.5 * (der.velocity[k] + der.velocity[k + 1]);
    const Eigen::VectorXd mid_acceleration = 0.5 * (der.acceleration[k] + der.acceleration[k + 1]);
    const Eigen::VectorXd tau = pcc_virtual_torque(mid[k], mid_velocity, mid_acceleration, angles[k],
                                                   der.velocity[k], s, gains, params);
    Eigen::VectorXd u = lu.solve(tau);
    bool sat = false;
    for (int j = 0; j < u.size(); ++j) {
      if (std::abs(u[j]) > actuation.input_bound) {
        u[j] = std::copysign(actuation.input_bound, u[j]);
        sat = true;
      }
    }
    traj.inputs.push_back(u);
    traj.torques.push_back(actuation.Lambda * u);
    traj.saturated.push_back(sat);
    for (int i = 0; i < sub; ++i) s = pcc_step(s, traj.torques.back(), params, dt);
  }
  if (n >= 2) {
    traj.inputs.push_back(traj.inputs.back());
    traj.torques.push_back(traj.torques.back());
    traj.saturated.push_back(traj.saturated.back());
  }
  return traj;
}

InputSchedule schedule_of(const PccTrajectory& trajectory) {
  InputSchedule s;
  if (trajectory.times.size() >= 2) s.interval = trajectory.times[1] - trajectory.times[0];
  if (!trajectory.inputs.empty()) s.inputs.assign(trajectory.inputs.begin(), trajectory.inputs.end() - 1);
  return s;
}

namespace {

constexpr double kIdentInterval = 0.05;

std::vector<Eigen::VectorXd> rod_step_response(const RodParams& rod, const ActuationModel& actuation,
                                               const SimConfig& config, const Eigen::VectorXd& u,
                                               double horizon) {
  const auto steps = static_cast<std::size_t>(std::lround(horizon / kIdentInterval));
  InputSchedule sched{kIdentInterval, std::vector<Eigen::VectorXd>(steps, u)};
  const RodState rest = straight_rod(rod.num_nodes, rod.rest_length);
  const Trajectory traj = rollout(rest, sched, rod, actuation, config);
  std::vector<Eigen::VectorXd> theta;
  theta.reserve(traj.size());
  for (const auto& s : traj.states) theta.push_back(segment_bend_angles(s, actuation));
  return theta;
}

double response_mismatch(const PccParams& p, const Eigen::VectorXd& tau,
                         const std::vector<Eigen::VectorXd>& target, int segment, double dt) {
  const int sub = substeps_per_interval(kIdentInterval, dt);
  PccState s{Eigen::VectorXd::Zero(p.dim()), Eigen::VectorXd::Zero(p.dim())};
  double err = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    const double d = s.theta[segment] - target[k][segment];
    err += d * d;
    if (k + 1 == target.size()) break;
    for (int i = 0; i < sub; ++i) s = pcc_step(s, tau, p, dt);
  }
  return err;
}

}  // namespace

PccIdentification identify_pcc(const RodParams& rod, const ActuationModel& actuation,
                               const SimConfig& config, const std::vector<double>& levels,
                               double settle_time, double fit_horizon) {
  const int m = actuation.input_dim();
  if (levels.empty()) throw ValidationError("levels", "need at least one input level");
  PccIdentification id;
  id.stiffness = Eigen::VectorXd::Zero(m);
  id.damping = Eigen::VectorXd::Zero(m);
  std::vector<std::vector<Eigen::VectorXd>> fit_responses(m);
  std::vector<Eigen::VectorXd> fit_torques(m);

  for (int j = 0; j < m; ++j) {
    double num = 0.0, den = 0.0;
    for (double level : levels) {
      Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
      u[j] = level;
      const Eigen::VectorXd tau = actuation.Lambda * u;
      const auto response = rod_step_response(rod, actuation, config, u, settle_time);
      const double th = response.back()[j];
      num += tau[j] * th;
      den += th * th;
      if (level == levels.back()) {
        const auto n_fit = static_cast<std::size_t>(std::lround(fit_horizon / kIdentInterval)) + 1;
        fit_responses[j].assign(response.begin(),
                                response.begin() + std::min(n_fit, response.size()));
        fit_torques[j] = tau;
      }
    }
    if (!(den > 0.0)) throw SingularInertia("step response produced no bend");
    id.stiffness[j] = num / den;
  }

  // Golden-section search on log(D_p) per segment, the others held.
  PccParams p = make_pcc_params(rod, id.stiffness, Eigen::VectorXd::Constant(m, 1e-3));
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int j = 0; j < m; ++j) {
    auto cost = [&](double log_d) {
      p.damping[j] = std::exp(log_d);
      return response_mismatch(p, fit_torques[j], fit_responses[j], j, config.dt);
    };
    double a = std::log(1e-6), b = std::log(10.0);
    double c = b - golden * (b - a), d = a + golden * (b - a);
    double fc = cost(c), fd = cost(d);
    for (int it = 0; it < 60; ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - golden * (b - a);
        fc = cost(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + golden * (b - a);
        fd = cost(d);
      }
    }
    p.damping[j] = std::exp(0.5 * (a + b));
  }
  id.damping = p.damping;
  return id;
}

}  // namespace softder
