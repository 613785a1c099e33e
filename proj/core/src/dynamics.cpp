#include "softder/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>

#include "softder/errors.hpp"

namespace softder {

void SimConfig::validate(int num_dofs) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt", "must be positive");
  if (!(newton_tol > 0.0)) throw ValidationError("newton_tol", "must be positive");
  if (newton_max_iters < 1) throw ValidationError("newton_max_iters", "must be at least 1");
  for (int d : clamped_dofs) {
    if (d < 0 || d >= num_dofs) {
      throw ValidationError("clamped_dofs", "index " + std::to_string(d) + " out of range");
    }
  }
}

int substeps_per_interval(double interval, double dt) {
  const double ratio = interval / dt;
  const double rounded = std::round(ratio);
  if (!(rounded >= 1.0) || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw ValidationError("dt", "control interval must be an integer multiple of dt");
  }
  return static_cast<int>(rounded);
}

namespace {

std::vector<int> free_dofs(int num_dofs, const std::vector<int>& clamped) {
  std::vector<char> is_clamped(num_dofs, 0);
  for (int d : clamped) is_clamped[d] = 1;
  std::vector<int> out;
  for (int d = 0; d < num_dofs; ++d) {
    if (!is_clamped[d]) out.push_back(d);
  }
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = v[idx[k]];
  return out;
}

}  // namespace

RodState step(const RodState& state, const Eigen::VectorXd& u, const RodParams& params,
              const ActuationModel& actuation, const SimConfig& config, StepStats* stats) {
  const int nd = state.num_dofs();
  if (params.num_dofs() != nd) throw DimensionMismatch("params do not match the state");
  if (u.size() != actuation.input_dim()) {
    throw DimensionMismatch("input has " + std::to_string(u.size()) + " entries, expected " +
                            std::to_string(actuation.input_dim()));
  }
  if (!u.allFinite()) throw NonFinite("input contains non-finite entries");
  config.validate(nd);

  const double dt = config.dt;
  const Eigen::VectorXd& q = state.dofs();
  const Eigen::VectorXd& v = state.velocity();
  const ReferenceFrames& ref = state.reference();
  const Eigen::VectorXd mass = mass_diagonal(params);
  const Eigen::VectorXd& damp = params.damping;
  const std::vector<int> fdofs = free_dofs(nd, config.clamped_dofs);
  const int nf = static_cast<int>(fdofs.size());

  Eigen::VectorXd f_ext = gravity_force(params);
  if (!u.isZero(0.0)) f_ext += build_B(state, actuation) * (actuation.Lambda * u);

  auto residual = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd r = mass.cwiseProduct(x - q - dt * v) / (dt * dt) -
                              internal_forces(x, ref, params) +
                              damp.cwiseProduct(x - q) / dt - f_ext;
    return gather(r, fdofs);
  };

  Eigen::VectorXd x = q;
  for (int d : fdofs) x[d] += dt * v[d];

  const double force_scale = std::max({mass.cwiseProduct(v).norm() / dt,
                                       internal_forces(q, ref, params).norm(), f_ext.norm()});
  // Round-off in the inertial term sets a floor no iteration can get below.
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() *
                       mass.cwiseProduct(q).norm() / (dt * dt);
  const double tol = config.newton_tol * force_scale + floor;

  Eigen::VectorXd r = residual(x);
  double rnorm = r.norm();
  int it = 0;
  for (; it < config.newton_max_iters && rnorm > tol; ++it) {
    const Eigen::MatrixXd jf = force_jacobian(x, ref, params);
    Eigen::MatrixXd jac(nf, nf);
    for (int a = 0; a < nf; ++a) {
      for (int b = 0; b < nf; ++b) jac(a, b) = -jf(fdofs[a], fdofs[b]);
      jac(a, a) += mass[fdofs[a]] / (dt * dt) + damp[fdofs[a]] / dt;
    }
    const Eigen::VectorXd dx = jac.partialPivLu().solve(-r);

    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 10; ++halving, alpha *= 0.5) {
      Eigen::VectorXd trial = x;
      for (int a = 0; a < nf; ++a) trial[fdofs[a]] += alpha * dx[a];
      Eigen::VectorXd rt;
      try {
        rt = residual(trial);
      } catch (const AntipodalTangents&) {
        continue;
      } catch (const DegenerateEdge&) {
        continue;
      }
      if (rt.allFinite() && rt.norm() < rnorm) {
        x = std::move(trial);
        r = std::move(rt);
        rnorm = r.norm();
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw NewtonDivergence("line search failed at residual " + std::to_string(rnorm) + " N");
    }
  }
  if (rnorm > tol) {
    throw NewtonDivergence("no convergence after " + std::to_string(it) +
                           " iterations, residual " + std::to_string(rnorm) + " N");
  }
  if (stats) {
    stats->iterations = it;
    stats->residual = rnorm;
  }

  Eigen::VectorXd vel = (x - q) / dt;
  for (int d : config.clamped_dofs) {
    x[d] = q[d];
    vel[d] = 0.0;
  }
  // Time-parallel transport: the new reference is the old one carried onto
  // the new tangents.
  ReferenceFrames next = adapted_reference(compute_frames(x, ref));
  return state.with_dofs(std::move(x), std::move(vel)).with_reference(std::move(next));
}

Trajectory rollout(const RodState& state0, const InputSchedule& schedule, const RodParams& params,
                   const ActuationModel& actuation, const SimConfig& config) {
  const int sub = substeps_per_interval(schedule.interval, config.dt);
  const std::size_t k_max = schedule.inputs.size();
  Trajectory traj;
  traj.times.reserve(k_max + 1);
  RodState s = state0;
  auto record = [&](std::size_t k, const Eigen::VectorXd& u) {
    traj.times.push_back(static_cast<double>(k) * schedule.interval);
    traj.states.push_back(s);
    traj.inputs.push_back(u);
    traj.tips.push_back(tip_position(s));
    traj.saturated.push_back((u.array().abs() > actuation.input_bound).any());
  };
  for (std::size_t k = 0; k < k_max; ++k) {
    const Eigen::VectorXd& u = schedule.inputs[k];
    record(k, u);
    for (int i = 0; i < sub; ++i) s = step(s, u, params, actuation, config);
  }
  record(k_max, k_max ? schedule.inputs.back() : Eigen::VectorXd::Zero(actuation.input_dim()));
  return traj;
}

EnergyReport total_energy(const RodState& state, const RodParams& params) {
  EnergyReport e;
  const Eigen::VectorXd& v = state.velocity();
  e.kinetic = 0.5 * v.dot(mass_diagonal(params).cwiseProduct(v));
  e.elastic = elastic_energy(state, params).total();
  return e;
}

Eigen::VectorXd static_residual(const RodState& state, const Eigen::VectorXd& u,
                                const RodParams& params, const ActuationModel& actuation,
                                const SimConfig& config) {
  Eigen::VectorXd f = internal_forces(state, params) + gravity_force(params) +
                      build_B(state, actuation) * (actuation.Lambda * u);
  return gather(f, free_dofs(state.num_dofs(), config.clamped_dofs));
}

}  // namespace softder
