#include "softder/elastic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "softder/errors.hpp"

namespace softder {

namespace {

int nodes_from_dofs(const Eigen::VectorXd& dofs) { return static_cast<int>((dofs.size() + 1) / 4); }

void check_match(const Eigen::VectorXd& dofs, const RodParams& params) {
  if (nodes_from_dofs(dofs) != params.num_nodes || dofs.size() != params.num_dofs()) {
    throw DimensionMismatch("state has " + std::to_string(dofs.size()) + " dofs, params expect " +
                            std::to_string(params.num_dofs()));
  }
}

// Stencil half-width of the Hessian: energy terms at node k touch dofs
// [4(k-1), 4(k+1)+2].
constexpr int kStencil = 10;

}  // namespace

double RodParams::total_mass() const {
  return std::accumulate(node_masses.begin(), node_masses.end(), 0.0);
}

void RodParams::validate() const {
  if (num_nodes < 3) throw ValidationError("rod.num_nodes", "need at least 3 nodes");
  if (std::accumulate(segment_nodes.begin(), segment_nodes.end(), 0) != num_nodes) {
    throw ValidationError("rod.segment_nodes", "segment node counts must sum to num_nodes");
  }
  for (int n : segment_nodes) {
    if (n < 1) throw ValidationError("rod.segment_nodes", "segments must be non-empty");
  }
  if (!(rest_length > 0.0)) throw ValidationError("rod.length", "must be positive");
  if (!(EA >= 0.0)) throw ValidationError("rod.EA", "must be non-negative");
  if (!(EI >= 0.0)) throw ValidationError("rod.EI", "must be non-negative");
  if (!(GJ >= 0.0)) throw ValidationError("rod.GJ", "must be non-negative");
  if (static_cast<int>(node_masses.size()) != num_nodes) {
    throw DimensionMismatch("node_masses must have one entry per node");
  }
  if (static_cast<int>(edge_inertias.size()) != num_nodes - 1) {
    throw DimensionMismatch("edge_inertias must have one entry per edge");
  }
  if (damping.size() != num_dofs()) throw DimensionMismatch("damping must have one entry per dof");
  for (double m : node_masses) {
    if (!(m > 0.0)) throw ValidationError("rod.mass", "node masses must be positive");
  }
  for (double j : edge_inertias) {
    if (!(j > 0.0)) throw ValidationError("rod.edge_inertia", "edge inertias must be positive");
  }
  if (!(damping.array() >= 0.0).all()) {
    throw ValidationError("rod.damping", "damping entries must be non-negative");
  }
  if (!gravity.allFinite()) throw ValidationError("rod.gravity", "must be finite");
}

std::vector<double> lumped_node_masses(int num_nodes, double rod_mass) {
  const double edge_mass = rod_mass / (num_nodes - 1);
  std::vector<double> m(num_nodes, edge_mass);
  m.front() = m.back() = 0.5 * edge_mass;
  return m;
}

RodParams make_uniform_params(std::vector<int> segment_nodes, double length, double rod_mass,
                              double EA, double EI, double GJ, double damping_rate,
                              double edge_inertia) {
  RodParams p;
  p.num_nodes = std::accumulate(segment_nodes.begin(), segment_nodes.end(), 0);
  p.segment_nodes = std::move(segment_nodes);
  p.rest_length = length;
  p.EA = EA;
  p.EI = EI;
  p.GJ = GJ;
  p.node_masses = lumped_node_masses(p.num_nodes, rod_mass);
  p.edge_inertias.assign(p.num_nodes - 1, edge_inertia);
  p.damping = damping_rate * mass_diagonal(p);
  p.validate();
  return p;
}

ElasticEnergy elastic_energy(const Eigen::VectorXd& dofs, const ReferenceFrames& reference,
                             const RodParams& params) {
  check_match(dofs, params);
  const FrameSet frames = compute_frames(dofs, reference);
  const DiscreteStrains s = compute_strains(dofs, frames);
  const double rest = params.rest_edge_length();
  ElasticEnergy e;
  for (double len : s.edge_lengths) e.stretching += (len - rest) * (len - rest);
  for (const auto& k : s.curvatures) e.bending += k.squaredNorm();
  for (double tw : s.twists) e.twisting += tw * tw;
  e.stretching *= 0.5 * params.EA;
  e.bending *= 0.5 * params.EI;
  e.twisting *= 0.5 * params.GJ;
  return e;
}

ElasticEnergy elastic_energy(const RodState& state, const RodParams& params) {
  return elastic_energy(state.dofs(), state.reference(), params);
}

Eigen::VectorXd internal_forces(const Eigen::VectorXd& dofs, const ReferenceFrames& reference,
                                const RodParams& params) {
  check_match(dofs, params);
  const FrameSet fr = compute_frames(dofs, reference);
  const DiscreteStrains s = compute_strains(dofs, fr);
  const int n = params.num_nodes;
  const double rest = params.rest_edge_length();

  // Accumulate the energy gradient, negate at the end.
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(dofs.size());

  if (params.EA != 0.0) {
    for (int i = 0; i + 1 < n; ++i) {
      const Vec3 g = params.EA * (fr.edge_lengths[i] - rest) * fr.tangents[i];
      grad.segment<3>(node_offset(i)) -= g;
      grad.segment<3>(node_offset(i + 1)) += g;
    }
  }

  for (int i = 1; i + 1 < n; ++i) {
    const int k = i - 1;
    const int e = i - 1, f = i;
    const Vec3& te = fr.tangents[e];
    const Vec3& tf = fr.tangents[f];
    const double le = fr.edge_lengths[e];
    const double lf = fr.edge_lengths[f];
    const Vec3& kb = s.curvature_binormals[k];

    if (params.EI != 0.0) {
      const double chi = 1.0 + te.dot(tf);
      const Vec3 tilde_t = (te + tf) / chi;
      const Vec3 tilde_d1 = (fr.m1[e] + fr.m1[f]) / chi;
      const Vec3 tilde_d2 = (fr.m2[e] + fr.m2[f]) / chi;
      const double k1 = s.curvatures[k][0];
      const double k2 = s.curvatures[k][1];

      const Vec3 dk1_de = (-k1 * tilde_t + tf.cross(tilde_d2)) / le;
      const Vec3 dk1_df = (-k1 * tilde_t - te.cross(tilde_d2)) / lf;
      const Vec3 dk2_de = (-k2 * tilde_t - tf.cross(tilde_d1)) / le;
      const Vec3 dk2_df = (-k2 * tilde_t + te.cross(tilde_d1)) / lf;

      const double c1 = params.EI * k1;
      const double c2 = params.EI * k2;
      const Vec3 g_e = c1 * dk1_de + c2 * dk2_de;
      const Vec3 g_f = c1 * dk1_df + c2 * dk2_df;
      grad.segment<3>(node_offset(i - 1)) -= g_e;
      grad.segment<3>(node_offset(i)) += g_e - g_f;
      grad.segment<3>(node_offset(i + 1)) += g_f;

      grad[twist_offset(e)] += -0.5 * (c1 * kb.dot(fr.m1[e]) + c2 * kb.dot(fr.m2[e]));
      grad[twist_offset(f)] += -0.5 * (c1 * kb.dot(fr.m1[f]) + c2 * kb.dot(fr.m2[f]));
    }

    if (params.GJ != 0.0) {
      const double c = params.GJ * s.twists[k];
      const Vec3 ge = -0.5 / le * kb;
      const Vec3 gf = 0.5 / lf * kb;
      grad.segment<3>(node_offset(i - 1)) += c * ge;
      grad.segment<3>(node_offset(i)) -= c * (ge + gf);
      grad.segment<3>(node_offset(i + 1)) += c * gf;
      grad[twist_offset(e)] -= c;
      grad[twist_offset(f)] += c;
    }
  }

  // Directors transported from a stored tangent t0 rotate about t, relative to
  // parallel transport from the current tangent, at rate -(t0 x t)/(1 + t0.t).
  // That rotation acts like a twist increment, so it couples dE/dphi into the
  // node gradient. It vanishes when the reference is adapted to this state.
  for (int e = 0; e + 1 < n; ++e) {
    const double dE_dphi = grad[twist_offset(e)];
    if (dE_dphi == 0.0) continue;
    const Vec3& t0 = reference.tangents[e];
    const Vec3& t = fr.tangents[e];
    const Vec3 g = -dE_dphi * t0.cross(t) / ((1.0 + t0.dot(t)) * fr.edge_lengths[e]);
    grad.segment<3>(node_offset(e + 1)) += g;
    grad.segment<3>(node_offset(e)) -= g;
  }
  return -grad;
}

Eigen::VectorXd internal_forces(const RodState& state, const RodParams& params) {
  return internal_forces(state.dofs(), state.reference(), params);
}

Eigen::VectorXd internal_forces_fd(const RodState& state, const RodParams& params,
                                   double relative_step) {
  if (!(relative_step > 0.0)) throw ValidationError("h", "finite-difference step must be positive");
  check_match(state.dofs(), params);
  const Eigen::VectorXd& q0 = state.dofs();
  const ReferenceFrames& ref = state.reference();
  Eigen::VectorXd out(q0.size());
  Eigen::VectorXd q = q0;
  for (int j = 0; j < q0.size(); ++j) {
    const double h = is_twist_dof(j) ? relative_step : relative_step * params.rest_edge_length();
    q[j] = q0[j] + h;
    const double ep = elastic_energy(q, ref, params).total();
    q[j] = q0[j] - h;
    const double em = elastic_energy(q, ref, params).total();
    q[j] = q0[j];
    out[j] = -(ep - em) / (2.0 * h);
  }
  return out;
}

Eigen::VectorXd mass_diagonal(const RodParams& params) {
  Eigen::VectorXd m(params.num_dofs());
  for (int i = 0; i < params.num_nodes; ++i) {
    m.segment<3>(node_offset(i)).setConstant(params.node_masses[i]);
    if (i + 1 < params.num_nodes) m[twist_offset(i)] = params.edge_inertias[i];
  }
  return m;
}

Eigen::DiagonalMatrix<double, Eigen::Dynamic> mass_matrix(const RodParams& params) {
  return Eigen::DiagonalMatrix<double, Eigen::Dynamic>(mass_diagonal(params));
}

Eigen::MatrixXd force_jacobian(const Eigen::VectorXd& dofs, const ReferenceFrames& reference,
                               const RodParams& params, double relative_step) {
  check_match(dofs, params);
  const int nd = static_cast<int>(dofs.size());
  const int stride = 2 * kStencil + 1;
  const double hx = relative_step * params.rest_edge_length();
  const double hphi = relative_step;

  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(nd, nd);
  Eigen::VectorXd q = dofs;
  for (int color = 0; color < std::min(stride, nd); ++color) {
    for (int j = color; j < nd; j += stride) q[j] = dofs[j] + (is_twist_dof(j) ? hphi : hx);
    const Eigen::VectorXd fp = internal_forces(q, reference, params);
    for (int j = color; j < nd; j += stride) q[j] = dofs[j] - (is_twist_dof(j) ? hphi : hx);
    const Eigen::VectorXd fm = internal_forces(q, reference, params);
    for (int j = color; j < nd; j += stride) {
      q[j] = dofs[j];
      const double h = is_twist_dof(j) ? hphi : hx;
      const int lo = std::max(0, j - kStencil);
      const int hi = std::min(nd - 1, j + kStencil);
      jac.col(j).segment(lo, hi - lo + 1) =
          (fp.segment(lo, hi - lo + 1) - fm.segment(lo, hi - lo + 1)) / (2.0 * h);
    }
  }
  return jac;
}

Eigen::MatrixXd force_jacobian(const RodState& state, const RodParams& params,
                               double relative_step) {
  return force_jacobian(state.dofs(), state.reference(), params, relative_step);
}

RodParams bending_only(const RodParams& params) {
  RodParams p = params;
  p.EA = 0.0;
  p.GJ = 0.0;
  return p;
}

double relative_max_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.lpNorm<Eigen::Infinity>(), b.lpNorm<Eigen::Infinity>());
  if (scale == 0.0) return 0.0;
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace softder
