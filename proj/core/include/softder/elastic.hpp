#pragma once

// Elastic energies of the discrete rod, internal forces as the negated energy
// gradient, the lumped mass matrix, and finite-difference oracles.
//
// Energies follow the unnormalized forms
//   E_s = 1/2 EA sum (e_i - rest_e)^2,  E_b = 1/2 EI sum |kappa_i|^2,
//   E_t = 1/2 GJ sum tau_i^2,
// with a straight, untwisted, uniformly discretized rest shape. Length
// normalizations are folded into the stiffness constants.

#include <vector>

#include <Eigen/Core>

#include "softder/geometry.hpp"

namespace softder {

struct RodParams {
  int num_nodes = 0;
  std::vector<int> segment_nodes;  // N_j per segment, summing to num_nodes
  double rest_length = 0.0;        // L (m)
  double EA = 0.0;                 // stretching stiffness
  double EI = 0.0;                 // bending stiffness
  double GJ = 0.0;                 // twisting stiffness
  std::vector<double> node_masses;    // kg, one per node
  std::vector<double> edge_inertias;  // kg m^2, one per edge
  Eigen::VectorXd damping;            // diagonal of D, one per dof (non-negative)
  Vec3 gravity = Vec3::Zero();

  double rest_edge_length() const { return rest_length / (num_nodes - 1); }
  int num_dofs() const { return dof_count(num_nodes); }
  double total_mass() const;

  /// Throws DimensionMismatch / ValidationError on inconsistent fields.
  void validate() const;
};

/// Half of each edge's mass goes to each endpoint.
std::vector<double> lumped_node_masses(int num_nodes, double rod_mass);

/// Uniform rod with damping proportional to the lumped mass (rate in 1/s).
RodParams make_uniform_params(std::vector<int> segment_nodes, double length, double rod_mass,
                              double EA, double EI, double GJ, double damping_rate = 0.0,
                              double edge_inertia = 1e-7);

struct ElasticEnergy {
  double stretching = 0.0;
  double bending = 0.0;
  double twisting = 0.0;

  double total() const { return stretching + bending + twisting; }
};

/// Energy of `dofs` with reference directors transported from `reference`.
ElasticEnergy elastic_energy(const Eigen::VectorXd& dofs, const ReferenceFrames& reference,
                             const RodParams& params);
ElasticEnergy elastic_energy(const RodState& state, const RodParams& params);

/// -dE/dq, length 4N-1. Throws AntipodalTangents.
Eigen::VectorXd internal_forces(const Eigen::VectorXd& dofs, const ReferenceFrames& reference,
                                const RodParams& params);
Eigen::VectorXd internal_forces(const RodState& state, const RodParams& params);

/// Central differences of elastic_energy over every dof, negated. The step is
/// `relative_step` times the rest edge length for positions and radians for
/// twists. Independent of the analytic gradient path.
Eigen::VectorXd internal_forces_fd(const RodState& state, const RodParams& params,
                                   double relative_step = 1e-6);

/// Diagonal of M: node masses on translational dofs, edge inertias on twists.
Eigen::VectorXd mass_diagonal(const RodParams& params);
Eigen::DiagonalMatrix<double, Eigen::Dynamic> mass_matrix(const RodParams& params);

/// dF_int/dq by central differences of internal_forces. Dofs farther apart
/// than the stencil width are perturbed together.
Eigen::MatrixXd force_jacobian(const Eigen::VectorXd& dofs, const ReferenceFrames& reference,
                               const RodParams& params, double relative_step = 1e-6);
Eigen::MatrixXd force_jacobian(const RodState& state, const RodParams& params,
                               double relative_step = 1e-6);

/// Params with stretching and twisting switched off, for isolating bending forces.
RodParams bending_only(const RodParams& params);

/// |a - b|_inf / max(|a|_inf, |b|_inf); zero when both vanish.
double relative_max_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace softder
