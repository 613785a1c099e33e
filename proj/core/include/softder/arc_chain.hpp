#pragma once

// Planar constant-curvature geometry shared by the rod reference shapes, the
// inverse kinematics and the PCC baseline.
//
// The chain is the rest-length polyline of the rod. Segment j turns by
// theta_j / (N_j - 2) at each of its joints, nodes s_j + 1 .. s_j + N_j - 2.
// The first and last node of every segment do not turn, so the edges around a
// junction stay colinear. Edge 0 points along +x. Nodes of one segment lie on
// a circle through equal chords of the rest edge length.

#include <vector>

#include <Eigen/Core>

#include "softder/geometry.hpp"

namespace softder {

struct RodParams;
struct ActuationModel;

struct ArcChain {
  std::vector<int> segment_nodes;
  double edge_length = 0.0;

  int num_nodes() const;
  int num_segments() const { return static_cast<int>(segment_nodes.size()); }
  double reach() const { return edge_length * (num_nodes() - 1); }
  /// d(angle of edge k)/d(theta_j).
  double turn_share(int segment, int edge) const;
};

ArcChain arc_chain(const RodParams& params);

/// Heading of every edge, measured from +x about E3.
std::vector<double> edge_angles(const ArcChain& chain, const Eigen::VectorXd& theta);

std::vector<Vec3> chain_nodes(const ArcChain& chain, const Eigen::VectorXd& theta);

/// Point at a fractional node index, linear along the edge it falls on.
Eigen::Vector2d chain_point(const ArcChain& chain, const Eigen::VectorXd& theta, double node_index);
/// d chain_point / d theta, 2 x m.
Eigen::MatrixXd chain_point_jacobian(const ArcChain& chain, const Eigen::VectorXd& theta,
                                     double node_index);

/// Endpoint of the chain in the x-y plane.
Vec3 pcc_forward_kinematics(const Eigen::VectorXd& theta, const ArcChain& chain);

/// Bend angles theta placing the tip at `target`. Among the solutions found
/// from several seeds, returns the one closest to `prior` or, without one,
/// the one of smallest norm. Solutions need |theta_j| < pi.
/// Throws Unreachable, IkDivergence.
Eigen::VectorXd pcc_ik(const Vec3& target, const ArcChain& chain,
                       const Eigen::VectorXd* prior = nullptr, double tol = 1e-12);

/// Total turn of each segment: signed angle from its first to its last edge.
Eigen::VectorXd segment_bend_angles(const RodState& state, const ActuationModel& actuation);

}  // namespace softder
