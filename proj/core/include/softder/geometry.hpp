#pragma once

// Discrete rod state and the discrete-differential-geometry quantities derived
// from it: tangents, reference/material frames, curvature binormals, strains.
//
// Generalized coordinates are stored flat and interleaved,
//   q = [x_0, y_0, z_0, phi_0, x_1, ..., phi_{N-2}, x_{N-1}, y_{N-1}, z_{N-1}],
// so node i starts at 4*i and the twist of edge i sits at 4*i + 3.

#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace softder {

using Vec3 = Eigen::Vector3d;

/// Out-of-plane director; planar motions live in the x-y plane.
inline Vec3 e3() { return Vec3::UnitZ(); }

constexpr int dof_count(int num_nodes) { return 4 * num_nodes - 1; }
constexpr int node_offset(int node) { return 4 * node; }
constexpr int twist_offset(int edge) { return 4 * edge + 3; }
constexpr bool is_twist_dof(int dof) { return dof % 4 == 3; }

/// Reference directors a1 per edge together with the tangents they were
/// adapted to. Evaluating a configuration with different tangents transports
/// each a1 from its stored tangent to the new one (time-parallel transport).
struct ReferenceFrames {
  std::vector<Vec3> tangents;
  std::vector<Vec3> a1;

  bool empty() const { return a1.empty(); }
};

/// Validated rod configuration. Construct through build_state(); the
/// simulator produces successors through with_dofs().
class RodState {
 public:
  RodState() = default;

  int num_nodes() const { return num_nodes_; }
  int num_edges() const { return num_nodes_ - 1; }
  int num_dofs() const { return static_cast<int>(dofs_.size()); }

  Vec3 node(int i) const { return dofs_.segment<3>(node_offset(i)); }
  double twist(int edge) const { return dofs_[twist_offset(edge)]; }
  std::vector<Vec3> nodes() const;
  std::vector<double> twists() const;

  const Eigen::VectorXd& dofs() const { return dofs_; }
  const Eigen::VectorXd& velocity() const { return velocity_; }
  const ReferenceFrames& reference() const { return reference_; }

  /// Same rod with new coordinates and velocity; the reference frames are kept
  /// and transported on evaluation. Checks sizes and finiteness only.
  RodState with_dofs(Eigen::VectorXd dofs, Eigen::VectorXd velocity) const;
  RodState with_velocity(Eigen::VectorXd velocity) const;
  RodState with_reference(ReferenceFrames reference) const;

 private:
  friend RodState build_state(const std::vector<Vec3>&, const std::vector<double>&,
                              const std::optional<Eigen::VectorXd>&);
  friend RodState state_from_dofs(Eigen::VectorXd, std::optional<Eigen::VectorXd>);

  int num_nodes_ = 0;
  Eigen::VectorXd dofs_;
  Eigen::VectorXd velocity_;
  ReferenceFrames reference_;
};

/// Per-edge frames. (t, m1, m2) and (t, a1, a2) are right-handed orthonormal
/// triads; m is a rotated about t by the edge twist.
struct FrameSet {
  std::vector<double> edge_lengths;
  std::vector<Vec3> tangents;
  std::vector<Vec3> a1, a2;
  std::vector<Vec3> m1, m2;
  /// Reference twist at interior node i, stored at index i - 1.
  std::vector<double> reference_twist;
};

/// Strains at interior nodes are stored at index i - 1 (N - 2 entries).
struct DiscreteStrains {
  std::vector<double> edge_lengths;
  std::vector<Vec3> curvature_binormals;
  std::vector<Eigen::Vector2d> curvatures;
  std::vector<double> twists;
  std::vector<double> turn_angles;
};

/// Validates and assembles a state. Velocity defaults to zero. Reference
/// frames are initialized by space-parallel transport from the first edge.
/// Throws DimensionMismatch, DegenerateEdge, NonFinite.
RodState build_state(const std::vector<Vec3>& nodes, const std::vector<double>& twists,
                     const std::optional<Eigen::VectorXd>& velocity = std::nullopt);

/// Same as build_state for an already interleaved coordinate vector.
RodState state_from_dofs(Eigen::VectorXd dofs, std::optional<Eigen::VectorXd> velocity = std::nullopt);

/// Straight rod of `num_nodes` equally spaced nodes from `origin` along `direction`.
RodState straight_rod(int num_nodes, double length, const Vec3& origin = Vec3::Zero(),
                      const Vec3& direction = Vec3::UnitX());

/// Minimal rotation taking unit `from` onto unit `to`, applied to `v`.
Vec3 parallel_transport(const Vec3& v, const Vec3& from, const Vec3& to);

/// Signed angle from u to v about unit axis n (u, v orthogonal to n).
double signed_angle(const Vec3& u, const Vec3& v, const Vec3& n);

/// Reference directors obtained by transporting E3 x t_0 along the centerline.
ReferenceFrames space_parallel_frames(const Eigen::VectorXd& dofs);

FrameSet compute_frames(const Eigen::VectorXd& dofs, const ReferenceFrames& reference);
FrameSet compute_frames(const RodState& state);
/// Frames with the reference directors transported from `previous` instead of
/// the state's own reference.
FrameSet compute_frames(const RodState& state, const ReferenceFrames& previous);

/// Throws AntipodalTangents when consecutive tangents are opposite.
DiscreteStrains compute_strains(const Eigen::VectorXd& dofs, const FrameSet& frames);
DiscreteStrains compute_strains(const RodState& state, const FrameSet& frames);

/// Reference frames adapted to the configuration `frames` was computed for.
ReferenceFrames adapted_reference(const FrameSet& frames);

Vec3 tip_position(const RodState& state);

}  // namespace softder
