#pragma once

// Segment-wise actuation: the block-structured map B(q), the external force
// -D qdot + B(q) Lambda u, and bending-force localization diagnostics.
//
// Each segment j owns nodes s_j .. s_j + N_j - 1 and one scalar input. Its
// column of B is supported on the two boundary node pairs
//   B_{s}     =  E3 x t_{s},        B_{s+1}   = -B_{s},
//   B_{s+N-2} = -E3 x t_{s+N-2},    B_{s+N-1} = -B_{s+N-2},
// so a positive input bends a segment lying along +x towards +y.

#include <vector>

#include <Eigen/Core>

#include "softder/elastic.hpp"
#include "softder/geometry.hpp"

namespace softder {

struct ActuationModel {
  std::vector<int> segment_offsets;  // s_j, first node of each segment
  std::vector<int> segment_nodes;    // N_j
  Eigen::MatrixXd Lambda;            // m x m, force per input unit
  double input_bound = 10.0;         // |u_j| <= input_bound

  int input_dim() const { return static_cast<int>(segment_nodes.size()); }
  int num_nodes() const;

  /// Throws LayoutMismatch / SingularLambda.
  void validate() const;
};

/// Layout from the rod's segments. Segments need at least 4 nodes.
ActuationModel make_actuation(const RodParams& params, Eigen::MatrixXd Lambda,
                              double input_bound = 10.0);

/// Sparse actuation map, (4N-1) x m. Throws LayoutMismatch.
Eigen::MatrixXd build_B(const RodState& state, const ActuationModel& actuation);
Eigen::MatrixXd build_B(const Eigen::VectorXd& dofs, const ActuationModel& actuation);

/// -D qdot + B(q) Lambda u + lumped gravity. Throws DimensionMismatch.
Eigen::VectorXd external_force(const RodState& state, const Eigen::VectorXd& velocity,
                               const Eigen::VectorXd& u, const ActuationModel& actuation,
                               const RodParams& params);

/// Constant nodal gravity load, zero on twist dofs.
Eigen::VectorXd gravity_force(const RodParams& params);

struct SegmentLocalization {
  int first_node = 0;
  int num_nodes = 0;
  double boundary_start = 0.0;   // |F_b| at the segment's first node
  double boundary_end = 0.0;     // |F_b| at its last node
  double interior_ratio = 0.0;   // max interior |F_b| / max boundary |F_b|
  double pair_start = 0.0;       // |F_s + F_{s+1}| / max boundary
  double pair_end = 0.0;         // |F_{s+N-1} + F_{s+N-2}| / max boundary
  double orthogonal_start = 0.0; // |F_s . t_s| / |F_s|
  double orthogonal_end = 0.0;   // |F_{s+N-1} . t_{s+N-2}| / |F_{s+N-1}|
  double isolated_mismatch = 0.0;  // vs. the segment cut out as its own rod
  bool zero_boundary = false;    // boundary forces vanish; ratios reported as 0
};

struct LocalizationDiagnostics {
  std::vector<SegmentLocalization> segments;
  /// Largest change in junction-node bending force when each segment is cut
  /// out and evaluated alone, relative to the largest boundary force.
  double junction_coupling = 0.0;
  Eigen::VectorXd bending_forces;

  double worst() const;
};

/// Bending forces (EA = GJ = 0) split per segment.
LocalizationDiagnostics localization_report(const RodState& state, const RodParams& params);

}  // namespace softder
