#include "softder/actuation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/LU>

#include "softder/errors.hpp"

namespace softder {

int ActuationModel::num_nodes() const {
  return std::accumulate(segment_nodes.begin(), segment_nodes.end(), 0);
}

void ActuationModel::validate() const {
  const int m = input_dim();
  if (m < 1) throw LayoutMismatch("actuation needs at least one segment");
  if (static_cast<int>(segment_offsets.size()) != m) {
    throw LayoutMismatch("one offset per segment expected");
  }
  int s = 0;
  for (int j = 0; j < m; ++j) {
    if (segment_offsets[j] != s) {
      throw LayoutMismatch("segment " + std::to_string(j) + " must start at node " +
                           std::to_string(s));
    }
    if (segment_nodes[j] < 4) {
      throw LayoutMismatch("segment " + std::to_string(j) + " has fewer than 4 nodes");
    }
    s += segment_nodes[j];
  }
  if (Lambda.rows() != m || Lambda.cols() != m) {
    throw LayoutMismatch("Lambda must be " + std::to_string(m) + "x" + std::to_string(m));
  }
  if (!Lambda.allFinite()) throw NonFinite("Lambda contains non-finite entries");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Lambda);
  if (!lu.isInvertible()) throw SingularLambda("Lambda is not invertible");
  if (!(input_bound > 0.0)) throw ValidationError("actuation.u_max", "must be positive");
}

ActuationModel make_actuation(const RodParams& params, Eigen::MatrixXd Lambda, double input_bound) {
  ActuationModel a;
  a.segment_nodes = params.segment_nodes;
  int s = 0;
  for (int n : params.segment_nodes) {
    a.segment_offsets.push_back(s);
    s += n;
  }
  a.Lambda = std::move(Lambda);
  a.input_bound = input_bound;
  a.validate();
  return a;
}

Eigen::MatrixXd build_B(const Eigen::VectorXd& dofs, const ActuationModel& actuation) {
  const int n = static_cast<int>((dofs.size() + 1) / 4);
  if (actuation.num_nodes() != n || dofs.size() != dof_count(n)) {
    throw LayoutMismatch("segment layout covers " + std::to_string(actuation.num_nodes()) +
                         " nodes, state has " + std::to_string(n));
  }
  auto tangent = [&](int e) -> Vec3 {
    const Vec3 d = dofs.segment<3>(node_offset(e + 1)) - dofs.segment<3>(node_offset(e));
    const double len = d.norm();
    if (!(len > 0.0)) throw DegenerateEdge("zero-length edge " + std::to_string(e));
    return d / len;
  };
  const int m = actuation.input_dim();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(dofs.size(), m);
  for (int j = 0; j < m; ++j) {
    const int s = actuation.segment_offsets[j];
    const int last = s + actuation.segment_nodes[j] - 1;
    const Vec3 head = e3().cross(tangent(s));
    const Vec3 tail = -e3().cross(tangent(last - 1));
    B.block<3, 1>(node_offset(s), j) = head;
    B.block<3, 1>(node_offset(s + 1), j) = -head;
    B.block<3, 1>(node_offset(last - 1), j) = tail;
    B.block<3, 1>(node_offset(last), j) = -tail;
  }
  return B;
}

Eigen::MatrixXd build_B(const RodState& state, const ActuationModel& actuation) {
  return build_B(state.dofs(), actuation);
}

Eigen::VectorXd gravity_force(const RodParams& params) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(params.num_dofs());
  if (params.gravity.isZero(0.0)) return g;
  for (int i = 0; i < params.num_nodes; ++i) {
    g.segment<3>(node_offset(i)) = params.node_masses[i] * params.gravity;
  }
  return g;
}

Eigen::VectorXd external_force(const RodState& state, const Eigen::VectorXd& velocity,
                               const Eigen::VectorXd& u, const ActuationModel& actuation,
                               const RodParams& params) {
  if (u.size() != actuation.input_dim()) {
    throw DimensionMismatch("input has " + std::to_string(u.size()) + " entries, expected " +
                            std::to_string(actuation.input_dim()));
  }
  if (velocity.size() != state.num_dofs() || params.num_dofs() != state.num_dofs()) {
    throw DimensionMismatch("velocity/params do not match the state's dof count");
  }
  Eigen::VectorXd f = -params.damping.cwiseProduct(velocity);
  if (!u.isZero(0.0)) f += build_B(state, actuation) * (actuation.Lambda * u);
  f += gravity_force(params);
  return f;
}

double LocalizationDiagnostics::worst() const {
  double w = junction_coupling;
  for (const auto& s : segments) {
    w = std::max({w, s.interior_ratio, s.pair_start, s.pair_end, s.orthogonal_start,
                  s.orthogonal_end, s.isolated_mismatch});
  }
  return w;
}

namespace {

// Bending forces of nodes [first, first + count) evaluated as a standalone rod
// that keeps the parent's reference directors.
Eigen::VectorXd isolated_bending(const RodState& state, const RodParams& params, int first,
                                 int count) {
  const int nd = dof_count(count);
  Eigen::VectorXd q = state.dofs().segment(node_offset(first), nd);
  ReferenceFrames ref;
  ref.tangents.assign(state.reference().tangents.begin() + first,
                      state.reference().tangents.begin() + first + count - 1);
  ref.a1.assign(state.reference().a1.begin() + first,
                state.reference().a1.begin() + first + count - 1);
  RodParams sub = bending_only(params);
  sub.num_nodes = count;
  sub.segment_nodes = {count};
  sub.rest_length = params.rest_edge_length() * (count - 1);
  sub.node_masses.assign(count, 1.0);
  sub.edge_inertias.assign(count - 1, 1.0);
  sub.damping = Eigen::VectorXd::Zero(nd);
  return internal_forces(q, ref, sub);
}

}  // namespace

LocalizationDiagnostics localization_report(const RodState& state, const RodParams& params) {
  LocalizationDiagnostics out;
  const Eigen::VectorXd f = internal_forces(state, bending_only(params));
  out.bending_forces = f;
  const FrameSet frames = compute_frames(state);
  auto force = [&](int i) -> Vec3 { return f.segment<3>(node_offset(i)); };
  const double tiny = 1e-13 * params.EI / params.rest_edge_length();

  std::vector<Eigen::VectorXd> isolated;
  double global_boundary = 0.0;
  int s = 0;
  for (int count : params.segment_nodes) {
    SegmentLocalization seg;
    seg.first_node = s;
    seg.num_nodes = count;
    const int last = s + count - 1;
    const Vec3 f0 = force(s), f1 = force(s + 1), fn2 = force(last - 1), fn1 = force(last);
    seg.boundary_start = f0.norm();
    seg.boundary_end = fn1.norm();
    const double boundary = std::max({f0.norm(), f1.norm(), fn2.norm(), fn1.norm()});
    global_boundary = std::max(global_boundary, boundary);
    const Eigen::VectorXd iso = isolated_bending(state, params, s, count);
    isolated.push_back(iso);

    if (boundary <= tiny) {
      seg.zero_boundary = true;
    } else {
      double interior = 0.0;
      for (int i = s + 2; i <= last - 2; ++i) interior = std::max(interior, force(i).norm());
      seg.interior_ratio = interior / boundary;
      seg.pair_start = (f0 + f1).norm() / boundary;
      seg.pair_end = (fn1 + fn2).norm() / boundary;
      if (f0.norm() > tiny) seg.orthogonal_start = std::abs(f0.dot(frames.tangents[s])) / f0.norm();
      if (fn1.norm() > tiny) {
        seg.orthogonal_end = std::abs(fn1.dot(frames.tangents[last - 1])) / fn1.norm();
      }
      double mismatch = 0.0;
      for (int i = 0; i < count; ++i) {
        mismatch = std::max(mismatch, (force(s + i) - iso.segment<3>(node_offset(i))).norm());
      }
      seg.isolated_mismatch = mismatch / boundary;
    }
    out.segments.push_back(seg);
    s += count;
  }

  if (global_boundary > tiny) {
    double coupling = 0.0;
    for (std::size_t j = 1; j < out.segments.size(); ++j) {
      const auto& prev = out.segments[j - 1];
      const auto& next = out.segments[j];
      for (int k = 0; k < 2; ++k) {
        const int ip = prev.num_nodes - 2 + k;
        coupling = std::max(coupling, (force(prev.first_node + ip) -
                                       Vec3(isolated[j - 1].segment<3>(node_offset(ip))))
                                          .norm());
        coupling = std::max(coupling, (force(next.first_node + k) -
                                       Vec3(isolated[j].segment<3>(node_offset(k))))
                                          .norm());
      }
    }
    out.junction_coupling = coupling / global_boundary;
  }
  return out;
}

}  // namespace softder
