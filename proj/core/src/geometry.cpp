#include "softder/geometry.hpp"

#include <cmath>
#include <string>

#include "softder/errors.hpp"

namespace softder {

namespace {

constexpr double kAntipodalTol = 1e-12;

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NonFinite(std::string(what) + " contains non-finite entries");
}

void check_edges(const Eigen::VectorXd& dofs, int num_nodes) {
  for (int i = 0; i + 1 < num_nodes; ++i) {
    const double len =
        (dofs.segment<3>(node_offset(i + 1)) - dofs.segment<3>(node_offset(i))).norm();
    if (!(len > 0.0)) {
      throw DegenerateEdge("nodes " + std::to_string(i) + " and " + std::to_string(i + 1) +
                           " coincide");
    }
  }
}

Vec3 initial_director(const Vec3& t) {
  Vec3 a = e3().cross(t);
  if (a.norm() < 1e-8) a = Vec3::UnitX().cross(t);
  return a.normalized();
}

}  // namespace

std::vector<Vec3> RodState::nodes() const {
  std::vector<Vec3> out(num_nodes_);
  for (int i = 0; i < num_nodes_; ++i) out[i] = node(i);
  return out;
}

std::vector<double> RodState::twists() const {
  std::vector<double> out(num_edges());
  for (int i = 0; i < num_edges(); ++i) out[i] = twist(i);
  return out;
}

RodState RodState::with_dofs(Eigen::VectorXd dofs, Eigen::VectorXd velocity) const {
  if (dofs.size() != dofs_.size() || velocity.size() != dofs_.size()) {
    throw DimensionMismatch("with_dofs: expected " + std::to_string(dofs_.size()) + " dofs");
  }
  check_finite(dofs, "dofs");
  check_finite(velocity, "velocity");
  RodState out = *this;
  out.dofs_ = std::move(dofs);
  out.velocity_ = std::move(velocity);
  return out;
}

RodState RodState::with_velocity(Eigen::VectorXd velocity) const {
  return with_dofs(dofs_, std::move(velocity));
}

RodState RodState::with_reference(ReferenceFrames reference) const {
  if (static_cast<int>(reference.a1.size()) != num_edges() ||
      reference.tangents.size() != reference.a1.size()) {
    throw DimensionMismatch("reference frames must have one director per edge");
  }
  RodState out = *this;
  out.reference_ = std::move(reference);
  return out;
}

RodState state_from_dofs(Eigen::VectorXd dofs, std::optional<Eigen::VectorXd> velocity) {
  const auto size = dofs.size();
  if (size < dof_count(3) || (size + 1) % 4 != 0) {
    throw DimensionMismatch("dof vector length must be 4N-1 with N >= 3, got " +
                            std::to_string(size));
  }
  const int n = static_cast<int>((size + 1) / 4);
  check_finite(dofs, "dofs");
  check_edges(dofs, n);
  RodState s;
  s.num_nodes_ = n;
  if (velocity) {
    if (velocity->size() != size) {
      throw DimensionMismatch("velocity length " + std::to_string(velocity->size()) +
                              " != " + std::to_string(size));
    }
    check_finite(*velocity, "velocity");
    s.velocity_ = std::move(*velocity);
  } else {
    s.velocity_ = Eigen::VectorXd::Zero(size);
  }
  s.reference_ = space_parallel_frames(dofs);
  s.dofs_ = std::move(dofs);
  return s;
}

RodState build_state(const std::vector<Vec3>& nodes, const std::vector<double>& twists,
                     const std::optional<Eigen::VectorXd>& velocity) {
  const int n = static_cast<int>(nodes.size());
  if (n < 3) throw DimensionMismatch("a rod needs at least 3 nodes, got " + std::to_string(n));
  if (static_cast<int>(twists.size()) != n - 1) {
    throw DimensionMismatch("expected " + std::to_string(n - 1) + " twists, got " +
                            std::to_string(twists.size()));
  }
  Eigen::VectorXd q(dof_count(n));
  for (int i = 0; i < n; ++i) {
    q.segment<3>(node_offset(i)) = nodes[i];
    if (i + 1 < n) q[twist_offset(i)] = twists[i];
  }
  return state_from_dofs(std::move(q), velocity);
}

RodState straight_rod(int num_nodes, double length, const Vec3& origin, const Vec3& direction) {
  const Vec3 d = direction.normalized();
  std::vector<Vec3> nodes(num_nodes);
  for (int i = 0; i < num_nodes; ++i) {
    nodes[i] = origin + d * (length * i / (num_nodes - 1));
  }
  return build_state(nodes, std::vector<double>(std::max(num_nodes - 1, 0), 0.0));
}

Vec3 parallel_transport(const Vec3& v, const Vec3& from, const Vec3& to) {
  const Vec3 b = from.cross(to);
  const double c = from.dot(to);
  if (1.0 + c < kAntipodalTol) throw AntipodalTangents("parallel transport between opposite tangents");
  // Rodrigues form of the rotation about from x to by the angle between them.
  return c * v + b.cross(v) + (b.dot(v) / (1.0 + c)) * b;
}

double signed_angle(const Vec3& u, const Vec3& v, const Vec3& n) {
  return std::atan2(u.cross(v).dot(n), u.dot(v));
}

ReferenceFrames space_parallel_frames(const Eigen::VectorXd& dofs) {
  const int n = static_cast<int>((dofs.size() + 1) / 4);
  ReferenceFrames ref;
  ref.tangents.resize(n - 1);
  ref.a1.resize(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    ref.tangents[i] =
        (dofs.segment<3>(node_offset(i + 1)) - dofs.segment<3>(node_offset(i))).normalized();
  }
  ref.a1[0] = initial_director(ref.tangents[0]);
  for (int i = 1; i + 1 < n; ++i) {
    Vec3 a = parallel_transport(ref.a1[i - 1], ref.tangents[i - 1], ref.tangents[i]);
    // Re-orthonormalize against round-off drift along long rods.
    a -= a.dot(ref.tangents[i]) * ref.tangents[i];
    ref.a1[i] = a.normalized();
  }
  return ref;
}

FrameSet compute_frames(const Eigen::VectorXd& dofs, const ReferenceFrames& reference) {
  const int n = static_cast<int>((dofs.size() + 1) / 4);
  const int ne = n - 1;
  if (static_cast<int>(reference.a1.size()) != ne) {
    throw DimensionMismatch("reference frames do not match the edge count");
  }
  FrameSet f;
  f.edge_lengths.resize(ne);
  f.tangents.resize(ne);
  f.a1.resize(ne);
  f.a2.resize(ne);
  f.m1.resize(ne);
  f.m2.resize(ne);
  for (int i = 0; i < ne; ++i) {
    const Vec3 e = dofs.segment<3>(node_offset(i + 1)) - dofs.segment<3>(node_offset(i));
    const double len = e.norm();
    if (!(len > 0.0)) throw DegenerateEdge("zero-length edge " + std::to_string(i));
    const Vec3 t = e / len;
    Vec3 a = parallel_transport(reference.a1[i], reference.tangents[i], t);
    a -= a.dot(t) * t;
    a.normalize();
    const Vec3 b = t.cross(a);
    const double phi = dofs[twist_offset(i)];
    const double c = std::cos(phi), s = std::sin(phi);
    f.edge_lengths[i] = len;
    f.tangents[i] = t;
    f.a1[i] = a;
    f.a2[i] = b;
    f.m1[i] = c * a + s * b;
    f.m2[i] = -s * a + c * b;
  }
  f.reference_twist.resize(std::max(ne - 1, 0));
  for (int i = 1; i < ne; ++i) {
    const Vec3 moved = parallel_transport(f.a1[i - 1], f.tangents[i - 1], f.tangents[i]);
    f.reference_twist[i - 1] = signed_angle(moved, f.a1[i], f.tangents[i]);
  }
  return f;
}

FrameSet compute_frames(const RodState& state) {
  return compute_frames(state.dofs(), state.reference());
}

FrameSet compute_frames(const RodState& state, const ReferenceFrames& previous) {
  return compute_frames(state.dofs(), previous);
}

DiscreteStrains compute_strains(const Eigen::VectorXd& dofs, const FrameSet& frames) {
  const int ne = static_cast<int>(frames.tangents.size());
  const int ni = ne - 1;
  DiscreteStrains s;
  s.edge_lengths = frames.edge_lengths;
  s.curvature_binormals.resize(ni);
  s.curvatures.resize(ni);
  s.twists.resize(ni);
  s.turn_angles.resize(ni);
  for (int k = 0; k < ni; ++k) {
    const Vec3& te = frames.tangents[k];
    const Vec3& tf = frames.tangents[k + 1];
    const double chi = 1.0 + te.dot(tf);
    if (chi < kAntipodalTol) {
      throw AntipodalTangents("tangents at node " + std::to_string(k + 1) + " are opposite");
    }
    const Vec3 cross = te.cross(tf);
    const Vec3 kb = 2.0 * cross / chi;
    s.curvature_binormals[k] = kb;
    // kappa_1 projects onto the averaged m2 directors, kappa_2 onto the negated
    // averaged m1 directors. Both vanish out of plane for planar untwisted rods.
    s.curvatures[k] = Eigen::Vector2d(0.5 * (frames.m2[k] + frames.m2[k + 1]).dot(kb),
                                      -0.5 * (frames.m1[k] + frames.m1[k + 1]).dot(kb));
    s.twists[k] = dofs[twist_offset(k + 1)] - dofs[twist_offset(k)] + frames.reference_twist[k];
    s.turn_angles[k] = std::atan2(cross.norm(), te.dot(tf));
  }
  return s;
}

DiscreteStrains compute_strains(const RodState& state, const FrameSet& frames) {
  return compute_strains(state.dofs(), frames);
}

ReferenceFrames adapted_reference(const FrameSet& frames) {
  return ReferenceFrames{frames.tangents, frames.a1};
}

Vec3 tip_position(const RodState& state) { return state.node(state.num_nodes() - 1); }

}  // namespace softder
