#include "softder/arc_chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "softder/actuation.hpp"
#include "softder/elastic.hpp"
#include "softder/errors.hpp"

namespace softder {

int ArcChain::num_nodes() const {
  return std::accumulate(segment_nodes.begin(), segment_nodes.end(), 0);
}

double ArcChain::turn_share(int segment, int edge) const {
  int s = 0;
  for (int j = 0; j < segment; ++j) s += segment_nodes[j];
  const int joints = segment_nodes[segment] - 2;
  const int passed = std::clamp(edge - s, 0, joints);
  return static_cast<double>(passed) / joints;
}

ArcChain arc_chain(const RodParams& params) {
  for (int n : params.segment_nodes) {
    if (n < 4) throw LayoutMismatch("arc segments need at least 4 nodes");
  }
  return ArcChain{params.segment_nodes, params.rest_edge_length()};
}

namespace {

void check_theta(const ArcChain& chain, const Eigen::VectorXd& theta) {
  if (theta.size() != chain.num_segments()) {
    throw DimensionMismatch("expected " + std::to_string(chain.num_segments()) +
                            " bend angles, got " + std::to_string(theta.size()));
  }
}

}  // namespace

std::vector<double> edge_angles(const ArcChain& chain, const Eigen::VectorXd& theta) {
  check_theta(chain, theta);
  const int ne = chain.num_nodes() - 1;
  std::vector<double> a(ne, 0.0);
  for (int j = 0; j < chain.num_segments(); ++j) {
    if (theta[j] == 0.0) continue;
    for (int k = 0; k < ne; ++k) a[k] += theta[j] * chain.turn_share(j, k);
  }
  return a;
}

std::vector<Vec3> chain_nodes(const ArcChain& chain, const Eigen::VectorXd& theta) {
  const std::vector<double> a = edge_angles(chain, theta);
  std::vector<Vec3> nodes(a.size() + 1, Vec3::Zero());
  for (std::size_t k = 0; k < a.size(); ++k) {
    nodes[k + 1] = nodes[k] + chain.edge_length * Vec3(std::cos(a[k]), std::sin(a[k]), 0.0);
  }
  return nodes;
}

Eigen::Vector2d chain_point(const ArcChain& chain, const Eigen::VectorXd& theta, double node_index) {
  const std::vector<double> a = edge_angles(chain, theta);
  const int ne = static_cast<int>(a.size());
  if (!(node_index >= 0.0 && node_index <= ne)) {
    throw ValidationError("node_index", "outside the chain");
  }
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  for (int k = 0; k < ne && k < node_index; ++k) {
    const double w = std::min(1.0, node_index - k);
    p += w * chain.edge_length * Eigen::Vector2d(std::cos(a[k]), std::sin(a[k]));
  }
  return p;
}

Eigen::MatrixXd chain_point_jacobian(const ArcChain& chain, const Eigen::VectorXd& theta,
                                     double node_index) {
  const std::vector<double> a = edge_angles(chain, theta);
  const int ne = static_cast<int>(a.size());
  const int m = chain.num_segments();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, m);
  for (int k = 0; k < ne && k < node_index; ++k) {
    const double w = std::min(1.0, node_index - k);
    const Eigen::Vector2d d = w * chain.edge_length * Eigen::Vector2d(-std::sin(a[k]), std::cos(a[k]));
    for (int j = 0; j < m; ++j) J.col(j) += chain.turn_share(j, k) * d;
  }
  return J;
}

Vec3 pcc_forward_kinematics(const Eigen::VectorXd& theta, const ArcChain& chain) {
  const Eigen::Vector2d p = chain_point(chain, theta, chain.num_nodes() - 1);
  return Vec3(p.x(), p.y(), 0.0);
}

namespace {

struct LmResult {
  Eigen::VectorXd theta;
  bool converged = false;
};

LmResult levenberg_marquardt(const Eigen::Vector2d& target, const ArcChain& chain,
                             Eigen::VectorXd theta, double tol) {
  const double end = chain.num_nodes() - 1;
  double lambda = 1e-3;
  Eigen::Vector2d r = chain_point(chain, theta, end) - target;
  for (int it = 0; it < 200; ++it) {
    if (r.norm() <= tol) return {theta, true};
    const Eigen::MatrixXd J = chain_point_jacobian(chain, theta, end);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 30 && !improved; ++tries) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal().array() += lambda * (1.0 + JtJ.diagonal().array());
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      const Eigen::VectorXd trial = theta + step;
      const Eigen::Vector2d rt = chain_point(chain, trial, end) - target;
      if (rt.norm() < r.norm()) {
        theta = trial;
        r = rt;
        lambda = std::max(lambda * 0.2, 1e-12);
        improved = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  return {theta, r.norm() <= tol};
}

}  // namespace

Eigen::VectorXd pcc_ik(const Vec3& target, const ArcChain& chain, const Eigen::VectorXd* prior,
                       double tol) {
  const int m = chain.num_segments();
  if (std::abs(target.z()) > 1e-12) throw Unreachable("target leaves the x-y plane");
  if (target.head<2>().norm() > chain.reach() * (1.0 + 1e-12)) {
    throw Unreachable("target is beyond full extension");
  }
  if (prior && prior->size() != m) throw DimensionMismatch("prior has the wrong size");

  std::vector<Eigen::VectorXd> seeds;
  if (prior) seeds.push_back(*prior);
  seeds.push_back(Eigen::VectorXd::Zero(m));
  // A coarse grid catches the mirrored branches that a single seed misses.
  const double grid[] = {-2.5, -1.0, 1.0, 2.5};
  if (m == 2) {
    for (double a : grid) {
      for (double b : grid) seeds.push_back(Eigen::Vector2d(a, b));
    }
  } else {
    for (double a : grid) seeds.push_back(Eigen::VectorXd::Constant(m, a));
  }

  const Eigen::Vector2d goal = target.head<2>();
  std::optional<Eigen::VectorXd> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (const auto& seed : seeds) {
    const LmResult res = levenberg_marquardt(goal, chain, seed, tol);
    if (!res.converged) continue;
    if ((res.theta.array().abs() >= std::numbers::pi).any()) continue;
    const double score = prior ? (res.theta - *prior).norm() : res.theta.norm();
    if (score < best_score) {
      best_score = score;
      best = res.theta;
    }
    // Continuity: the prior's own basin is the answer when it converges there.
    if (prior && &seed == &seeds.front() && score < 1e-2) break;
  }
  if (!best) throw IkDivergence("no inverse-kinematics seed converged");
  return *best;
}

Eigen::VectorXd segment_bend_angles(const RodState& state, const ActuationModel& actuation) {
  const FrameSet frames = compute_frames(state);
  Eigen::VectorXd theta(actuation.input_dim());
  for (int j = 0; j < actuation.input_dim(); ++j) {
    const int s = actuation.segment_offsets[j];
    const int last_edge = s + actuation.segment_nodes[j] - 2;
    const Vec3& a = frames.tangents[s];
    const Vec3& b = frames.tangents[last_edge];
    theta[j] = std::atan2(a.cross(b).dot(e3()), a.dot(b));
  }
  return theta;
}

}  // namespace softder
