#include "softder/fixtures.hpp"

#include <cmath>

namespace softder::fixtures {

RodParams rod_params() {
  return make_uniform_params({kSegmentNodes, kSegmentNodes}, kLength, kRodMass, kEA, kEI, kGJ,
                             kDampingRate, kEdgeInertia);
}

ActuationModel actuation(const RodParams& params) {
  const int m = static_cast<int>(params.segment_nodes.size());
  return make_actuation(params, kLambda * Eigen::MatrixXd::Identity(m, m), kInputBound);
}

SimConfig sim_config() { return SimConfig{}; }

Gains gains(const RodParams& params) {
  return make_gains(params, kOmega, kZeta, sim_config().clamped_dofs);
}

PccParams pcc_params(const RodParams& params) {
  return make_pcc_params(params, Eigen::Vector2d(kPccStiffness[0], kPccStiffness[1]),
                         Eigen::Vector2d(kPccDamping[0], kPccDamping[1]));
}

PccGains pcc_gains() { return make_pcc_gains(kOmega, kZeta); }

double arc_holding_force(const RodParams& params, int segment_nodes, double bend) {
  const double delta = bend / (segment_nodes - 2);
  const double c = 1.0 + std::cos(delta);
  return params.EI * 4.0 * std::sin(delta) / (c * c) / params.rest_edge_length();
}

}  // namespace softder::fixtures
