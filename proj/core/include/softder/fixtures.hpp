#pragma once

// Reference setup used by the tests, the CLI defaults and the benchmarks: a
// 0.25 m two-segment arm with 8 nodes per segment.

#include <Eigen/Core>

#include "softder/actuation.hpp"
#include "softder/dynamics.hpp"
#include "softder/elastic.hpp"
#include "softder/pcc.hpp"
#include "softder/trajgen.hpp"

namespace softder::fixtures {

inline constexpr double kLength = 0.25;        // m
inline constexpr int kSegmentNodes = 8;
inline constexpr double kRodMass = 0.05;       // kg
inline constexpr double kEA = 1e4;
inline constexpr double kEI = 0.4;
inline constexpr double kGJ = 0.3;
inline constexpr double kDampingRate = 8.0;    // 1/s, mass proportional
inline constexpr double kEdgeInertia = 1e-7;   // kg m^2
inline constexpr double kInputBound = 10.0;
inline constexpr double kOmega = 10.0;         // rad/s
inline constexpr double kZeta = 1.0;

/// Lambda entry giving a 45 degree steady bend of one segment at u = 1.
inline constexpr double kLambda = 3.1596016301059802;

/// PCC constants identified against the default rod; see identify_pcc.
inline constexpr double kPccStiffness[2] = {4.0194784991641681, 4.0194735261217645};
inline constexpr double kPccDamping[2] = {0.3178614424994986, 0.040539899532479905};

RodParams rod_params();
ActuationModel actuation(const RodParams& params);
SimConfig sim_config();
Gains gains(const RodParams& params);
PccParams pcc_params(const RodParams& params);
PccGains pcc_gains();

/// Boundary force that holds one segment as a uniform arc of total turn
/// `bend` (EI kappa dkappa/dtheta / rest edge, per joint turn bend / (N_j - 2)).
double arc_holding_force(const RodParams& params, int segment_nodes, double bend);

}  // namespace softder::fixtures
