#pragma once

// Benchmark scenarios: JSON configuration, reference motions, plant
// perturbation, the DER-vs-PCC comparison and file export.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "softder/actuation.hpp"
#include "softder/dynamics.hpp"
#include "softder/elastic.hpp"
#include "softder/pcc.hpp"
#include "softder/trajgen.hpp"

namespace softder {

enum class CaseKind { Asynchronous, SynchronousSame, SynchronousOpposite, Custom };

std::string to_string(CaseKind kind);
/// Throws ValidationError at "case_kind".
CaseKind parse_case_kind(const std::string& text);

/// One segment's bend schedule in a custom case: theta(t) = scale * A * s(t - delay).
struct Profile {
  double delay = 0.0;  // s
  double scale = 1.0;

  bool operator==(const Profile&) const = default;
};

struct RodSettings {
  std::vector<int> segment_nodes = {8, 8};
  double length = 0.25;   // m
  double mass = 0.05;     // kg
  double EA = 1e4;
  double EI = 0.4;
  double GJ = 0.3;
  double damping_rate = 8.0;   // 1/s
  double edge_inertia = 1e-7;  // kg m^2

  bool operator==(const RodSettings&) const = default;
};

struct ActuationSettings {
  /// Rows of Lambda; empty means the calibrated diagonal default.
  std::vector<std::vector<double>> lambda;
  double u_max = 10.0;

  bool operator==(const ActuationSettings&) const = default;
};

struct GainSettings {
  double omega = 10.0;  // rad/s
  double zeta = 1.0;

  bool operator==(const GainSettings&) const = default;
};

/// Baseline constants; when absent they come from the fixtures for the default
/// rod and from identify_pcc otherwise.
struct PccSettings {
  std::optional<std::vector<double>> stiffness;
  std::optional<std::vector<double>> damping;

  bool operator==(const PccSettings&) const = default;
};

/// Multiplicative factors on the plant relative to the models.
struct Perturbation {
  double EI = 1.0;
  double EA = 1.0;
  double GJ = 1.0;
  double damping = 1.0;
  double mass_jitter = 0.0;  // each node mass scaled by 1 + U(-j, j), drawn from the seed

  bool operator==(const Perturbation&) const = default;
};

struct Scenario {
  std::string name = "scenario";
  CaseKind case_kind = CaseKind::SynchronousSame;
  double horizon = 10.0;       // s
  double control_rate = 20.0;  // Hz
  double dt = 0.005;           // s
  std::vector<double> amplitude = {0.6, 0.6};  // rad, one per segment
  std::vector<Profile> profiles;               // custom only
  RodSettings rod;
  ActuationSettings actuation;
  GainSettings gains;
  PccSettings pcc;
  Perturbation plant_perturbation;
  std::uint64_t seed = 0;

  int num_segments() const { return static_cast<int>(rod.segment_nodes.size()); }
  /// Throws ValidationError with the offending key path.
  void validate() const;

  bool operator==(const Scenario&) const = default;
};

/// Throws IoError, ParseError, ValidationError.
Scenario load_scenario(const std::string& path);
/// Throws ParseError, ValidationError.
Scenario parse_scenario(const std::string& json_text);
std::string serialize_scenario(const Scenario& scenario);
/// Throws IoError.
void save_scenario(const Scenario& scenario, const std::string& path);
/// JSON schema of the configuration file.
std::string scenario_schema();

/// Rise over [0, T/4], hold, return over [T/2, 3T/4], rest. Cycloidal ramps,
/// so velocity and acceleration vanish at every corner. Zero outside [0, T].
double motion_profile(double t, double horizon);

/// Bend schedule of segment j at time t.
Profile segment_profile(const Scenario& scenario, int segment);

RodParams model_params(const Scenario& scenario);
/// Model parameters with the perturbation applied and stiffness additionally
/// scaled by `stiffness_factor` (EI, EA, GJ).
RodParams plant_params(const Scenario& scenario, double stiffness_factor = 1.0);
ActuationModel model_actuation(const Scenario& scenario, const RodParams& params);
SimConfig sim_config(const Scenario& scenario);
PccParams model_pcc(const Scenario& scenario, const RodParams& params);

TaskReference build_reference(const Scenario& scenario);

struct MetricsReport {
  std::vector<double> times;
  std::vector<double> errors;  // |r - rbar| per sample, m
  double mean = 0.0;           // time average, trapezoidal
  double mean_x = 0.0;
  double mean_y = 0.0;
  double std_dev = 0.0;
  double std_dev_x = 0.0;
  double std_dev_y = 0.0;
  double max = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
  double saturation_fraction = 0.0;

  bool operator==(const MetricsReport&) const = default;
};

/// Throws DimensionMismatch if the grids differ in length.
MetricsReport compute_metrics(const std::vector<double>& times, const std::vector<Vec3>& tips,
                              const std::vector<Vec3>& reference_tips,
                              const std::vector<bool>& saturated = {});

struct Comparison {
  TaskReference reference;
  Trajectory der_generated;
  PccTrajectory pcc_generated;
  Trajectory der_plant;
  Trajectory pcc_plant;
  MetricsReport der;
  MetricsReport pcc;
};

/// Generates inputs with both pipelines on the nominal models and replays them
/// open loop on the perturbed plant.
Comparison run_comparison(const Scenario& scenario);

struct SweepPoint {
  double stiffness_factor = 1.0;
  MetricsReport der;
  MetricsReport pcc;
};

/// One generation, then a replay per stiffness factor.
std::vector<SweepPoint> run_sweep(const Scenario& scenario, const std::vector<double>& factors);

/// PCC states drawn as arc-shaped rods so they export like rod trajectories.
Trajectory as_rod_trajectory(const PccTrajectory& trajectory, const RodParams& params,
                             const ActuationModel& actuation);

/// Column names of the exported table.
std::vector<std::string> trajectory_header(int num_nodes, int num_inputs);

/// Writes `<prefix>.csv` (one row per sample) and `<prefix>_metrics.csv`
/// (mean, std and max rows with total, x and y columns). Throws IoError.
void export_trajectory(const Trajectory& trajectory, const MetricsReport& metrics,
                       const std::string& prefix);
void export_metrics(const MetricsReport& metrics, const std::string& path);

/// Reads the u columns of an exported table as a schedule (the last row's
/// input is dropped, it only repeats the previous one). Throws IoError, ParseError.
InputSchedule load_input_schedule(const std::string& path);

}  // namespace softder
