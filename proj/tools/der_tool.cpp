// der_tool: scenario runs, trajectory export and model diagnostics.
//
//   der_tool simulate --scenario case.json [--model der|pcc] [--inputs u.csv] [--out prefix]
//   der_tool generate --scenario case.json --model pcc --out run/case1
//   der_tool compare  --scenario case.json [--sweep] [--out prefix]
//   der_tool verify
//   der_tool schema
//
// Exit codes: 0 ok, 2 invalid input, 3 numerical failure, 4 I/O.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "softder/actuation.hpp"
#include "softder/arc_chain.hpp"
#include "softder/errors.hpp"
#include "softder/fixtures.hpp"
#include "softder/scenario.hpp"
#include "softder/trajgen.hpp"

namespace {

using namespace softder;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct Options {
  std::string scenario_path;
  std::string out;
  std::string model = "der";
  std::string inputs;
  std::optional<double> dt;
  std::optional<std::uint64_t> seed;
  std::optional<double> perturb;
  bool sweep = false;
};

Scenario resolve(const Options& o) {
  Scenario s = o.scenario_path.empty() ? Scenario{} : load_scenario(o.scenario_path);
  if (o.dt) s.dt = *o.dt;
  if (o.seed) s.seed = *o.seed;
  if (o.perturb) {
    s.plant_perturbation.EI *= *o.perturb;
    s.plant_perturbation.EA *= *o.perturb;
    s.plant_perturbation.GJ *= *o.perturb;
  }
  s.validate();
  return s;
}

void print_report(const char* label, const MetricsReport& r) {
  std::printf("%-4s mean %.6e (x %.6e, y %.6e)  std %.6e (x %.6e, y %.6e)  max %.6e  sat %.3f\n",
              label, r.mean, r.mean_x, r.mean_y, r.std_dev, r.std_dev_x, r.std_dev_y, r.max,
              r.saturation_fraction);
}

int run_generate(const Options& o) {
  const Scenario s = resolve(o);
  const TaskReference ref = build_reference(s);
  const RodParams model = model_params(s);
  const ActuationModel act = model_actuation(s, model);
  const SimConfig cfg = sim_config(s);
  Trajectory traj;
  if (o.model == "pcc") {
    const PccTrajectory p = pcc_generate(ref, model_pcc(s, model),
                                         make_pcc_gains(s.gains.omega, s.gains.zeta), act, cfg.dt);
    traj = as_rod_trajectory(p, model, act);
  } else {
    traj = generate(ref, model, act, make_gains(model, s.gains.omega, s.gains.zeta, cfg.clamped_dofs),
                    cfg);
  }
  const MetricsReport r = compute_metrics(traj.times, traj.tips, ref.tips, traj.saturated);
  std::printf("%s: generated %zu samples with the %s pipeline\n", s.name.c_str(), traj.size(),
              o.model.c_str());
  print_report(o.model.c_str(), r);
  if (!o.out.empty()) {
    export_trajectory(traj, r, o.out);
    std::printf("wrote %s.csv and %s_metrics.csv\n", o.out.c_str(), o.out.c_str());
  }
  return 0;
}

int run_simulate(const Options& o) {
  const Scenario s = resolve(o);
  const TaskReference ref = build_reference(s);
  const RodParams model = model_params(s);
  const ActuationModel act = model_actuation(s, model);
  const SimConfig cfg = sim_config(s);

  InputSchedule schedule;
  std::vector<bool> saturated;
  if (!o.inputs.empty()) {
    schedule = load_input_schedule(o.inputs);
    if (std::abs(schedule.interval * s.control_rate - 1.0) > 1e-9) {
      throw ValidationError("inputs", "sample interval does not match the scenario's control rate");
    }
  } else if (o.model == "pcc") {
    const PccTrajectory p = pcc_generate(ref, model_pcc(s, model),
                                         make_pcc_gains(s.gains.omega, s.gains.zeta), act, cfg.dt);
    schedule = schedule_of(p);
    saturated = p.saturated;
  } else {
    const Trajectory g =
        generate(ref, model, act, make_gains(model, s.gains.omega, s.gains.zeta, cfg.clamped_dofs), cfg);
    schedule = schedule_of(g);
    saturated = g.saturated;
  }
  if (schedule.inputs.size() + 1 != ref.times.size()) {
    throw ValidationError("inputs", "expected " + std::to_string(ref.times.size() - 1) +
                                        " input intervals, got " + std::to_string(schedule.inputs.size()));
  }
  const RodParams plant = plant_params(s);
  const ActuationModel plant_act = make_actuation(plant, act.Lambda, act.input_bound);
  const RodState start = reference_configuration(ref.angles.front(), model, act);
  Trajectory traj = rollout(start, schedule, plant, plant_act, cfg);
  if (saturated.empty()) {
    for (const auto& u : traj.inputs) saturated.push_back(u.cwiseAbs().maxCoeff() > act.input_bound);
  }
  traj.saturated = saturated;
  const MetricsReport r = compute_metrics(traj.times, traj.tips, ref.tips, saturated);
  std::printf("%s: open-loop rollout of %zu intervals on the plant\n", s.name.c_str(),
              schedule.inputs.size());
  print_report(o.inputs.empty() ? o.model.c_str() : "u", r);
  if (!o.out.empty()) {
    export_trajectory(traj, r, o.out);
    std::printf("wrote %s.csv and %s_metrics.csv\n", o.out.c_str(), o.out.c_str());
  }
  return 0;
}

int run_compare(const Options& o) {
  const Scenario s = resolve(o);
  if (o.sweep) {
    const std::vector<double> factors = {0.9, 0.95, 1.0, 1.05, 1.1};
    const std::vector<SweepPoint> pts = run_sweep(s, factors);
    double der = 0.0, pcc = 0.0;
    std::printf("%s: stiffness sweep\n  factor  E_der         E_pcc\n", s.name.c_str());
    for (const SweepPoint& p : pts) {
      std::printf("  %5.2f   %.6e  %.6e\n", p.stiffness_factor, p.der.mean, p.pcc.mean);
      der += p.der.mean / static_cast<double>(pts.size());
      pcc += p.pcc.mean / static_cast<double>(pts.size());
    }
    std::printf("  mean    %.6e  %.6e\n", der, pcc);
    return 0;
  }
  const Comparison c = run_comparison(s);
  std::printf("%s: inputs replayed open loop on the plant\n", s.name.c_str());
  print_report("der", c.der);
  print_report("pcc", c.pcc);
  if (!o.out.empty()) {
    export_trajectory(c.der_plant, c.der, o.out + "_der");
    export_trajectory(c.pcc_plant, c.pcc, o.out + "_pcc");
    std::printf("wrote %s_der.csv, %s_pcc.csv and their metrics files\n", o.out.c_str(), o.out.c_str());
  }
  return 0;
}

// Bending-force localization on uniform arcs and on a two-segment arm.
int run_verify() {
  bool ok = true;
  const auto check = [&ok](const char* what, double value, double tol) {
    const bool pass = value <= tol;
    ok = ok && pass;
    std::printf("  %-34s %.3e  (<= %.0e) %s\n", what, value, tol, pass ? "ok" : "FAIL");
  };

  std::printf("single segment arcs, 12 nodes\n");
  const RodParams one = make_uniform_params({12}, 0.25, 0.05, fixtures::kEA, fixtures::kEI, fixtures::kGJ);
  const ActuationModel one_act = make_actuation(one, Eigen::MatrixXd::Identity(1, 1));
  std::vector<double> magnitudes;
  const std::vector<double> turns = {0.1, 0.3, 0.6};
  for (double turn : turns) {
    const RodState arc = reference_configuration(Eigen::VectorXd::Constant(1, turn * 10.0), one, one_act);
    const SegmentLocalization seg = localization_report(arc, one).segments.front();
    std::printf(" joint turn %.2f rad, boundary force %.6e N\n", turn, seg.boundary_start);
    check("interior / boundary", seg.interior_ratio, 1e-9);
    check("start pair residual", seg.pair_start, 1e-9);
    check("end pair residual", seg.pair_end, 1e-9);
    check("start orthogonality", seg.orthogonal_start, 1e-9);
    check("end orthogonality", seg.orthogonal_end, 1e-9);
    magnitudes.push_back(seg.boundary_start);
  }
  const auto shape = [](double t) { return std::sin(t) / ((1.0 + std::cos(t)) * (1.0 + std::cos(t))); };
  for (std::size_t i = 1; i < turns.size(); ++i) {
    const double expected = shape(turns[i]) / shape(turns[0]);
    const double got = magnitudes[i] / magnitudes[0];
    std::printf(" magnitude ratio %.2f/%.2f: %.12f vs %.12f\n", turns[i], turns[0], got, expected);
    check("relative ratio error", std::abs(got - expected) / expected, 1e-6);
  }

  std::printf("two segments, bends 0.4 and -0.25 rad\n");
  const RodParams two = fixtures::rod_params();
  const ActuationModel two_act = fixtures::actuation(two);
  const RodState arm = reference_configuration(Eigen::Vector2d(0.4, -0.25), two, two_act);
  const LocalizationDiagnostics d = localization_report(arm, two);
  check("junction coupling", d.junction_coupling, 1e-9);
  for (std::size_t j = 0; j < d.segments.size(); ++j) {
    std::printf(" segment %zu\n", j);
    check("isolated-segment mismatch", d.segments[j].isolated_mismatch, 1e-9);
    check("interior / boundary", d.segments[j].interior_ratio, 1e-9);
  }
  std::printf(ok ? "all checks passed\n" : "some checks failed\n");
  return ok ? 0 : kExitNumerical;
}

int exit_code(const softder::Error& e) {
  switch (e.kind()) {
    case ErrorKind::Validation: return kExitValidation;
    case ErrorKind::Numerical: return kExitNumerical;
    case ErrorKind::Io: return kExitIo;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete elastic rod trajectory generation and comparison"};
  app.require_subcommand(1);
  Options o;

  const auto scenario_flags = [&o](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario_path, "Scenario JSON file (defaults when omitted)");
    sub->add_option("--out", o.out, "Output path prefix");
    sub->add_option("--dt", o.dt, "Simulator time step, s");
    sub->add_option("--seed", o.seed, "Seed for randomized plant perturbations");
    sub->add_option("--perturb", o.perturb, "Extra plant stiffness factor (EI, EA, GJ)");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Roll out an input schedule open loop on the plant");
  scenario_flags(simulate);
  simulate->add_option("--model", o.model, "Pipeline producing the inputs")->check(CLI::IsMember({"der", "pcc"}));
  simulate->add_option("--inputs", o.inputs, "Table with u0, u1, ... columns to replay instead");

  CLI::App* gen = app.add_subcommand("generate", "Generate states and inputs for a scenario");
  scenario_flags(gen);
  gen->add_option("--model", o.model, "der or pcc")->check(CLI::IsMember({"der", "pcc"}));

  CLI::App* compare = app.add_subcommand("compare", "Replay both pipelines' inputs on the plant");
  scenario_flags(compare);
  compare->add_flag("--sweep", o.sweep, "Sweep plant stiffness over 0.9 .. 1.1");

  CLI::App* verify = app.add_subcommand("verify", "Bending-force localization diagnostics");
  CLI::App* schema = app.add_subcommand("schema", "Print the scenario JSON schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*schema) {
      std::cout << scenario_schema();
      return 0;
    }
    if (*verify) return run_verify();
    if (*gen) return run_generate(o);
    if (*simulate) return run_simulate(o);
    if (*compare) return run_compare(o);
  } catch (const softder::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
