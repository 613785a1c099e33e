#include "softder/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "softder/errors.hpp"
#include "softder/fixtures.hpp"

namespace softder {

using nlohmann::json;

std::string to_string(CaseKind kind) {
  switch (kind) {
    case CaseKind::Asynchronous: return "asynchronous";
    case CaseKind::SynchronousSame: return "synchronous_same";
    case CaseKind::SynchronousOpposite: return "synchronous_opposite";
    case CaseKind::Custom: return "custom";
  }
  return "custom";
}

CaseKind parse_case_kind(const std::string& text) {
  for (CaseKind k : {CaseKind::Asynchronous, CaseKind::SynchronousSame,
                     CaseKind::SynchronousOpposite, CaseKind::Custom}) {
    if (to_string(k) == text) return k;
  }
  throw ValidationError("case_kind", "unknown case '" + text + "'");
}

namespace {

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ValidationError(key, what);
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

// Number of control intervals, or -1 when the horizon is not a whole number of them.
long long interval_count(double horizon, double rate) {
  const double k = horizon * rate;
  const double r = std::round(k);
  return std::abs(k - r) <= 1e-9 * std::max(1.0, k) ? static_cast<long long>(r) : -1;
}

}  // namespace

void Scenario::validate() const {
  require(!name.empty(), "name", "must not be empty");
  require(positive(horizon), "horizon", "must be positive");
  require(positive(control_rate), "control_rate", "must be positive");
  require(positive(dt), "dt", "must be positive");
  require(interval_count(horizon, control_rate) >= 2, "horizon",
          "must span a whole number (at least 2) of control intervals");
  const double interval = 1.0 / control_rate;
  const double sub = interval / dt;
  require(std::abs(sub - std::round(sub)) <= 1e-9 * sub && std::round(sub) >= 1, "dt",
          "must divide the control interval evenly");

  const int m = num_segments();
  require(m >= 1, "rod.segment_nodes", "needs at least one segment");
  for (std::size_t j = 0; j < rod.segment_nodes.size(); ++j) {
    require(rod.segment_nodes[j] >= 4, "rod.segment_nodes[" + std::to_string(j) + "]",
            "each segment needs at least 4 nodes");
  }
  require(positive(rod.length), "rod.length", "must be positive");
  require(positive(rod.mass), "rod.mass", "must be positive");
  require(positive(rod.EA), "rod.EA", "must be positive");
  require(positive(rod.EI), "rod.EI", "must be positive");
  require(std::isfinite(rod.GJ) && rod.GJ >= 0.0, "rod.GJ", "must be non-negative");
  require(std::isfinite(rod.damping_rate) && rod.damping_rate >= 0.0, "rod.damping_rate",
          "must be non-negative");
  require(positive(rod.edge_inertia), "rod.edge_inertia", "must be positive");

  require(static_cast<int>(amplitude.size()) == m, "amplitude",
          "needs one entry per segment (" + std::to_string(m) + ")");
  for (std::size_t j = 0; j < amplitude.size(); ++j) {
    require(std::isfinite(amplitude[j]) && std::abs(amplitude[j]) < std::numbers::pi,
            "amplitude[" + std::to_string(j) + "]", "must lie in (-pi, pi)");
  }
  if (case_kind == CaseKind::Custom) {
    require(static_cast<int>(profiles.size()) == m, "profiles",
            "custom cases need one profile per segment");
    for (std::size_t j = 0; j < profiles.size(); ++j) {
      const std::string key = "profiles[" + std::to_string(j) + "]";
      require(std::isfinite(profiles[j].delay), key + ".delay", "must be finite");
      require(std::isfinite(profiles[j].scale), key + ".scale", "must be finite");
    }
  } else {
    require(profiles.empty(), "profiles", "only allowed with case_kind custom");
    require(m == 2, "case_kind", "named cases need exactly two segments; use custom");
  }

  if (!actuation.lambda.empty()) {
    require(static_cast<int>(actuation.lambda.size()) == m, "actuation.lambda",
            "needs one row per segment");
    for (std::size_t i = 0; i < actuation.lambda.size(); ++i) {
      require(static_cast<int>(actuation.lambda[i].size()) == m,
              "actuation.lambda[" + std::to_string(i) + "]", "needs one entry per segment");
      for (double v : actuation.lambda[i]) {
        require(std::isfinite(v), "actuation.lambda[" + std::to_string(i) + "]", "must be finite");
      }
    }
  }
  require(positive(actuation.u_max), "actuation.u_max", "must be positive");
  require(std::isfinite(gains.omega) && gains.omega >= 0.0, "gains.omega", "must be non-negative");
  require(std::isfinite(gains.zeta) && gains.zeta >= 0.0, "gains.zeta", "must be non-negative");

  if (pcc.stiffness) {
    require(static_cast<int>(pcc.stiffness->size()) == m, "pcc.stiffness", "needs one entry per segment");
    for (double v : *pcc.stiffness) require(positive(v), "pcc.stiffness", "entries must be positive");
  }
  if (pcc.damping) {
    require(static_cast<int>(pcc.damping->size()) == m, "pcc.damping", "needs one entry per segment");
    for (double v : *pcc.damping) {
      require(std::isfinite(v) && v >= 0.0, "pcc.damping", "entries must be non-negative");
    }
  }
  require(pcc.stiffness.has_value() == pcc.damping.has_value(), "pcc",
          "stiffness and damping must be given together");

  const Perturbation& p = plant_perturbation;
  require(positive(p.EI), "plant_perturbation.EI", "must be positive");
  require(positive(p.EA), "plant_perturbation.EA", "must be positive");
  require(positive(p.GJ), "plant_perturbation.GJ", "must be positive");
  require(positive(p.damping), "plant_perturbation.damping", "must be positive");
  require(std::isfinite(p.mass_jitter) && p.mass_jitter >= 0.0 && p.mass_jitter < 1.0,
          "plant_perturbation.mass_jitter", "must lie in [0, 1)");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  const std::string where = path.empty() ? "(root)" : path;
  if (!j.is_object()) throw ValidationError(where, "expected an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ValidationError(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
    }
  }
}

double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ValidationError(key, "expected a number");
  return j.get<double>();
}

std::vector<double> get_numbers(const json& j, const std::string& key) {
  if (!j.is_array()) throw ValidationError(key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_number(j[i], key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

int get_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ValidationError(key, "expected an integer");
  return j.get<int>();
}

void read_number(const json& j, const char* name, const std::string& prefix, double& out) {
  if (j.contains(name)) out = get_number(j.at(name), prefix + name);
}

Scenario from_json(const json& j) {
  check_keys(j, "", {"name", "case_kind", "horizon", "control_rate", "dt", "amplitude", "profiles",
                     "rod", "actuation", "gains", "pcc", "plant_perturbation", "seed"});
  Scenario s;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw ValidationError("name", "expected a string");
    s.name = j["name"].get<std::string>();
  }
  if (j.contains("case_kind")) {
    if (!j["case_kind"].is_string()) throw ValidationError("case_kind", "expected a string");
    s.case_kind = parse_case_kind(j["case_kind"].get<std::string>());
  }
  read_number(j, "horizon", "", s.horizon);
  read_number(j, "control_rate", "", s.control_rate);
  read_number(j, "dt", "", s.dt);

  if (j.contains("rod")) {
    const json& r = j["rod"];
    check_keys(r, "rod", {"segment_nodes", "length", "mass", "EA", "EI", "GJ", "damping_rate",
                          "edge_inertia"});
    if (r.contains("segment_nodes")) {
      const json& a = r["segment_nodes"];
      if (!a.is_array()) throw ValidationError("rod.segment_nodes", "expected an array of integers");
      s.rod.segment_nodes.clear();
      for (std::size_t i = 0; i < a.size(); ++i) {
        s.rod.segment_nodes.push_back(get_int(a[i], "rod.segment_nodes[" + std::to_string(i) + "]"));
      }
    }
    read_number(r, "length", "rod.", s.rod.length);
    read_number(r, "mass", "rod.", s.rod.mass);
    read_number(r, "EA", "rod.", s.rod.EA);
    read_number(r, "EI", "rod.", s.rod.EI);
    read_number(r, "GJ", "rod.", s.rod.GJ);
    read_number(r, "damping_rate", "rod.", s.rod.damping_rate);
    read_number(r, "edge_inertia", "rod.", s.rod.edge_inertia);
  }
  const std::size_t m = s.rod.segment_nodes.size();

  if (j.contains("amplitude")) {
    const json& a = j["amplitude"];
    if (a.is_number()) {
      s.amplitude.assign(m, a.get<double>());
    } else {
      s.amplitude = get_numbers(a, "amplitude");
    }
  } else {
    s.amplitude.assign(m, 0.6);
  }
  if (j.contains("profiles")) {
    const json& a = j["profiles"];
    if (!a.is_array()) throw ValidationError("profiles", "expected an array of objects");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string key = "profiles[" + std::to_string(i) + "]";
      check_keys(a[i], key, {"delay", "scale"});
      Profile p;
      read_number(a[i], "delay", key + ".", p.delay);
      read_number(a[i], "scale", key + ".", p.scale);
      s.profiles.push_back(p);
    }
  }
  if (j.contains("actuation")) {
    const json& a = j["actuation"];
    check_keys(a, "actuation", {"lambda", "u_max"});
    if (a.contains("lambda")) {
      const json& l = a["lambda"];
      if (l.is_number()) {
        const double v = l.get<double>();
        s.actuation.lambda.assign(m, std::vector<double>(m, 0.0));
        for (std::size_t i = 0; i < m; ++i) s.actuation.lambda[i][i] = v;
      } else if (l.is_array() && !l.empty() && l[0].is_array()) {
        for (std::size_t i = 0; i < l.size(); ++i) {
          s.actuation.lambda.push_back(get_numbers(l[i], "actuation.lambda[" + std::to_string(i) + "]"));
        }
      } else {
        const std::vector<double> d = get_numbers(l, "actuation.lambda");
        s.actuation.lambda.assign(d.size(), std::vector<double>(d.size(), 0.0));
        for (std::size_t i = 0; i < d.size(); ++i) s.actuation.lambda[i][i] = d[i];
      }
    }
    read_number(a, "u_max", "actuation.", s.actuation.u_max);
  }
  if (j.contains("gains")) {
    const json& g = j["gains"];
    check_keys(g, "gains", {"omega", "zeta"});
    read_number(g, "omega", "gains.", s.gains.omega);
    read_number(g, "zeta", "gains.", s.gains.zeta);
  }
  if (j.contains("pcc")) {
    const json& p = j["pcc"];
    check_keys(p, "pcc", {"stiffness", "damping"});
    if (p.contains("stiffness")) s.pcc.stiffness = get_numbers(p["stiffness"], "pcc.stiffness");
    if (p.contains("damping")) s.pcc.damping = get_numbers(p["damping"], "pcc.damping");
  }
  if (j.contains("plant_perturbation")) {
    const json& p = j["plant_perturbation"];
    const std::string k = "plant_perturbation.";
    check_keys(p, "plant_perturbation", {"EI", "EA", "GJ", "damping", "mass_jitter"});
    read_number(p, "EI", k, s.plant_perturbation.EI);
    read_number(p, "EA", k, s.plant_perturbation.EA);
    read_number(p, "GJ", k, s.plant_perturbation.GJ);
    read_number(p, "damping", k, s.plant_perturbation.damping);
    read_number(p, "mass_jitter", k, s.plant_perturbation.mass_jitter);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ValidationError("seed", "expected a non-negative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  s.validate();
  return s;
}

json to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["case_kind"] = to_string(s.case_kind);
  j["horizon"] = s.horizon;
  j["control_rate"] = s.control_rate;
  j["dt"] = s.dt;
  j["amplitude"] = s.amplitude;
  if (!s.profiles.empty()) {
    json a = json::array();
    for (const Profile& p : s.profiles) a.push_back({{"delay", p.delay}, {"scale", p.scale}});
    j["profiles"] = a;
  }
  j["rod"] = {{"segment_nodes", s.rod.segment_nodes}, {"length", s.rod.length},
              {"mass", s.rod.mass},                   {"EA", s.rod.EA},
              {"EI", s.rod.EI},                       {"GJ", s.rod.GJ},
              {"damping_rate", s.rod.damping_rate},   {"edge_inertia", s.rod.edge_inertia}};
  j["actuation"] = {{"u_max", s.actuation.u_max}};
  if (!s.actuation.lambda.empty()) j["actuation"]["lambda"] = s.actuation.lambda;
  j["gains"] = {{"omega", s.gains.omega}, {"zeta", s.gains.zeta}};
  if (s.pcc.stiffness) j["pcc"]["stiffness"] = *s.pcc.stiffness;
  if (s.pcc.damping) j["pcc"]["damping"] = *s.pcc.damping;
  const Perturbation& p = s.plant_perturbation;
  j["plant_perturbation"] = {{"EI", p.EI}, {"EA", p.EA}, {"GJ", p.GJ}, {"damping", p.damping},
                             {"mass_jitter", p.mass_jitter}};
  j["seed"] = s.seed;
  return j;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& scenario) { return to_json(scenario).dump(2) + "\n"; }

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << serialize_scenario(scenario);
  if (!out) throw IoError("write failed for " + path);
}

std::string scenario_schema() {
  const json num = {{"type", "number"}};
  const json nums = {{"type", "array"}, {"items", num}};
  json schema = {
      {"$schema", "https://json-schema.org/draft/2020-12/schema"},
      {"title", "softder scenario"},
      {"type", "object"},
      {"additionalProperties", false},
      {"properties",
       {{"name", {{"type", "string"}, {"default", "scenario"}}},
        {"case_kind",
         {{"enum", {"asynchronous", "synchronous_same", "synchronous_opposite", "custom"}},
          {"default", "synchronous_same"}}},
        {"horizon", {{"type", "number"}, {"exclusiveMinimum", 0}, {"default", 10.0},
                     {"description", "s; a whole number of control intervals"}}},
        {"control_rate", {{"type", "number"}, {"exclusiveMinimum", 0}, {"default", 20.0},
                          {"description", "Hz"}}},
        {"dt", {{"type", "number"}, {"exclusiveMinimum", 0}, {"default", 0.005},
                {"description", "s; must divide the control interval"}}},
        {"amplitude", {{"oneOf", {num, nums}}, {"default", 0.6},
                       {"description", "peak bend angle per segment, rad"}}},
        {"profiles",
         {{"type", "array"},
          {"description", "custom cases only: theta_j(t) = scale * A_j * s(t - delay)"},
          {"items",
           {{"type", "object"},
            {"additionalProperties", false},
            {"properties", {{"delay", {{"type", "number"}, {"default", 0.0}}},
                            {"scale", {{"type", "number"}, {"default", 1.0}}}}}}}}},
        {"rod",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties",
           {{"segment_nodes", {{"type", "array"}, {"items", {{"type", "integer"}, {"minimum", 4}}},
                               {"default", {8, 8}}}},
            {"length", {{"type", "number"}, {"default", 0.25}}},
            {"mass", {{"type", "number"}, {"default", 0.05}}},
            {"EA", {{"type", "number"}, {"default", 1e4}}},
            {"EI", {{"type", "number"}, {"default", 0.4}}},
            {"GJ", {{"type", "number"}, {"default", 0.3}}},
            {"damping_rate", {{"type", "number"}, {"default", 8.0}}},
            {"edge_inertia", {{"type", "number"}, {"default", 1e-7}}}}}}},
        {"actuation",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties",
           {{"lambda", {{"description", "number (diagonal), array (diagonal) or matrix rows"},
                        {"default", fixtures::kLambda}}},
            {"u_max", {{"type", "number"}, {"default", 10.0}}}}}}},
        {"gains",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties", {{"omega", {{"type", "number"}, {"default", 10.0}}},
                          {"zeta", {{"type", "number"}, {"default", 1.0}}}}}}},
        {"pcc",
         {{"type", "object"},
          {"additionalProperties", false},
          {"description", "baseline constants; identified from the rod when omitted"},
          {"properties", {{"stiffness", nums}, {"damping", nums}}}}},
        {"plant_perturbation",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties", {{"EI", {{"type", "number"}, {"default", 1.0}}},
                          {"EA", {{"type", "number"}, {"default", 1.0}}},
                          {"GJ", {{"type", "number"}, {"default", 1.0}}},
                          {"damping", {{"type", "number"}, {"default", 1.0}}},
                          {"mass_jitter", {{"type", "number"}, {"default", 0.0}}}}}}},
        {"seed", {{"type", "integer"}, {"minimum", 0}, {"default", 0}}}}}};
  return schema.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Models and reference

double motion_profile(double t, double horizon) {
  const double q = horizon / 4.0;
  const auto ramp = [](double x) { return x - std::sin(2.0 * std::numbers::pi * x) / (2.0 * std::numbers::pi); };
  if (t <= 0.0 || t >= 3.0 * q) return 0.0;
  if (t < q) return ramp(t / q);
  if (t < 2.0 * q) return 1.0;
  return 1.0 - ramp((t - 2.0 * q) / q);
}

Profile segment_profile(const Scenario& scenario, int segment) {
  switch (scenario.case_kind) {
    case CaseKind::Asynchronous: return {segment == 0 ? 0.0 : scenario.horizon / 4.0, 1.0};
    case CaseKind::SynchronousSame: return {0.0, 1.0};
    case CaseKind::SynchronousOpposite: return {0.0, segment == 0 ? 1.0 : -1.0};
    case CaseKind::Custom: return scenario.profiles.at(segment);
  }
  return {};
}

RodParams model_params(const Scenario& s) {
  return make_uniform_params(s.rod.segment_nodes, s.rod.length, s.rod.mass, s.rod.EA, s.rod.EI,
                             s.rod.GJ, s.rod.damping_rate, s.rod.edge_inertia);
}

RodParams plant_params(const Scenario& s, double stiffness_factor) {
  if (!positive(stiffness_factor)) throw ValidationError("perturb", "factor must be positive");
  RodParams p = model_params(s);
  const Perturbation& d = s.plant_perturbation;
  p.EI *= d.EI * stiffness_factor;
  p.EA *= d.EA * stiffness_factor;
  p.GJ *= d.GJ * stiffness_factor;
  p.damping *= d.damping;
  if (d.mass_jitter > 0.0) {
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> jitter(-d.mass_jitter, d.mass_jitter);
    const Eigen::VectorXd m0 = mass_diagonal(p);
    for (double& m : p.node_masses) m *= 1.0 + jitter(rng);
    // Keep mass-proportional damping proportional to the jittered masses.
    const Eigen::VectorXd m1 = mass_diagonal(p);
    for (int i = 0; i < p.damping.size(); ++i) p.damping[i] *= m1[i] / m0[i];
  }
  p.validate();
  return p;
}

ActuationModel model_actuation(const Scenario& s, const RodParams& params) {
  const int m = s.num_segments();
  Eigen::MatrixXd lambda = fixtures::kLambda * Eigen::MatrixXd::Identity(m, m);
  if (!s.actuation.lambda.empty()) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) lambda(i, j) = s.actuation.lambda[i][j];
    }
  }
  return make_actuation(params, lambda, s.actuation.u_max);
}

SimConfig sim_config(const Scenario& s) {
  SimConfig c = fixtures::sim_config();
  c.dt = s.dt;
  return c;
}

PccParams model_pcc(const Scenario& s, const RodParams& params) {
  if (s.pcc.stiffness && s.pcc.damping) {
    return make_pcc_params(params, Eigen::Map<const Eigen::VectorXd>(s.pcc.stiffness->data(), s.num_segments()),
                           Eigen::Map<const Eigen::VectorXd>(s.pcc.damping->data(), s.num_segments()));
  }
  if (s.rod == RodSettings{}) return fixtures::pcc_params(params);
  const PccIdentification id = identify_pcc(params, model_actuation(s, params), sim_config(s));
  return make_pcc_params(params, id.stiffness, id.damping);
}

TaskReference build_reference(const Scenario& s) {
  s.validate();
  const long long k = interval_count(s.horizon, s.control_rate);
  const double h = 1.0 / s.control_rate;
  const int m = s.num_segments();
  std::vector<double> times;
  std::vector<Eigen::VectorXd> angles;
  for (long long i = 0; i <= k; ++i) {
    const double t = static_cast<double>(i) * h;
    Eigen::VectorXd a(m);
    for (int j = 0; j < m; ++j) {
      const Profile p = segment_profile(s, j);
      a[j] = p.scale * s.amplitude[j] * motion_profile(t - p.delay, s.horizon);
    }
    times.push_back(t);
    angles.push_back(a);
  }
  const RodParams params = model_params(s);
  return reference_from_angles(std::move(times), std::move(angles), arc_chain(params));
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

// Time average and RMS deviation of a sampled signal by the trapezoidal rule.
std::pair<double, double> trapezoid_stats(const std::vector<double>& t, const std::vector<double>& v) {
  const std::size_t n = t.size();
  if (n < 2) return {n == 1 ? v[0] : 0.0, 0.0};
  const double span = t.back() - t.front();
  double mean = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) mean += 0.5 * (t[k + 1] - t[k]) * (v[k] + v[k + 1]);
  mean /= span;
  double var = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double a = v[k] - mean, b = v[k + 1] - mean;
    var += 0.5 * (t[k + 1] - t[k]) * (a * a + b * b);
  }
  return {mean, std::sqrt(std::max(0.0, var / span))};
}

}  // namespace

MetricsReport compute_metrics(const std::vector<double>& times, const std::vector<Vec3>& tips,
                              const std::vector<Vec3>& reference_tips,
                              const std::vector<bool>& saturated) {
  if (tips.size() != times.size() || reference_tips.size() != times.size()) {
    throw DimensionMismatch("metrics need tips and reference on the same time grid");
  }
  if (!saturated.empty() && saturated.size() != times.size()) {
    throw DimensionMismatch("one saturation flag per sample expected");
  }
  MetricsReport r;
  r.times = times;
  std::vector<double> ex, ey;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Vec3 d = tips[k] - reference_tips[k];
    r.errors.push_back(d.norm());
    ex.push_back(std::abs(d.x()));
    ey.push_back(std::abs(d.y()));
  }
  std::tie(r.mean, r.std_dev) = trapezoid_stats(times, r.errors);
  std::tie(r.mean_x, r.std_dev_x) = trapezoid_stats(times, ex);
  std::tie(r.mean_y, r.std_dev_y) = trapezoid_stats(times, ey);
  if (!times.empty()) {
    r.max = *std::max_element(r.errors.begin(), r.errors.end());
    r.max_x = *std::max_element(ex.begin(), ex.end());
    r.max_y = *std::max_element(ey.begin(), ey.end());
  }
  if (!saturated.empty()) {
    r.saturation_fraction = static_cast<double>(std::count(saturated.begin(), saturated.end(), true)) /
                            static_cast<double>(saturated.size());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Comparison

namespace {

struct Generated {
  TaskReference reference;
  RodParams model;
  ActuationModel actuation;
  SimConfig config;
  Trajectory der;
  PccTrajectory pcc;
};

Generated generate_both(const Scenario& s) {
  Generated g;
  g.reference = build_reference(s);
  g.model = model_params(s);
  g.actuation = model_actuation(s, g.model);
  g.config = sim_config(s);
  const Gains gains = make_gains(g.model, s.gains.omega, s.gains.zeta, g.config.clamped_dofs);
  g.der = generate(g.reference, g.model, g.actuation, gains, g.config);
  g.pcc = pcc_generate(g.reference, model_pcc(s, g.model), make_pcc_gains(s.gains.omega, s.gains.zeta),
                       g.actuation, g.config.dt);
  return g;
}

Trajectory replay(const Generated& g, const InputSchedule& schedule, const RodParams& plant,
                  const std::vector<bool>& saturated) {
  const ActuationModel act = make_actuation(plant, g.actuation.Lambda, g.actuation.input_bound);
  Trajectory t = rollout(g.der.states.front(), schedule, plant, act, g.config);
  t.saturated = saturated;
  return t;
}

}  // namespace

Comparison run_comparison(const Scenario& s) {
  const Generated g = generate_both(s);
  const RodParams plant = plant_params(s);
  Comparison c;
  c.der_plant = replay(g, schedule_of(g.der), plant, g.der.saturated);
  c.pcc_plant = replay(g, schedule_of(g.pcc), plant, g.pcc.saturated);
  c.der = compute_metrics(c.der_plant.times, c.der_plant.tips, g.reference.tips, g.der.saturated);
  c.pcc = compute_metrics(c.pcc_plant.times, c.pcc_plant.tips, g.reference.tips, g.pcc.saturated);
  c.reference = g.reference;
  c.der_generated = g.der;
  c.pcc_generated = g.pcc;
  return c;
}

std::vector<SweepPoint> run_sweep(const Scenario& s, const std::vector<double>& factors) {
  const Generated g = generate_both(s);
  const InputSchedule der_u = schedule_of(g.der);
  const InputSchedule pcc_u = schedule_of(g.pcc);
  std::vector<SweepPoint> out;
  for (double f : factors) {
    const RodParams plant = plant_params(s, f);
    const Trajectory a = replay(g, der_u, plant, g.der.saturated);
    const Trajectory b = replay(g, pcc_u, plant, g.pcc.saturated);
    out.push_back({f, compute_metrics(a.times, a.tips, g.reference.tips, g.der.saturated),
                   compute_metrics(b.times, b.tips, g.reference.tips, g.pcc.saturated)});
  }
  return out;
}

Trajectory as_rod_trajectory(const PccTrajectory& trajectory, const RodParams& params,
                             const ActuationModel& actuation) {
  Trajectory t;
  t.times = trajectory.times;
  t.inputs = trajectory.inputs;
  t.saturated = trajectory.saturated;
  for (const PccState& s : trajectory.states) {
    t.states.push_back(reference_configuration(s.theta, params, actuation));
    t.tips.push_back(tip_position(t.states.back()));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Export

namespace {

void put(std::string& line, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, res.ptr);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

std::vector<std::string> trajectory_header(int num_nodes, int num_inputs) {
  std::vector<std::string> h{"t"};
  for (int i = 0; i < num_nodes; ++i) {
    for (const char* c : {"x", "y", "z"}) h.push_back("node" + std::to_string(i) + "_" + c);
  }
  for (int e = 0; e + 1 < num_nodes; ++e) h.push_back("phi" + std::to_string(e));
  for (int j = 0; j < num_inputs; ++j) h.push_back("u" + std::to_string(j));
  for (const char* c : {"tip_x", "tip_y", "tip_z", "err"}) h.emplace_back(c);
  return h;
}

void export_trajectory(const Trajectory& traj, const MetricsReport& metrics, const std::string& prefix) {
  if (traj.size() == 0) throw DimensionMismatch("nothing to export");
  if (metrics.errors.size() != traj.size()) {
    throw DimensionMismatch("metrics and trajectory have different lengths");
  }
  const int n = traj.states.front().num_nodes();
  const int m = traj.inputs.empty() ? 0 : static_cast<int>(traj.inputs.front().size());
  std::ofstream out = open_out(prefix + ".csv");
  const std::vector<std::string> header = trajectory_header(n, m);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::string line;
    put(line, traj.times[k]);
    const RodState& s = traj.states[k];
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < 3; ++c) {
        line += ',';
        put(line, s.node(i)[c]);
      }
    }
    for (int e = 0; e + 1 < n; ++e) {
      line += ',';
      put(line, s.twist(e));
    }
    for (int j = 0; j < m; ++j) {
      line += ',';
      put(line, traj.inputs[k][j]);
    }
    for (int c = 0; c < 3; ++c) {
      line += ',';
      put(line, traj.tips[k][c]);
    }
    line += ',';
    put(line, metrics.errors[k]);
    out << line << "\n";
  }
  if (!out) throw IoError("write failed for " + prefix + ".csv");
  export_metrics(metrics, prefix + "_metrics.csv");
}

void export_metrics(const MetricsReport& r, const std::string& path) {
  std::ofstream out = open_out(path);
  std::string text = "statistic,total,x,y\n";
  const auto row = [&](const char* name, double a, double b, double c) {
    text += name;
    for (double v : {a, b, c}) {
      text += ',';
      put(text, v);
    }
    text += '\n';
  };
  row("mean", r.mean, r.mean_x, r.mean_y);
  row("std", r.std_dev, r.std_dev_x, r.std_dev_y);
  row("max", r.max, r.max_x, r.max_y);
  text += "saturation_fraction,";
  put(text, r.saturation_fraction);
  text += ",,\n";
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

InputSchedule load_input_schedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const std::vector<std::string> header = split(line);
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].size() > 1 && header[i][0] == 'u' &&
        std::all_of(header[i].begin() + 1, header[i].end(), [](char c) { return c >= '0' && c <= '9'; })) {
      cols.push_back(i);
    }
  }
  if (cols.empty() || header.empty() || header[0] != "t") {
    throw ParseError(path + ": expected a 't' column and u0, u1, ... columns");
  }
  std::vector<double> times;
  std::vector<Eigen::VectorXd> inputs;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw ParseError(path + ": row " + std::to_string(row) + " has the wrong number of cells");
    }
    const auto number = [&](std::size_t c) {
      double v = 0.0;
      const std::string& s = cells[c];
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParseError(path + ": row " + std::to_string(row) + ": bad number '" + s + "'");
      }
      return v;
    };
    times.push_back(number(0));
    Eigen::VectorXd u(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) u[static_cast<Eigen::Index>(j)] = number(cols[j]);
    inputs.push_back(u);
  }
  if (inputs.size() < 2) throw ParseError(path + ": need at least two rows");
  InputSchedule s;
  s.interval = times[1] - times[0];
  if (!(s.interval > 0.0)) throw ParseError(path + ": times must increase");
  inputs.pop_back();
  s.inputs = std::move(inputs);
  return s;
}

}  // namespace softder
