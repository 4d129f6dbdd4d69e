#include "bwshare/scenario.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace bwshare {

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
  fail(ErrorCode::SchemaError, path + ": " + what);
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) schema_fail(path, "expected an object");
  for (const auto& item : j.items()) {
    if (allowed.count(item.key()) == 0) schema_fail(path + "." + item.key(), "unknown key");
  }
}

const json& get_required(const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) schema_fail(path + "." + key, "missing required key");
  return j.at(key);
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) schema_fail(path, "expected a number");
  return j.get<double>();
}

std::vector<double> get_number_array(const json& j, const std::string& path) {
  if (!j.is_array()) schema_fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(get_number(j[k], path + "[" + std::to_string(k) + "]"));
  }
  return out;
}

Distribution parse_distribution(const json& j, const std::string& path) {
  if (!j.is_object()) schema_fail(path, "expected a distribution object");
  const json& type = get_required(j, path, "type");
  if (!type.is_string()) schema_fail(path + ".type", "expected a string");
  const std::string kind = type.get<std::string>();
  try {
    if (kind == "exponential") {
      check_keys(j, path, {"type", "rate"});
      return Distribution::exponential(get_number(get_required(j, path, "rate"), path + ".rate"));
    }
    if (kind == "deterministic") {
      check_keys(j, path, {"type", "value"});
      return Distribution::deterministic(
          get_number(get_required(j, path, "value"), path + ".value"));
    }
    if (kind == "uniform") {
      check_keys(j, path, {"type", "a", "b"});
      return Distribution::uniform_interval(get_number(get_required(j, path, "a"), path + ".a"),
                                            get_number(get_required(j, path, "b"), path + ".b"));
    }
    if (kind == "hyperexponential") {
      check_keys(j, path, {"type", "weights", "rates"});
      return Distribution::hyper_exponential(
          get_number_array(get_required(j, path, "weights"), path + ".weights"),
          get_number_array(get_required(j, path, "rates"), path + ".rates"));
    }
    if (kind == "empirical") {
      check_keys(j, path, {"type", "locations", "masses"});
      return Distribution::empirical(AtomicMeasure(
          get_number_array(get_required(j, path, "locations"), path + ".locations"),
          get_number_array(get_required(j, path, "masses"), path + ".masses")));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaError) throw;
    fail(ErrorCode::SemanticError, path + ": " + e.what());
  }
  schema_fail(path + ".type", "unknown distribution type '" + kind + "'");
}

Scenario parse_json(const json& root) {
  check_keys(root, "scenario",
             {"name", "topology", "policy", "traffic", "initial", "experiment"});
  Scenario sc;
  if (root.contains("name")) {
    if (!root.at("name").is_string()) schema_fail("scenario.name", "expected a string");
    sc.name = root.at("name").get<std::string>();
  }

  // topology
  const json& topo = get_required(root, "scenario", "topology");
  check_keys(topo, "topology", {"incidence", "capacities"});
  const json& inc = get_required(topo, "topology", "incidence");
  if (!inc.is_array() || inc.empty()) schema_fail("topology.incidence", "expected a matrix");
  const std::size_t rows = inc.size();
  const std::vector<double> row0 = get_number_array(inc[0], "topology.incidence[0]");
  const std::size_t cols = row0.size();
  if (cols == 0) schema_fail("topology.incidence", "matrix has no columns");
  Eigen::MatrixXd incidence(rows, cols);
  for (std::size_t a = 0; a < rows; ++a) {
    const std::vector<double> row =
        get_number_array(inc[a], "topology.incidence[" + std::to_string(a) + "]");
    if (row.size() != cols) schema_fail("topology.incidence", "ragged matrix");
    for (std::size_t b = 0; b < cols; ++b) incidence(static_cast<Eigen::Index>(a),
                                                     static_cast<Eigen::Index>(b)) = row[b];
  }
  const std::vector<double> caps =
      get_number_array(get_required(topo, "topology", "capacities"), "topology.capacities");
  Eigen::VectorXd capacities(static_cast<Eigen::Index>(caps.size()));
  for (std::size_t a = 0; a < caps.size(); ++a) {
    capacities(static_cast<Eigen::Index>(a)) = caps[a];
  }
  try {
    sc.topology = validate_topology(incidence, capacities);
  } catch (const Error& e) {
    fail(ErrorCode::SemanticError, std::string("topology: ") + e.what());
  }
  const int routes = sc.topology.num_routes();

  // policy
  const json& pol = get_required(root, "scenario", "policy");
  check_keys(pol, "policy", {"alpha", "kappa"});
  sc.policy.alpha = get_number(get_required(pol, "policy", "alpha"), "policy.alpha");
  if (pol.contains("kappa")) {
    const std::vector<double> kappa = get_number_array(pol.at("kappa"), "policy.kappa");
    sc.policy.kappa.resize(static_cast<Eigen::Index>(kappa.size()));
    for (std::size_t a = 0; a < kappa.size(); ++a) {
      sc.policy.kappa(static_cast<Eigen::Index>(a)) = kappa[a];
    }
  } else {
    sc.policy.kappa = Eigen::VectorXd::Ones(routes);
    std::cerr << "note: policy.kappa missing; defaulting to all-ones weights\n";
  }
  try {
    validate_policy(sc.topology, sc.policy);
  } catch (const Error& e) {
    fail(ErrorCode::SemanticError, std::string("policy: ") + e.what());
  }

  // traffic
  const json& traffic = get_required(root, "scenario", "traffic");
  if (!traffic.is_array()) schema_fail("traffic", "expected an array");
  if (static_cast<int>(traffic.size()) != routes) {
    fail(ErrorCode::SemanticError, "traffic: need exactly one block per route");
  }
  for (std::size_t a = 0; a < traffic.size(); ++a) {
    const std::string path = "traffic[" + std::to_string(a) + "]";
    const json& block = traffic[a];
    check_keys(block, path, {"interarrival", "size", "nu"});
    ScenarioTraffic t{
        std::nullopt,
        parse_distribution(get_required(block, path, "size"), path + ".size"),
        0.0,
    };
    if (block.contains("interarrival")) {
      if (block.contains("nu")) schema_fail(path, "give either interarrival or nu, not both");
      t.interarrival = parse_distribution(block.at("interarrival"), path + ".interarrival");
      t.nu = 1.0 / t.interarrival->mean();
    } else if (block.contains("nu")) {
      t.nu = get_number(block.at("nu"), path + ".nu");
    } else {
      schema_fail(path, "need interarrival or nu");
    }
    if (!(t.nu > 0.0)) fail(ErrorCode::SemanticError, path + ": arrival rate must be positive");
    sc.traffic.push_back(std::move(t));
  }

  // initial condition
  sc.z0 = Eigen::VectorXd::Zero(routes);
  if (root.contains("initial")) {
    const json& initial = root.at("initial");
    check_keys(initial, "initial", {"z0", "size_rule"});
    if (initial.contains("z0")) {
      const std::vector<double> z0 = get_number_array(initial.at("z0"), "initial.z0");
      if (static_cast<int>(z0.size()) != routes) {
        fail(ErrorCode::SemanticError, "initial.z0: need one entry per route");
      }
      for (std::size_t a = 0; a < z0.size(); ++a) {
        if (z0[a] < 0.0) fail(ErrorCode::SemanticError, "initial.z0: entries must be >= 0");
        sc.z0(static_cast<Eigen::Index>(a)) = z0[a];
      }
    }
    if (initial.contains("size_rule")) {
      const json& rule = initial.at("size_rule");
      if (rule.is_string()) {
        const std::string name = rule.get<std::string>();
        if (name == "excess") {
          sc.initial_rule.kind = InitialConditionRule::Kind::ExcessLifetime;
        } else if (name == "same") {
          sc.initial_rule.kind = InitialConditionRule::Kind::SameAsSize;
        } else {
          schema_fail("initial.size_rule", "expected 'excess', 'same', or a distribution");
        }
      } else {
        sc.initial_rule.kind = InitialConditionRule::Kind::Explicit;
        sc.initial_rule.explicit_dist = parse_distribution(rule, "initial.size_rule");
      }
    }
  }

  // experiment
  if (root.contains("experiment")) {
    const json& exp = root.at("experiment");
    check_keys(exp, "experiment",
               {"r_list", "replications", "horizon", "dt", "seed", "sample_times", "threshold",
                "stationarity_threshold", "discretize_atoms", "inflow_atoms"});
    if (exp.contains("r_list")) {
      sc.experiment.r_list = get_number_array(exp.at("r_list"), "experiment.r_list");
      if (sc.experiment.r_list.empty()) {
        fail(ErrorCode::SemanticError, "experiment.r_list: must be nonempty");
      }
      for (std::size_t a = 0; a < sc.experiment.r_list.size(); ++a) {
        if (sc.experiment.r_list[a] < 1.0) {
          fail(ErrorCode::SemanticError, "experiment.r_list: entries must be >= 1");
        }
        if (a > 0 && sc.experiment.r_list[a] <= sc.experiment.r_list[a - 1]) {
          fail(ErrorCode::SemanticError, "experiment.r_list: must be strictly increasing");
        }
      }
    }
    if (exp.contains("replications")) {
      const double reps = get_number(exp.at("replications"), "experiment.replications");
      if (reps < 1.0) fail(ErrorCode::SemanticError, "experiment.replications: must be >= 1");
      sc.experiment.replications = static_cast<int>(reps);
    }
    if (exp.contains("horizon")) {
      sc.experiment.horizon = get_number(exp.at("horizon"), "experiment.horizon");
      if (!(sc.experiment.horizon > 0.0)) {
        fail(ErrorCode::SemanticError, "experiment.horizon: must be positive");
      }
    }
    if (exp.contains("dt")) {
      sc.experiment.dt = get_number(exp.at("dt"), "experiment.dt");
      if (!(sc.experiment.dt > 0.0)) fail(ErrorCode::SemanticError, "experiment.dt: must be positive");
    }
    if (exp.contains("seed")) {
      sc.experiment.seed = exp.at("seed").get<std::uint64_t>();
    }
    if (exp.contains("sample_times")) {
      sc.experiment.sample_times = get_number_array(exp.at("sample_times"), "experiment.sample_times");
      for (double t : sc.experiment.sample_times) {
        if (t < 0.0 || t > sc.experiment.horizon) {
          fail(ErrorCode::SemanticError, "experiment.sample_times: must lie in [0, horizon]");
        }
      }
    }
    if (exp.contains("threshold")) {
      sc.experiment.threshold = get_number(exp.at("threshold"), "experiment.threshold");
    }
    if (exp.contains("stationarity_threshold")) {
      sc.experiment.stationarity_threshold =
          get_number(exp.at("stationarity_threshold"), "experiment.stationarity_threshold");
    }
    if (exp.contains("discretize_atoms")) {
      sc.experiment.discretize_atoms =
          static_cast<int>(get_number(exp.at("discretize_atoms"), "experiment.discretize_atoms"));
    }
    if (exp.contains("inflow_atoms")) {
      sc.experiment.inflow_atoms =
          static_cast<int>(get_number(exp.at("inflow_atoms"), "experiment.inflow_atoms"));
    }
  }
  if (sc.experiment.sample_times.empty()) {
    sc.experiment.sample_times = {sc.experiment.horizon};
  }
  return sc;
}

}  // namespace

Eigen::VectorXd Scenario::arrival_rates() const {
  Eigen::VectorXd nu(static_cast<Eigen::Index>(traffic.size()));
  for (std::size_t i = 0; i < traffic.size(); ++i) {
    nu(static_cast<Eigen::Index>(i)) = traffic[i].nu;
  }
  return nu;
}

FluidData Scenario::fluid_data() const {
  std::vector<Distribution> sizes;
  sizes.reserve(traffic.size());
  for (const auto& t : traffic) sizes.push_back(t.document_size);
  return make_fluid_data(topology, policy, arrival_rates(), std::move(sizes));
}

std::vector<RouteTraffic> Scenario::sim_traffic() const {
  std::vector<RouteTraffic> out;
  out.reserve(traffic.size());
  for (std::size_t i = 0; i < traffic.size(); ++i) {
    RouteTraffic rt;
    if (traffic[i].interarrival) {
      rt.arrivals = RouteArrivals{*traffic[i].interarrival, traffic[i].document_size};
    }
    rt.document_size_for_initial = traffic[i].document_size;
    rt.initial_rule = initial_rule;
    rt.z0 = z0(static_cast<Eigen::Index>(i));
    out.push_back(std::move(rt));
  }
  return out;
}

std::vector<AtomicMeasure> Scenario::fluid_initial(int atoms) const {
  std::vector<AtomicMeasure> out;
  out.reserve(traffic.size());
  for (std::size_t i = 0; i < traffic.size(); ++i) {
    const double z = z0(static_cast<Eigen::Index>(i));
    if (z <= 0.0) {
      out.emplace_back();
      continue;
    }
    AtomicMeasure shape;
    switch (initial_rule.kind) {
      case InitialConditionRule::Kind::ExcessLifetime:
        shape = ExcessLifetime(traffic[i].document_size).discretize(atoms);
        break;
      case InitialConditionRule::Kind::SameAsSize:
        shape = traffic[i].document_size.discretize(atoms);
        break;
      case InitialConditionRule::Kind::Explicit:
        shape = initial_rule.explicit_dist->discretize(atoms);
        break;
    }
    out.push_back(shape.scaled(z));
  }
  return out;
}

bool Scenario::has_simulation_traffic() const {
  for (const auto& t : traffic) {
    if (!t.interarrival) return false;
  }
  return true;
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open scenario file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str());
}

Scenario parse_scenario_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::SchemaError, std::string("invalid JSON: ") + e.what());
  }
  return parse_json(root);
}

std::string measures_to_json(std::span<const AtomicMeasure> measures) {
  json root;
  root["measures"] = json::array();
  for (const auto& m : measures) {
    json entry;
    entry["locations"] = json::array();
    entry["masses"] = json::array();
    for (const auto& a : m.atoms()) {
      entry["locations"].push_back(a.location);
      entry["masses"].push_back(a.mass);
    }
    root["measures"].push_back(std::move(entry));
  }
  return root.dump(2);
}

std::vector<AtomicMeasure> measures_from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::SchemaError, std::string("invalid JSON: ") + e.what());
  }
  check_keys(root, "measures-file", {"measures"});
  const json& list = get_required(root, "measures-file", "measures");
  if (!list.is_array()) schema_fail("measures-file.measures", "expected an array");
  std::vector<AtomicMeasure> out;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string path = "measures[" + std::to_string(k) + "]";
    check_keys(list[k], path, {"locations", "masses"});
    out.emplace_back(get_number_array(get_required(list[k], path, "locations"), path + ".locations"),
                     get_number_array(get_required(list[k], path, "masses"), path + ".masses"));
  }
  return out;
}

SimState init_sim(const Scenario& scenario, double r, std::uint64_t seed) {
  return init_sim(scenario.topology, scenario.policy, scenario.sim_traffic(), r, seed);
}

}  // namespace bwshare
