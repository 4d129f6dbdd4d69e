#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bwshare/fluid.hpp"
#include "bwshare/simulator.hpp"

namespace bwshare {

/// Per-route traffic description from the scenario file. Simulation runs
/// need the interarrival law; fluid-only runs may give the arrival rate
/// directly.
struct ScenarioTraffic {
  std::optional<Distribution> interarrival;
  Distribution document_size;
  double nu = 0.0;  // derived 1/mean(interarrival), or given directly
};

struct ScenarioExperiment {
  std::vector<double> r_list{10.0, 100.0, 1000.0};
  int replications = 20;
  double horizon = 5.0;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  std::vector<double> sample_times;
  double threshold = 0.1;                // convergence PASS cutoff at the largest r
  double stationarity_threshold = 0.02;  // sup-distance cutoff for stationarity runs
  int discretize_atoms = 512;
  int inflow_atoms = 512;
};

/// A fully validated experiment configuration. Everything an experiment
/// needs is reproducible from this value plus the seed.
struct Scenario {
  std::string name;
  NetworkTopology topology;
  AlphaFairPolicy policy;
  std::vector<ScenarioTraffic> traffic;
  Eigen::VectorXd z0;
  InitialConditionRule initial_rule;
  ScenarioExperiment experiment;

  Eigen::VectorXd arrival_rates() const;
  FluidData fluid_data() const;
  std::vector<RouteTraffic> sim_traffic() const;
  /// Discretized initial fluid measures z0_i * (initial-rule distribution).
  std::vector<AtomicMeasure> fluid_initial(int atoms) const;
  bool has_simulation_traffic() const;
};

/// Parses and validates a scenario file (strict schema: unknown keys are
/// errors). Throws SchemaError with the offending field path, or
/// SemanticError for value-level violations.
Scenario parse_scenario(const std::string& path);

/// Same, from an in-memory JSON document.
Scenario parse_scenario_text(const std::string& text);

/// Serialization of an atomic measure vector to/from the paired-array
/// JSON format used by the CLI.
std::string measures_to_json(std::span<const AtomicMeasure> measures);
std::vector<AtomicMeasure> measures_from_json_text(const std::string& text);

/// Builds the initial simulator state for the scenario at scaling index r.
SimState init_sim(const Scenario& scenario, double r, std::uint64_t seed);

}  // namespace bwshare
