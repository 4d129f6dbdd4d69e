#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bwshare/experiments.hpp"
#include "bwshare/invariant.hpp"
#include "bwshare/scenario.hpp"

namespace {

using bwshare::Scenario;

std::string fmt(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

Eigen::VectorXd parse_comma_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    values.push_back(std::stod(item));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) out(static_cast<Eigen::Index>(k)) = values[k];
  return out;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

// seed resolution: CLI flag beats the BWSHARE_SEED environment variable,
// which beats the scenario file
std::uint64_t resolve_seed(const Scenario& scenario, const std::optional<std::uint64_t>& cli) {
  if (cli) return *cli;
  if (const char* env = std::getenv("BWSHARE_SEED")) {
    return static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
  }
  return scenario.experiment.seed;
}

void write_event_csv(const bwshare::SimTrace& trace, int routes, int resources,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) bwshare::fail(bwshare::ErrorCode::IoError, "cannot write " + path);
  out << "time,event,route,flow_id,size";
  for (int i = 0; i < routes; ++i) out << ",z_" << i;
  for (int i = 0; i < routes; ++i) out << ",w_" << i;
  for (int i = 0; i < routes; ++i) out << ",lambda_" << i;
  for (int j = 0; j < resources; ++j) out << ",u_" << j;
  out << '\n';
  for (const auto& ev : trace.events) {
    out << fmt(ev.time) << ','
        << (ev.kind == bwshare::EventKind::Arrival ? "arrival" : "departure") << ',' << ev.route
        << ',' << ev.flow_id << ',' << fmt(ev.size);
    for (int i = 0; i < routes; ++i) out << ',' << fmt(ev.after.counts(i));
    for (int i = 0; i < routes; ++i) out << ',' << fmt(ev.after.workload(i));
    for (int i = 0; i < routes; ++i) out << ',' << fmt(ev.after.bandwidth(i));
    for (int j = 0; j < resources; ++j) out << ',' << fmt(ev.after.unused(j));
    out << '\n';
  }
}

int run(int argc, char** argv) {
  CLI::App app{"bandwidth-sharing network simulator and fluid solver"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_path;
  std::string out_dir;
  std::string dump_dir;
  std::string z_list;
  std::string w_list;
  std::string check_path;
  double r_value = 1.0;
  double horizon = 0.0;
  double dt = 0.0;
  std::optional<std::uint64_t> seed;

  auto* cmd_allocate = app.add_subcommand("allocate", "solve one bandwidth allocation");
  cmd_allocate->add_option("--scenario", scenario_path, "scenario file")->required();
  cmd_allocate->add_option("--z", z_list, "comma-separated flow counts")->required();

  auto* cmd_simulate = app.add_subcommand("simulate", "run the stochastic model");
  cmd_simulate->add_option("--scenario", scenario_path)->required();
  cmd_simulate->add_option("--r", r_value, "scaling index (initial flows = floor(r z0))");
  cmd_simulate->add_option("--seed", seed);
  cmd_simulate->add_option("--horizon", horizon, "horizon in model time")->required();
  cmd_simulate->add_option("--out", out_path, "event CSV")->required();

  auto* cmd_fluid = app.add_subcommand("fluid", "solve the fluid model");
  cmd_fluid->add_option("--scenario", scenario_path)->required();
  cmd_fluid->add_option("--horizon", horizon)->required();
  cmd_fluid->add_option("--dt", dt)->required();
  cmd_fluid->add_option("--out", out_path, "grid CSV")->required();
  cmd_fluid->add_option("--dump-measures", dump_dir, "directory for measure snapshots");

  auto* cmd_invariant = app.add_subcommand("invariant", "invariant-state computations");
  cmd_invariant->add_option("--scenario", scenario_path)->required();
  auto* opt_w = cmd_invariant->add_option("--w", w_list, "critical-resource workloads");
  auto* opt_z = cmd_invariant->add_option("--z", z_list, "candidate flow counts");
  auto* opt_check = cmd_invariant->add_option("--check", check_path, "measure file to check");
  opt_w->excludes(opt_z)->excludes(opt_check);
  opt_z->excludes(opt_check);

  auto* cmd_converge = app.add_subcommand("converge", "fluid-limit convergence experiment");
  cmd_converge->add_option("--scenario", scenario_path)->required();
  cmd_converge->add_option("--out-dir", out_dir)->required();
  cmd_converge->add_option("--seed", seed);

  auto* cmd_lln = app.add_subcommand("lln", "law-of-large-numbers experiment");
  cmd_lln->add_option("--scenario", scenario_path)->required();
  cmd_lln->add_option("--out-dir", out_dir)->required();
  cmd_lln->add_option("--seed", seed);

  auto* cmd_stationary = app.add_subcommand("stationary", "stationarity experiment");
  cmd_stationary->add_option("--scenario", scenario_path)->required();
  cmd_stationary->add_option("--out-dir", out_dir)->required();
  cmd_stationary->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  Scenario scenario = bwshare::parse_scenario(scenario_path);
  scenario.experiment.seed = resolve_seed(scenario, seed);

  if (cmd_allocate->parsed()) {
    const Eigen::VectorXd z = parse_comma_list(z_list);
    const auto result = bwshare::allocate(scenario.topology, scenario.policy, z);
    nlohmann::json out;
    out["lambda"] = vector_to_json(result.bandwidth);
    out["prices"] = vector_to_json(result.prices);
    out["kkt_residual"] = result.kkt_residual;
    out["iterations"] = result.iterations;
    std::cout << out.dump(2) << '\n';
    return 0;
  }

  if (cmd_simulate->parsed()) {
    bwshare::SimState state = bwshare::init_sim(scenario, r_value, scenario.experiment.seed);
    const bwshare::SimTrace trace = bwshare::run_until(state, horizon);
    write_event_csv(trace, scenario.topology.num_routes(), scenario.topology.num_resources(),
                    out_path);
    return 0;
  }

  if (cmd_fluid->parsed()) {
    const bwshare::FluidData data = scenario.fluid_data();
    bwshare::FluidOptions opts;
    opts.dt = dt;
    opts.inflow_atoms = scenario.experiment.inflow_atoms;
    const bwshare::FluidSolution sol =
        bwshare::solve(data, scenario.fluid_initial(scenario.experiment.discretize_atoms),
                       horizon, opts);
    std::ofstream out(out_path);
    if (!out) bwshare::fail(bwshare::ErrorCode::IoError, "cannot write " + out_path);
    const int routes = scenario.topology.num_routes();
    const int resources = scenario.topology.num_resources();
    out << "time";
    for (int i = 0; i < routes; ++i) out << ",z_" << i;
    for (int i = 0; i < routes; ++i) out << ",w_" << i;
    for (int i = 0; i < routes; ++i) out << ",tau_" << i;
    for (int j = 0; j < resources; ++j) out << ",u_" << j;
    out << '\n';
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      out << fmt(sol.times[k]);
      for (int i = 0; i < routes; ++i) out << ',' << fmt(sol.counts(row, i));
      for (int i = 0; i < routes; ++i) out << ',' << fmt(sol.workload(row, i));
      for (int i = 0; i < routes; ++i) out << ',' << fmt(sol.served(row, i));
      for (int j = 0; j < resources; ++j) out << ',' << fmt(sol.unused(row, j));
      out << '\n';
    }
    if (!dump_dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(dump_dir, ec);
      std::ofstream index(dump_dir + "/index.csv");
      if (!index) bwshare::fail(bwshare::ErrorCode::IoError, "cannot write measure index");
      index << "snapshot,time,file\n";
      for (std::size_t m = 0; m < sol.stored_steps.size(); ++m) {
        const std::string name = "measures_" + std::to_string(m) + ".json";
        std::ofstream mf(dump_dir + "/" + name);
        if (!mf) bwshare::fail(bwshare::ErrorCode::IoError, "cannot write " + name);
        mf << bwshare::measures_to_json(sol.measures[m]);
        index << m << ',' << fmt(sol.times[sol.stored_steps[m]]) << ',' << name << '\n';
      }
    }
    return 0;
  }

  if (cmd_invariant->parsed()) {
    const bwshare::FluidData data = scenario.fluid_data();
    const auto critical = bwshare::critical_resources(data);
    nlohmann::json out;
    out["critical_resources"] = critical.indices;
    out["invariant_states_exist"] = critical.invariant_states_exist;
    out["load"] = vector_to_json(critical.load);
    if (!critical.near_critical.empty()) {
      out["near_critical_warning"] = critical.near_critical;
    }
    if (!w_list.empty()) {
      const auto lift = bwshare::lift_workload(data, parse_comma_list(w_list));
      out["z"] = vector_to_json(lift.z);
      out["q"] = vector_to_json(lift.multipliers);
      out["residual"] = lift.residual;
      const auto membership = bwshare::is_in_P(data, lift.z);
      out["in_P"] = membership.in_P;
      out["membership_deviation"] = membership.max_deviation;
    } else if (!z_list.empty()) {
      const Eigen::VectorXd z = parse_comma_list(z_list);
      const auto membership = bwshare::is_in_P(data, z);
      out["in_P"] = membership.in_P;
      out["membership_deviation"] = membership.max_deviation;
      if (membership.in_P) {
        const auto state = bwshare::make_invariant_state(data, z,
                                                         scenario.experiment.discretize_atoms);
        if (state.multipliers.size() > 0) out["q"] = vector_to_json(state.multipliers);
        out["z"] = vector_to_json(state.z);
      }
    } else if (!check_path.empty()) {
      std::ifstream in(check_path);
      if (!in) bwshare::fail(bwshare::ErrorCode::IoError, "cannot open " + check_path);
      std::ostringstream buffer;
      buffer << in.rdbuf();
      const auto measures = bwshare::measures_from_json_text(buffer.str());
      const auto check = bwshare::is_invariant_state(data, measures, 0.0,
                                                     scenario.experiment.discretize_atoms);
      out["is_invariant"] = check.ok;
      out["load_feasible"] = check.load_feasible;
      out["in_P"] = check.membership.in_P;
      out["membership_deviation"] = check.membership.max_deviation;
      out["shape_distances"] = check.shape_distances;
      out["shape_tol"] = check.shape_tol;
    }
    std::cout << out.dump(2) << '\n';
    return 0;
  }

  if (cmd_converge->parsed()) {
    const auto report = bwshare::run_convergence(scenario);
    bwshare::emit_plots(report, out_dir);
    std::cout << (report.pass ? "PASS" : "FAIL") << ": " << report.diagnostics << '\n';
    return report.pass ? 0 : 2;
  }
  if (cmd_lln->parsed()) {
    const auto report = bwshare::run_lln(scenario);
    bwshare::emit_plots(report, out_dir);
    std::cout << (report.pass ? "PASS" : "FAIL") << ": " << report.diagnostics << '\n';
    return report.pass ? 0 : 2;
  }
  if (cmd_stationary->parsed()) {
    const auto report = bwshare::run_stationarity(scenario);
    bwshare::emit_plots(report, out_dir);
    std::cout << (report.pass ? "PASS" : "FAIL") << ": " << report.diagnostics << '\n';
    return report.pass ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const bwshare::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
