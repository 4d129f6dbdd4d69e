#pragma once

#include <string>
#include <vector>

#include "bwshare/scenario.hpp"

namespace bwshare {

/// Empirical fluid-limit convergence: per scaling index r, the median and
/// max over replications of the sup-over-sample-times Levy distance
/// between the rescaled simulation and the fluid solution. The verdict is
/// PASS when the medians are nonincreasing in r (up to 10% slack) and the
/// largest-r median is below the scenario threshold. All verdicts are
/// recomputable from the stored raw distances.
struct ConvergenceReport {
  std::vector<double> r_values;
  int replications = 0;
  std::vector<double> sample_times;
  std::vector<Eigen::MatrixXd> distances;  // per r: replications x sample_times
  std::vector<double> median_sup;
  std::vector<double> max_sup;
  double threshold = 0.0;
  bool pass = false;
  std::string diagnostics;
  // trajectory overlay (largest r, replication 0) for plotting
  std::vector<double> overlay_times;
  Eigen::MatrixXd overlay_fluid_counts;  // times x routes
  Eigen::MatrixXd overlay_sim_counts;    // times x routes
};

ConvergenceReport run_convergence(const Scenario& scenario);

/// Law-of-large-numbers check on the rescaled load process: per r, the
/// sup over sample times of the componentwise gaps |<1, L>(t) - nu t| and
/// |<x, L>(t) - rho t|. Verdict: medians nonincreasing in r (10% slack).
struct LlnReport {
  std::vector<double> r_values;
  int replications = 0;
  std::vector<double> sample_times;
  std::vector<Eigen::MatrixXd> count_gaps;  // per r: replications x 1 (sup over times)
  std::vector<Eigen::MatrixXd> work_gaps;
  std::vector<double> median_count_gap;
  std::vector<double> median_work_gap;
  bool pass = false;
  std::string diagnostics;
};

LlnReport run_lln(const Scenario& scenario);

/// Invariance of the manifold state under the fluid dynamics: builds the
/// invariant state from the scenario's z0, runs the fluid solver from it,
/// and reports the sup over sample times of the Levy distance back to the
/// initial state.
struct StationarityReport {
  std::vector<double> sample_times;
  std::vector<double> distances;
  double sup_distance = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string diagnostics;
};

StationarityReport run_stationarity(const Scenario& scenario);

/// CSV emission (UTF-8, 17 significant digits, header-only when empty).
void emit_plots(const ConvergenceReport& report, const std::string& dir);
void emit_plots(const LlnReport& report, const std::string& dir);
void emit_plots(const StationarityReport& report, const std::string& dir);

}  // namespace bwshare
