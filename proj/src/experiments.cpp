#include "bwshare/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "bwshare/invariant.hpp"

namespace bwshare {

namespace {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Run tasks 0..count-1 on a small pool; results must be written to
// preassigned slots so aggregation is independent of completion order.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), count);
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) task(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const std::size_t k = next.fetch_add(1);
        if (k >= count) return;
        try {
          task(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::ofstream open_csv(const std::string& dir, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::string path = dir + "/" + name;
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  return out;
}

bool nonincreasing_with_slack(const std::vector<double>& values, double slack) {
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > (1.0 + slack) * values[k - 1]) return false;
  }
  return true;
}

const char* kNonUniquenessNote =
    "note: fluid-solution uniqueness from a given initial condition is not "
    "established; a large distance may indicate a different fluid solution "
    "rather than a defect";

}  // namespace

ConvergenceReport run_convergence(const Scenario& scenario) {
  require(scenario.has_simulation_traffic(), ErrorCode::InvalidScenario,
          "convergence runs need an interarrival law on every route");
  const ScenarioExperiment& exp = scenario.experiment;
  const FluidData data = scenario.fluid_data();

  FluidOptions fopts;
  fopts.dt = exp.dt;
  fopts.inflow_atoms = exp.inflow_atoms;
  fopts.store_times = exp.sample_times;
  const FluidSolution fluid = solve(data, scenario.fluid_initial(exp.discretize_atoms),
                                    exp.horizon, fopts);

  ConvergenceReport report;
  report.r_values = exp.r_list;
  report.replications = exp.replications;
  report.sample_times = exp.sample_times;
  report.threshold = exp.threshold;
  const std::size_t num_r = exp.r_list.size();
  const auto reps = static_cast<std::size_t>(exp.replications);
  const auto num_times = static_cast<Eigen::Index>(exp.sample_times.size());
  report.distances.assign(num_r, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(reps), num_times));

  const int routes = scenario.topology.num_routes();
  Eigen::MatrixXd overlay_sim(num_times, routes);

  parallel_for(num_r * reps, [&](std::size_t task) {
    const std::size_t ri = task / reps;
    const std::size_t rep = task % reps;
    const double r = exp.r_list[ri];
    const std::uint64_t seed = derive_stream_seed(exp.seed, StreamPurpose::Replication,
                                                  static_cast<std::uint64_t>(ri),
                                                  static_cast<std::uint64_t>(rep));
    SimState state = init_sim(scenario, r, seed);
    std::vector<double> raw_times;
    raw_times.reserve(exp.sample_times.size());
    for (double t : exp.sample_times) raw_times.push_back(r * t);
    const SimTrace trace = run_until(state, r * exp.horizon, raw_times);
    const SimTrace scaled = fluid_scale(trace, r);
    for (std::size_t k = 0; k < scaled.samples.size(); ++k) {
      const auto& fluid_measures = fluid.measures_at(exp.sample_times[k]);
      const double d = vector_distance(scaled.samples[k].measures, fluid_measures,
                                       MeasureMetric::Levy);
      report.distances[ri](static_cast<Eigen::Index>(rep), static_cast<Eigen::Index>(k)) = d;
    }
    if (ri == num_r - 1 && rep == 0) {
      for (std::size_t k = 0; k < scaled.samples.size(); ++k) {
        overlay_sim.row(static_cast<Eigen::Index>(k)) =
            scaled.samples[k].state.counts.transpose();
      }
    }
  });

  for (std::size_t ri = 0; ri < num_r; ++ri) {
    std::vector<double> sups;
    sups.reserve(reps);
    double max_sup = 0.0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const double sup = report.distances[ri].row(static_cast<Eigen::Index>(rep)).maxCoeff();
      sups.push_back(sup);
      max_sup = std::max(max_sup, sup);
    }
    report.median_sup.push_back(median(std::move(sups)));
    report.max_sup.push_back(max_sup);
  }

  report.overlay_times = exp.sample_times;
  report.overlay_sim_counts = overlay_sim;
  report.overlay_fluid_counts.resize(num_times, routes);
  for (Eigen::Index k = 0; k < num_times; ++k) {
    const std::size_t idx = fluid.nearest_stored(exp.sample_times[static_cast<std::size_t>(k)]);
    report.overlay_fluid_counts.row(k) =
        fluid.counts.row(static_cast<Eigen::Index>(fluid.stored_steps[idx]));
  }

  const bool monotone = nonincreasing_with_slack(report.median_sup, 0.10);
  const bool small_at_max = report.median_sup.back() <= report.threshold;
  report.pass = monotone && small_at_max;
  std::ostringstream diag;
  diag << (monotone ? "medians nonincreasing in r within 10% slack"
                    : "medians increase in r beyond 10% slack");
  diag << "; D(r_max) = " << report.median_sup.back() << (small_at_max ? " <= " : " > ")
       << report.threshold;
  if (!report.pass) diag << "; " << kNonUniquenessNote;
  report.diagnostics = diag.str();
  return report;
}

LlnReport run_lln(const Scenario& scenario) {
  require(scenario.has_simulation_traffic(), ErrorCode::InvalidScenario,
          "LLN runs need an interarrival law on every route");
  const ScenarioExperiment& exp = scenario.experiment;
  const Eigen::VectorXd nu = scenario.arrival_rates();
  const FluidData data = scenario.fluid_data();

  LlnReport report;
  report.r_values = exp.r_list;
  report.replications = exp.replications;
  report.sample_times = exp.sample_times;
  const std::size_t num_r = exp.r_list.size();
  const auto reps = static_cast<std::size_t>(exp.replications);
  report.count_gaps.assign(num_r, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(reps), 1));
  report.work_gaps.assign(num_r, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(reps), 1));

  parallel_for(num_r * reps, [&](std::size_t task) {
    const std::size_t ri = task / reps;
    const std::size_t rep = task % reps;
    const double r = exp.r_list[ri];
    const std::uint64_t seed = derive_stream_seed(exp.seed, StreamPurpose::Replication,
                                                  static_cast<std::uint64_t>(ri),
                                                  static_cast<std::uint64_t>(rep));
    SimState state = init_sim(scenario, r, seed);
    std::vector<double> raw_times;
    raw_times.reserve(exp.sample_times.size());
    for (double t : exp.sample_times) raw_times.push_back(r * t);
    const SimTrace trace = run_until(state, r * exp.horizon, raw_times);
    const SimTrace scaled = fluid_scale(trace, r);
    double count_gap = 0.0;
    double work_gap = 0.0;
    for (std::size_t k = 0; k < scaled.samples.size(); ++k) {
      const double t = exp.sample_times[k];
      const auto& agg = scaled.samples[k].state;
      count_gap = std::max(count_gap, (agg.load_count - nu * t).cwiseAbs().maxCoeff());
      work_gap = std::max(work_gap, (agg.load_work - data.rho * t).cwiseAbs().maxCoeff());
    }
    report.count_gaps[ri](static_cast<Eigen::Index>(rep), 0) = count_gap;
    report.work_gaps[ri](static_cast<Eigen::Index>(rep), 0) = work_gap;
  });

  for (std::size_t ri = 0; ri < num_r; ++ri) {
    std::vector<double> c, w;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      c.push_back(report.count_gaps[ri](static_cast<Eigen::Index>(rep), 0));
      w.push_back(report.work_gaps[ri](static_cast<Eigen::Index>(rep), 0));
    }
    report.median_count_gap.push_back(median(std::move(c)));
    report.median_work_gap.push_back(median(std::move(w)));
  }
  report.pass = nonincreasing_with_slack(report.median_count_gap, 0.10) &&
                nonincreasing_with_slack(report.median_work_gap, 0.10);
  report.diagnostics = report.pass ? "load-process gaps decrease in r"
                                   : "load-process gaps fail to decrease in r";
  return report;
}

StationarityReport run_stationarity(const Scenario& scenario) {
  const ScenarioExperiment& exp = scenario.experiment;
  const FluidData data = scenario.fluid_data();

  const InvariantState state = make_invariant_state(data, scenario.z0, exp.discretize_atoms);

  FluidOptions fopts;
  fopts.dt = exp.dt;
  fopts.inflow_atoms = exp.inflow_atoms;
  fopts.store_times = exp.sample_times;
  const FluidSolution fluid = solve(data, state.measures, exp.horizon, fopts);

  StationarityReport report;
  report.sample_times = exp.sample_times;
  report.threshold = exp.stationarity_threshold;
  for (double t : exp.sample_times) {
    const double d = vector_distance(fluid.measures_at(t), state.measures, MeasureMetric::Levy);
    report.distances.push_back(d);
    report.sup_distance = std::max(report.sup_distance, d);
  }
  report.pass = report.sup_distance <= report.threshold;
  std::ostringstream diag;
  diag << "sup distance " << report.sup_distance << (report.pass ? " <= " : " > ")
       << report.threshold;
  if (!report.pass) diag << "; " << kNonUniquenessNote;
  report.diagnostics = diag.str();
  return report;
}

void emit_plots(const ConvergenceReport& report, const std::string& dir) {
  {
    auto out = open_csv(dir, "convergence.csv");
    out << "r,median_sup_distance,max_sup_distance\n";
    for (std::size_t ri = 0; ri < report.r_values.size(); ++ri) {
      out << format_double(report.r_values[ri]) << ',' << format_double(report.median_sup[ri])
          << ',' << format_double(report.max_sup[ri]) << '\n';
    }
  }
  {
    auto out = open_csv(dir, "distances_raw.csv");
    out << "r,replication,sample_time,distance\n";
    for (std::size_t ri = 0; ri < report.r_values.size(); ++ri) {
      for (Eigen::Index rep = 0; rep < report.distances[ri].rows(); ++rep) {
        for (Eigen::Index k = 0; k < report.distances[ri].cols(); ++k) {
          out << format_double(report.r_values[ri]) << ',' << rep << ','
              << format_double(report.sample_times[static_cast<std::size_t>(k)]) << ','
              << format_double(report.distances[ri](rep, k)) << '\n';
        }
      }
    }
  }
  {
    auto out = open_csv(dir, "trajectory.csv");
    const Eigen::Index routes = report.overlay_fluid_counts.cols();
    out << "time";
    for (Eigen::Index i = 0; i < routes; ++i) out << ",fluid_z_" << i;
    for (Eigen::Index i = 0; i < routes; ++i) out << ",sim_z_" << i;
    out << '\n';
    for (std::size_t k = 0; k < report.overlay_times.size(); ++k) {
      out << format_double(report.overlay_times[k]);
      for (Eigen::Index i = 0; i < routes; ++i) {
        out << ',' << format_double(report.overlay_fluid_counts(static_cast<Eigen::Index>(k), i));
      }
      for (Eigen::Index i = 0; i < routes; ++i) {
        out << ',' << format_double(report.overlay_sim_counts(static_cast<Eigen::Index>(k), i));
      }
      out << '\n';
    }
  }
}

void emit_plots(const LlnReport& report, const std::string& dir) {
  {
    auto out = open_csv(dir, "lln.csv");
    out << "r,median_count_gap,median_work_gap\n";
    for (std::size_t ri = 0; ri < report.r_values.size(); ++ri) {
      out << format_double(report.r_values[ri]) << ','
          << format_double(report.median_count_gap[ri]) << ','
          << format_double(report.median_work_gap[ri]) << '\n';
    }
  }
  {
    auto out = open_csv(dir, "lln_raw.csv");
    out << "r,replication,count_gap,work_gap\n";
    for (std::size_t ri = 0; ri < report.r_values.size(); ++ri) {
      for (Eigen::Index rep = 0; rep < report.count_gaps[ri].rows(); ++rep) {
        out << format_double(report.r_values[ri]) << ',' << rep << ','
            << format_double(report.count_gaps[ri](rep, 0)) << ','
            << format_double(report.work_gaps[ri](rep, 0)) << '\n';
      }
    }
  }
}

void emit_plots(const StationarityReport& report, const std::string& dir) {
  auto out = open_csv(dir, "stationarity.csv");
  out << "time,distance\n";
  for (std::size_t k = 0; k < report.sample_times.size(); ++k) {
    out << format_double(report.sample_times[k]) << ',' << format_double(report.distances[k])
        << '\n';
  }
}

}  // namespace bwshare
