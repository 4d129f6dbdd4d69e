#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bwshare/allocator.hpp"
#include "bwshare/atomic_measure.hpp"
#include "bwshare/distribution.hpp"
#include "bwshare/rng.hpp"
#include "bwshare/topology.hpp"

namespace bwshare {

/// One in-progress document transfer.
struct FlowRecord {
  int route = 0;
  std::int64_t flow_id = 0;
  double arrival_time = 0.0;
  double initial_size = 0.0;
  double residual = 0.0;
  std::optional<double> departure_time;
};

enum class EventKind { Arrival, Departure };

/// Aggregate snapshot attached to every event and sample record. All
/// quantities are in the model's own (unscaled) units.
struct TraceAggregates {
  Eigen::VectorXd counts;            // active flows per route (Z)
  Eigen::VectorXd workload;          // residual work per route (W)
  Eigen::VectorXd bandwidth;         // current allocation (lambda)
  Eigen::VectorXd served;            // cumulative bandwidth per route (T)
  Eigen::VectorXd per_flow_service;  // cumulative per-flow service per route (S)
  Eigen::VectorXd load_count;        // arrivals so far per route
  Eigen::VectorXd load_work;         // arrived work so far per route
  Eigen::VectorXd unused;            // cumulative unused capacity per resource (U)
};

struct TraceEvent {
  double time = 0.0;
  EventKind kind = EventKind::Arrival;
  int route = 0;
  std::int64_t flow_id = 0;
  double size = 0.0;  // the flow's initial document size
  TraceAggregates after;
};

struct TraceSample {
  double time = 0.0;
  TraceAggregates state;
  std::vector<AtomicMeasure> measures;  // one per route
};

/// Event-stamped history of one run. Deterministic for a fixed
/// (configuration, r, seed).
struct SimTrace {
  double scale = 1.0;  // the scaling index r the run was generated with
  bool fluid_scaled = false;
  double start_time = 0.0;
  double end_time = 0.0;
  Eigen::VectorXd initial_counts;
  Eigen::VectorXd initial_workload;
  std::vector<AtomicMeasure> initial_measures;
  std::vector<TraceEvent> events;
  std::vector<TraceSample> samples;
};

/// Per-route stochastic primitives: a renewal arrival stream and i.i.d.
/// document sizes.
struct RouteArrivals {
  Distribution interarrival;
  Distribution document_size;
};

/// How initial flow sizes are drawn relative to the document-size
/// distribution.
struct InitialConditionRule {
  enum class Kind { ExcessLifetime, SameAsSize, Explicit };
  Kind kind = Kind::ExcessLifetime;
  std::optional<Distribution> explicit_dist;
};

/// Per-route traffic description consumed by init_sim.
struct RouteTraffic {
  std::optional<RouteArrivals> arrivals;  // absent: no exogenous arrivals
  std::optional<Distribution> document_size_for_initial;  // base for the initial rule
  InitialConditionRule initial_rule;
  double z0 = 0.0;  // fluid-scaled initial flow count
};

/// The stochastic flow-level model state. Single-threaded; independent
/// states with disjoint streams may run concurrently.
class SimState {
 public:
  SimState(NetworkTopology topology, AlphaFairPolicy policy, double r);

  /// Adds an initial flow with an explicit document size (clock must be 0).
  void add_initial_flow(int route, double size);
  /// Installs an arrival stream on a route; streams are derived from the
  /// named (seed, purpose, route) stream family.
  void enable_arrivals(int route, RouteArrivals arrivals, std::uint64_t seed);
  /// Sorts initial flows and computes the first allocation. Called once
  /// before run_until; idempotent.
  void start();

  const NetworkTopology& topology() const { return topology_; }
  const AlphaFairPolicy& policy() const { return policy_; }
  double r() const { return r_; }
  double clock() const { return clock_; }

  Eigen::VectorXd counts() const;    // Z: flows with positive residual
  Eigen::VectorXd workload() const;  // W: sum of residuals
  const Eigen::VectorXd& bandwidth() const { return bandwidth_; }
  const Eigen::VectorXd& served() const { return served_; }
  const Eigen::VectorXd& per_flow_service() const { return per_flow_service_; }
  const Eigen::VectorXd& load_count() const { return load_count_; }
  const Eigen::VectorXd& load_work() const { return load_work_; }
  Eigen::VectorXd unused_capacity() const;  // U = C t - A T

  const std::vector<std::vector<FlowRecord>>& flows() const { return flows_; }

 private:
  friend SimTrace run_until(SimState& state, double horizon,
                            std::span<const double> sample_times);

  struct ArrivalGen {
    RouteArrivals spec;
    RngStream inter_rng;
    RngStream size_rng;
    double next_time = 0.0;
  };

  void reallocate();
  void advance(double dt, int snap_route, double snap_residual);
  TraceAggregates aggregates() const;

  NetworkTopology topology_;
  AlphaFairPolicy policy_;
  double r_ = 1.0;
  double clock_ = 0.0;
  bool started_ = false;
  std::vector<std::vector<FlowRecord>> flows_;  // sorted by (residual, flow_id)
  std::vector<std::optional<ArrivalGen>> arrivals_;
  std::vector<std::int64_t> next_flow_id_;
  Eigen::VectorXd bandwidth_, prices_, served_, per_flow_service_, load_count_, load_work_;
};

/// Builds the initial state for scaling index r: floor(r * z0_i) initial
/// flows per route with i.i.d. sizes from the configured initial rule
/// (default: the excess-lifetime transform of the document-size
/// distribution), plus renewal arrival streams. Deterministic per seed.
SimState init_sim(const NetworkTopology& topology, const AlphaFairPolicy& policy,
                  const std::vector<RouteTraffic>& traffic, double r, std::uint64_t seed);

/// Runs the event loop to the given horizon, sampling full measure
/// snapshots at the requested times. Event times are solved in closed
/// form; ties are broken deterministically (departures before arrivals,
/// then lower route, then lower flow id).
SimTrace run_until(SimState& state, double horizon, std::span<const double> sample_times = {});

/// Per-route measure with one atom per active flow at its residual size;
/// zero-residual flows are excluded.
std::vector<AtomicMeasure> observe(const SimState& state);

/// Law-of-large-numbers rescaling: times and masses divided by r, atom
/// locations and per-flow service left unscaled. r = 1 is the identity.
SimTrace fluid_scale(const SimTrace& trace, double r);

/// Max absolute defect of the per-route workload conservation identity
/// W(t) = W(0) + arrived work - served work, over all events and samples.
double workload_balance_check(const SimTrace& trace);

/// Max absolute defect of the measure-transport identity between sampled
/// snapshots: the measure at t equals the measure at s shifted by the
/// per-flow service on [s, t] plus the partially-served arrivals of
/// (s, t], projected against the probe battery. Consecutive sample pairs
/// are used as intervals.
double prelimit_dynamic_check(const SimTrace& trace, std::span<const double> thetas);

}  // namespace bwshare
