#include "bwshare/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bwshare/probe.hpp"

namespace bwshare {

namespace {

bool flow_order(const FlowRecord& a, const FlowRecord& b) {
  if (a.residual != b.residual) return a.residual < b.residual;
  return a.flow_id < b.flow_id;
}

}  // namespace

SimState::SimState(NetworkTopology topology, AlphaFairPolicy policy, double r)
    : topology_(std::move(topology)), policy_(std::move(policy)), r_(r) {
  validate_policy(topology_, policy_);
  require(r_ >= 1.0, ErrorCode::InvalidInput, "scaling index r must be >= 1");
  const int routes = topology_.num_routes();
  flows_.resize(static_cast<std::size_t>(routes));
  arrivals_.resize(static_cast<std::size_t>(routes));
  next_flow_id_.assign(static_cast<std::size_t>(routes), 0);
  bandwidth_ = Eigen::VectorXd::Zero(routes);
  prices_ = Eigen::VectorXd::Zero(topology_.num_resources());
  served_ = Eigen::VectorXd::Zero(routes);
  per_flow_service_ = Eigen::VectorXd::Zero(routes);
  load_count_ = Eigen::VectorXd::Zero(routes);
  load_work_ = Eigen::VectorXd::Zero(routes);
}

void SimState::add_initial_flow(int route, double size) {
  require(!started_ && clock_ == 0.0, ErrorCode::InvalidInput,
          "initial flows must be added before the run starts");
  require(route >= 0 && route < topology_.num_routes(), ErrorCode::DimensionMismatch,
          "route index out of range");
  require(size > 0.0 && std::isfinite(size), ErrorCode::InvalidInput,
          "initial sizes must be positive");
  auto& list = flows_[static_cast<std::size_t>(route)];
  FlowRecord rec;
  rec.route = route;
  rec.flow_id = next_flow_id_[static_cast<std::size_t>(route)]++;
  rec.arrival_time = 0.0;
  rec.initial_size = size;
  rec.residual = size;
  list.push_back(rec);
}

void SimState::enable_arrivals(int route, RouteArrivals arrivals, std::uint64_t seed) {
  require(!started_, ErrorCode::InvalidInput, "arrival streams must be installed before start");
  require(route >= 0 && route < topology_.num_routes(), ErrorCode::DimensionMismatch,
          "route index out of range");
  ArrivalGen gen{std::move(arrivals),
                 RngStream(seed, StreamPurpose::Interarrival, static_cast<std::uint64_t>(route)),
                 RngStream(seed, StreamPurpose::DocumentSize, static_cast<std::uint64_t>(route)),
                 0.0};
  gen.next_time = gen.spec.interarrival.sample(gen.inter_rng);
  arrivals_[static_cast<std::size_t>(route)] = std::move(gen);
}

void SimState::start() {
  if (started_) return;
  started_ = true;
  for (auto& list : flows_) std::sort(list.begin(), list.end(), flow_order);
  reallocate();
}

Eigen::VectorXd SimState::counts() const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(topology_.num_routes());
  for (std::size_t i = 0; i < flows_.size(); ++i) {
    double n = 0.0;
    for (const auto& f : flows_[i]) {
      if (f.residual > 0.0) n += 1.0;
    }
    z(static_cast<Eigen::Index>(i)) = n;
  }
  return z;
}

Eigen::VectorXd SimState::workload() const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(topology_.num_routes());
  for (std::size_t i = 0; i < flows_.size(); ++i) {
    double acc = 0.0;
    for (const auto& f : flows_[i]) acc += f.residual;
    w(static_cast<Eigen::Index>(i)) = acc;
  }
  return w;
}

Eigen::VectorXd SimState::unused_capacity() const {
  return topology_.capacities * clock_ - topology_.incidence * served_;
}

void SimState::reallocate() {
  const Eigen::VectorXd z = counts();
  if (z.maxCoeff() <= 0.0) {
    bandwidth_.setZero();
    prices_.setZero();
    return;
  }
  AllocateOptions opts;
  opts.warm_start = prices_;
  try {
    const AllocationResult res = allocate(topology_, policy_, z, opts);
    bandwidth_ = res.bandwidth;
    prices_ = res.prices;
  } catch (const Error& e) {
    fail(ErrorCode::AllocatorFailure, e.what());
  }
}

void SimState::advance(double dt, int snap_route, double snap_residual) {
  if (dt < 0.0) dt = 0.0;
  for (std::size_t i = 0; i < flows_.size(); ++i) {
    auto& list = flows_[i];
    if (list.empty()) continue;
    double active = 0.0;
    for (const auto& f : list) {
      if (f.residual > 0.0) active += 1.0;
    }
    const double lam = bandwidth_(static_cast<Eigen::Index>(i));
    if (active <= 0.0 || lam <= 0.0) continue;
    const double drain = dt > 0.0 ? lam * dt / active : 0.0;
    if (dt > 0.0) {
      served_(static_cast<Eigen::Index>(i)) += lam * dt;
      per_flow_service_(static_cast<Eigen::Index>(i)) += drain;
    }
    if (drain > 0.0) {
      const bool snap = static_cast<int>(i) == snap_route;
      for (auto& f : list) {
        if (f.residual <= 0.0) continue;
        if (snap && f.residual == snap_residual) {
          f.residual = 0.0;  // departure times are closed form; land exactly at zero
        } else {
          f.residual = std::max(f.residual - drain, 0.0);
        }
      }
    }
  }
  clock_ += dt;
}

TraceAggregates SimState::aggregates() const {
  TraceAggregates a;
  a.counts = counts();
  a.workload = workload();
  a.bandwidth = bandwidth_;
  a.served = served_;
  a.per_flow_service = per_flow_service_;
  a.load_count = load_count_;
  a.load_work = load_work_;
  a.unused = unused_capacity();
  return a;
}

SimState init_sim(const NetworkTopology& topology, const AlphaFairPolicy& policy,
                  const std::vector<RouteTraffic>& traffic, double r, std::uint64_t seed) {
  require(static_cast<int>(traffic.size()) == topology.num_routes(), ErrorCode::InvalidScenario,
          "traffic description must cover every route");
  SimState state(topology, policy, r);
  for (int i = 0; i < topology.num_routes(); ++i) {
    const RouteTraffic& rt = traffic[static_cast<std::size_t>(i)];
    require(rt.z0 >= 0.0, ErrorCode::InvalidScenario, "z0 must be nonnegative");
    const auto n0 = static_cast<std::int64_t>(std::floor(r * rt.z0));
    if (n0 > 0) {
      RngStream rng(seed, StreamPurpose::InitialSize, static_cast<std::uint64_t>(i));
      using Kind = InitialConditionRule::Kind;
      const Kind kind = rt.initial_rule.kind;
      std::optional<Distribution> base = rt.document_size_for_initial;
      if (kind == Kind::Explicit) {
        require(rt.initial_rule.explicit_dist.has_value(), ErrorCode::InvalidScenario,
                "explicit initial-size rule needs a distribution");
      } else {
        require(base.has_value(), ErrorCode::InvalidScenario,
                "initial-size rule needs the document-size distribution");
      }
      if (kind == Kind::ExcessLifetime) {
        const ExcessLifetime excess(*base);
        for (std::int64_t k = 0; k < n0; ++k) state.add_initial_flow(i, excess.sample(rng));
      } else if (kind == Kind::SameAsSize) {
        for (std::int64_t k = 0; k < n0; ++k) state.add_initial_flow(i, base->sample(rng));
      } else {
        for (std::int64_t k = 0; k < n0; ++k) {
          state.add_initial_flow(i, rt.initial_rule.explicit_dist->sample(rng));
        }
      }
    }
    if (rt.arrivals) state.enable_arrivals(i, *rt.arrivals, seed);
  }
  state.start();
  return state;
}

namespace {

enum class CandidateKind { Departure = 0, Arrival = 1, Sample = 2, End = 3 };

struct Candidate {
  double time = std::numeric_limits<double>::infinity();
  CandidateKind kind = CandidateKind::End;
  int route = 0;
  std::int64_t flow_id = 0;

  bool operator<(const Candidate& o) const {
    if (time != o.time) return time < o.time;
    if (kind != o.kind) return static_cast<int>(kind) < static_cast<int>(o.kind);
    if (route != o.route) return route < o.route;
    return flow_id < o.flow_id;
  }
};

}  // namespace

SimTrace run_until(SimState& state, double horizon, std::span<const double> sample_times) {
  state.start();
  require(horizon >= state.clock(), ErrorCode::InvalidInput, "horizon precedes the clock");

  std::vector<double> samples(sample_times.begin(), sample_times.end());
  std::sort(samples.begin(), samples.end());
  std::size_t next_sample = 0;
  while (next_sample < samples.size() && samples[next_sample] < state.clock()) ++next_sample;

  SimTrace trace;
  trace.scale = state.r();
  trace.start_time = state.clock();
  trace.initial_counts = state.counts();
  trace.initial_workload = state.workload();
  trace.initial_measures = observe(state);

  while (true) {
    Candidate best;
    best.time = horizon;
    best.kind = CandidateKind::End;

    for (int i = 0; i < state.topology().num_routes(); ++i) {
      const auto& list = state.flows()[static_cast<std::size_t>(i)];
      if (list.empty()) continue;
      const double lam = state.bandwidth()(i);
      if (lam <= 0.0) continue;
      double active = 0.0;
      const FlowRecord* front = nullptr;
      for (const auto& f : list) {
        if (f.residual > 0.0) {
          active += 1.0;
          if (front == nullptr) front = &f;  // list sorted by (residual, id)
        } else if (front == nullptr) {
          // an already-drained flow departs immediately
          front = &f;
        }
      }
      if (front == nullptr) continue;
      Candidate c;
      c.time = front->residual > 0.0 && active > 0.0
                   ? state.clock() + front->residual * active / lam
                   : state.clock();
      c.kind = CandidateKind::Departure;
      c.route = i;
      c.flow_id = front->flow_id;
      if (c < best) best = c;
    }
    for (int i = 0; i < state.topology().num_routes(); ++i) {
      const auto& gen = state.arrivals_[static_cast<std::size_t>(i)];
      if (!gen) continue;
      Candidate c;
      c.time = gen->next_time;
      c.kind = CandidateKind::Arrival;
      c.route = i;
      c.flow_id = state.next_flow_id_[static_cast<std::size_t>(i)];
      if (c < best) best = c;
    }
    if (next_sample < samples.size() && samples[next_sample] <= horizon) {
      Candidate c;
      c.time = samples[next_sample];
      c.kind = CandidateKind::Sample;
      if (c < best) best = c;
    }

    switch (best.kind) {
      case CandidateKind::Departure: {
        auto& list = state.flows_[static_cast<std::size_t>(best.route)];
        const double snap_residual = list.front().residual;
        state.advance(best.time - state.clock(), best.route, snap_residual);
        FlowRecord departed = list.front();
        list.erase(list.begin());
        departed.residual = 0.0;
        departed.departure_time = best.time;
        state.reallocate();
        TraceEvent ev;
        ev.time = best.time;
        ev.kind = EventKind::Departure;
        ev.route = best.route;
        ev.flow_id = departed.flow_id;
        ev.size = departed.initial_size;
        ev.after = state.aggregates();
        trace.events.push_back(std::move(ev));
        break;
      }
      case CandidateKind::Arrival: {
        state.advance(best.time - state.clock(), -1, 0.0);
        auto& gen = *state.arrivals_[static_cast<std::size_t>(best.route)];
        const double size = gen.spec.document_size.sample(gen.size_rng);
        FlowRecord rec;
        rec.route = best.route;
        rec.flow_id = state.next_flow_id_[static_cast<std::size_t>(best.route)]++;
        rec.arrival_time = best.time;
        rec.initial_size = size;
        rec.residual = size;
        auto& list = state.flows_[static_cast<std::size_t>(best.route)];
        list.insert(std::upper_bound(list.begin(), list.end(), rec, flow_order), rec);
        state.load_count_(best.route) += 1.0;
        state.load_work_(best.route) += size;
        gen.next_time = best.time + gen.spec.interarrival.sample(gen.inter_rng);
        state.reallocate();
        TraceEvent ev;
        ev.time = best.time;
        ev.kind = EventKind::Arrival;
        ev.route = best.route;
        ev.flow_id = rec.flow_id;
        ev.size = size;
        ev.after = state.aggregates();
        trace.events.push_back(std::move(ev));
        break;
      }
      case CandidateKind::Sample: {
        state.advance(best.time - state.clock(), -1, 0.0);
        TraceSample s;
        s.time = best.time;
        s.state = state.aggregates();
        s.measures = observe(state);
        trace.samples.push_back(std::move(s));
        ++next_sample;
        break;
      }
      case CandidateKind::End: {
        state.advance(horizon - state.clock(), -1, 0.0);
        trace.end_time = horizon;
        return trace;
      }
    }
  }
}

std::vector<AtomicMeasure> observe(const SimState& state) {
  std::vector<AtomicMeasure> out;
  out.reserve(state.flows().size());
  for (const auto& list : state.flows()) {
    std::vector<AtomicMeasure::Atom> atoms;
    atoms.reserve(list.size());
    for (const auto& f : list) {
      if (f.residual > 0.0) atoms.push_back({f.residual, 1.0});
    }
    out.emplace_back(std::move(atoms));
  }
  return out;
}

namespace {

TraceAggregates scale_aggregates(const TraceAggregates& a, double r) {
  TraceAggregates out = a;
  out.counts /= r;
  out.workload /= r;
  out.served /= r;
  out.load_count /= r;
  out.load_work /= r;
  out.unused /= r;
  // bandwidth and per-flow service are invariant under the scaling
  return out;
}

AtomicMeasure scale_measure(const AtomicMeasure& m, double r) {
  if (r == 1.0 || m.empty()) return m;
  return m.scaled(1.0 / r);
}

}  // namespace

SimTrace fluid_scale(const SimTrace& trace, double r) {
  require(r > 0.0, ErrorCode::InvalidInput, "scaling index must be positive");
  require(!trace.fluid_scaled, ErrorCode::InvalidInput, "trace is already fluid-scaled");
  SimTrace out;
  out.scale = trace.scale;
  out.fluid_scaled = true;
  out.start_time = trace.start_time / r;
  out.end_time = trace.end_time / r;
  out.initial_counts = trace.initial_counts / r;
  out.initial_workload = trace.initial_workload / r;
  out.initial_measures.reserve(trace.initial_measures.size());
  for (const auto& m : trace.initial_measures) out.initial_measures.push_back(scale_measure(m, r));
  out.events.reserve(trace.events.size());
  for (const auto& ev : trace.events) {
    TraceEvent e = ev;
    e.time /= r;
    e.after = scale_aggregates(ev.after, r);
    out.events.push_back(std::move(e));
  }
  out.samples.reserve(trace.samples.size());
  for (const auto& s : trace.samples) {
    TraceSample t;
    t.time = s.time / r;
    t.state = scale_aggregates(s.state, r);
    t.measures.reserve(s.measures.size());
    for (const auto& m : s.measures) t.measures.push_back(scale_measure(m, r));
    out.samples.push_back(std::move(t));
  }
  return out;
}

double workload_balance_check(const SimTrace& trace) {
  double worst = 0.0;
  const auto check = [&](const TraceAggregates& a) {
    const Eigen::VectorXd defect =
        a.workload - trace.initial_workload - a.load_work + a.served;
    worst = std::max(worst, defect.cwiseAbs().maxCoeff());
  };
  for (const auto& ev : trace.events) check(ev.after);
  for (const auto& s : trace.samples) check(s.state);
  return worst;
}

double prelimit_dynamic_check(const SimTrace& trace, std::span<const double> thetas) {
  if (trace.samples.size() < 2) return 0.0;
  const double arrival_mass = trace.fluid_scaled ? 1.0 / trace.scale : 1.0;
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < trace.samples.size(); ++k) {
    const TraceSample& left = trace.samples[k];
    const TraceSample& right = trace.samples[k + 1];
    const auto routes = static_cast<int>(left.measures.size());
    for (int i = 0; i < routes; ++i) {
      const double service = right.state.per_flow_service(i) - left.state.per_flow_service(i);
      for (double theta : thetas) {
        const double lhs = right.measures[static_cast<std::size_t>(i)].integrate_with(
            [theta](double x) { return probe(theta, x); });
        double rhs = left.measures[static_cast<std::size_t>(i)].integrate_with(
            [theta, service](double x) { return probe(theta, x - service); });
        for (const auto& ev : trace.events) {
          if (ev.kind != EventKind::Arrival || ev.route != i) continue;
          if (ev.time <= left.time || ev.time > right.time) continue;
          const double served_since =
              right.state.per_flow_service(i) - ev.after.per_flow_service(i);
          rhs += arrival_mass * probe(theta, ev.size - served_since);
        }
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
  }
  return worst;
}

}  // namespace bwshare
