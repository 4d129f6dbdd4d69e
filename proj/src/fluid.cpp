#include "bwshare/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "bwshare/probe.hpp"

namespace bwshare {

FluidData make_fluid_data(NetworkTopology topology, AlphaFairPolicy policy,
                          Eigen::VectorXd arrival_rates, std::vector<Distribution> sizes,
                          bool allow_zero_arrivals) {
  validate_policy(topology, policy);
  require(arrival_rates.size() == topology.num_routes(), ErrorCode::DimensionMismatch,
          "arrival-rate vector length must equal the number of routes");
  require(static_cast<int>(sizes.size()) == topology.num_routes(), ErrorCode::DimensionMismatch,
          "need one size distribution per route");
  FluidData data{std::move(topology), std::move(policy), std::move(arrival_rates),
                 std::move(sizes), {}, {}};
  const int routes = data.topology.num_routes();
  data.mu.resize(routes);
  data.rho.resize(routes);
  for (int i = 0; i < routes; ++i) {
    const double nu = data.arrival_rates(i);
    if (allow_zero_arrivals) {
      require(nu >= 0.0, ErrorCode::InvalidInput, "arrival rates must be nonnegative");
    } else {
      require(nu > 0.0, ErrorCode::InvalidInput, "arrival rates must be strictly positive");
    }
    const double mean = data.sizes[static_cast<std::size_t>(i)].mean();
    require(mean > 0.0 && std::isfinite(mean), ErrorCode::InvalidInput,
            "document-size means must be positive finite");
    data.mu(i) = 1.0 / mean;
    data.rho(i) = nu * mean;
  }
  return data;
}

namespace {

using Atom = AtomicMeasure::Atom;

double total_mass(const std::vector<Atom>& atoms) {
  double m = 0.0;
  for (const Atom& a : atoms) m += a.mass;
  return m;
}

double first_moment(const std::vector<Atom>& atoms) {
  double m = 0.0;
  for (const Atom& a : atoms) m += a.mass * a.location;
  return m;
}

// Transport + inflow + cluster merge for one route and one step. `scratch`
// is reused across steps to avoid churn. Atoms stay sorted: a cluster's
// mass-weighted location never exceeds the next incoming location.
void step_route(std::vector<Atom>& atoms, std::vector<Atom>& scratch, double shift,
                const std::vector<Atom>& inflow, double inflow_scale, double merge_divisor) {
  scratch.clear();
  std::size_t a = 0;
  // drop transported atoms that reach zero
  while (a < atoms.size() && atoms[a].location <= shift) ++a;

  std::size_t b = 0;
  double max_loc = 0.0;
  const auto push = [&](Atom atom) {
    scratch.push_back(atom);
    max_loc = std::max(max_loc, atom.location);
  };
  while (a < atoms.size() || b < inflow.size()) {
    const double loc_a = a < atoms.size() ? atoms[a].location - shift
                                          : std::numeric_limits<double>::infinity();
    const double loc_b = b < inflow.size() ? inflow[b].location
                                           : std::numeric_limits<double>::infinity();
    if (loc_a <= loc_b) {
      push({loc_a, atoms[a].mass});
      ++a;
    } else {
      push({loc_b, inflow[b].mass * inflow_scale});
      ++b;
    }
  }

  // cluster pass: adjacent atoms closer than max_location / merge_divisor
  // merge to their mass-weighted mean, preserving mass and first moment
  atoms.clear();
  if (scratch.empty()) return;
  const double threshold = max_loc / merge_divisor;
  for (const Atom& atom : scratch) {
    if (!atoms.empty() && atom.location - atoms.back().location < threshold) {
      Atom& last = atoms.back();
      const double mass = last.mass + atom.mass;
      last.location = (last.location * last.mass + atom.location * atom.mass) / mass;
      last.mass = mass;
    } else {
      atoms.push_back(atom);
    }
  }
}

}  // namespace

std::size_t FluidSolution::nearest_stored(double t) const {
  require(!stored_steps.empty(), ErrorCode::InvalidInput, "no stored measures");
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < stored_steps.size(); ++k) {
    const double gap = std::abs(times[stored_steps[k]] - t);
    if (gap < best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  return best;
}

const std::vector<AtomicMeasure>& FluidSolution::measures_at(double t) const {
  return measures[nearest_stored(t)];
}

FluidSolution solve(const FluidData& data, const std::vector<AtomicMeasure>& initial,
                    double horizon, const FluidOptions& options) {
  const int routes = data.topology.num_routes();
  const int resources = data.topology.num_resources();
  require(static_cast<int>(initial.size()) == routes, ErrorCode::DimensionMismatch,
          "initial condition must have one measure per route");
  require(options.dt > 0.0, ErrorCode::InvalidInput, "dt must be positive");
  require(horizon >= 0.0, ErrorCode::InvalidInput, "horizon must be nonnegative");
  for (const auto& m : initial) {
    require(m.empty() || m.atoms().front().location > 0.0, ErrorCode::InvalidInput,
            "initial measures may not charge zero");
  }

  const auto steps = static_cast<std::size_t>(std::llround(std::ceil(horizon / options.dt - 1e-9)));
  const double dt = options.dt;

  // per-step inflow batches (unit probability mass; scaled on injection)
  std::vector<std::vector<Atom>> inflow(static_cast<std::size_t>(routes));
  for (int i = 0; i < routes; ++i) {
    if (data.arrival_rates(i) > 0.0) {
      inflow[static_cast<std::size_t>(i)] =
          data.sizes[static_cast<std::size_t>(i)].discretize(options.inflow_atoms).atoms();
    }
  }

  // which steps get a measure snapshot
  std::set<std::size_t> stored;
  stored.insert(0);
  stored.insert(steps);
  const std::size_t stride = options.store_stride > 0
                                 ? static_cast<std::size_t>(options.store_stride)
                                 : std::max<std::size_t>(1, steps / 256);
  for (std::size_t k = stride; k < steps; k += stride) stored.insert(k);
  for (double t : options.store_times) {
    const auto k = static_cast<std::size_t>(std::llround(t / dt));
    stored.insert(std::min(k, steps));
  }

  FluidSolution sol;
  sol.dt = dt;
  sol.times.resize(steps + 1);
  sol.counts.resize(static_cast<Eigen::Index>(steps + 1), routes);
  sol.workload.resize(static_cast<Eigen::Index>(steps + 1), routes);
  sol.served.resize(static_cast<Eigen::Index>(steps + 1), routes);
  sol.bandwidth.resize(static_cast<Eigen::Index>(steps + 1), routes);
  sol.per_flow_service.resize(static_cast<Eigen::Index>(steps + 1), routes);
  sol.unused.resize(static_cast<Eigen::Index>(steps + 1), resources);

  std::vector<std::vector<Atom>> state(static_cast<std::size_t>(routes));
  for (int i = 0; i < routes; ++i) {
    state[static_cast<std::size_t>(i)] = initial[static_cast<std::size_t>(i)].atoms();
  }
  std::vector<Atom> scratch;

  Eigen::VectorXd tau = Eigen::VectorXd::Zero(routes);
  Eigen::VectorXd service = Eigen::VectorXd::Zero(routes);
  Eigen::VectorXd prices = Eigen::VectorXd::Zero(resources);

  const auto record = [&](std::size_t k) {
    sol.times[k] = static_cast<double>(k) * dt;
    for (int i = 0; i < routes; ++i) {
      const auto& atoms = state[static_cast<std::size_t>(i)];
      sol.counts(static_cast<Eigen::Index>(k), i) = total_mass(atoms);
      sol.workload(static_cast<Eigen::Index>(k), i) = first_moment(atoms);
      sol.served(static_cast<Eigen::Index>(k), i) = tau(i);
      sol.per_flow_service(static_cast<Eigen::Index>(k), i) = service(i);
    }
    sol.unused.row(static_cast<Eigen::Index>(k)) =
        (data.topology.capacities * sol.times[k] - data.topology.incidence * tau).transpose();
    if (stored.count(k) != 0) {
      sol.stored_steps.push_back(k);
      std::vector<AtomicMeasure> snap;
      snap.reserve(static_cast<std::size_t>(routes));
      for (int i = 0; i < routes; ++i) {
        snap.emplace_back(state[static_cast<std::size_t>(i)]);
      }
      sol.measures.push_back(std::move(snap));
    }
  };

  record(0);
  AllocateOptions alloc_opts;
  for (std::size_t k = 0; k < steps; ++k) {
    Eigen::VectorXd z(routes);
    for (int i = 0; i < routes; ++i) z(i) = total_mass(state[static_cast<std::size_t>(i)]);

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(routes);
    if (z.maxCoeff() > 0.0) {
      alloc_opts.warm_start = prices;
      const AllocationResult res = allocate(data.topology, data.policy, z, alloc_opts);
      lambda = res.bandwidth;
      prices = res.prices;
    }
    sol.bandwidth.row(static_cast<Eigen::Index>(k)) = lambda.transpose();

    for (int i = 0; i < routes; ++i) {
      auto& atoms = state[static_cast<std::size_t>(i)];
      double shift = 0.0;
      if (z(i) > 0.0) {
        shift = lambda(i) / z(i) * dt;
        tau(i) += lambda(i) * dt;
        service(i) += shift;
      } else {
        tau(i) += data.rho(i) * dt;
      }
      const auto& batch = inflow[static_cast<std::size_t>(i)];
      const double scale = data.arrival_rates(i) * dt;
      step_route(atoms, scratch, shift, batch, scale, options.merge_divisor);
      if (atoms.size() > static_cast<std::size_t>(options.atom_budget)) {
        fail(ErrorCode::AtomBudgetExceeded,
             "route " + std::to_string(i) + " exceeded the atom budget");
      }
    }
    record(k + 1);
  }
  sol.bandwidth.row(static_cast<Eigen::Index>(steps)) =
      sol.bandwidth.row(static_cast<Eigen::Index>(steps > 0 ? steps - 1 : 0));
  return sol;
}

double workload_identity_residual(const FluidData& data, const FluidSolution& solution) {
  double worst = 0.0;
  const Eigen::Index n = static_cast<Eigen::Index>(solution.times.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    for (int i = 0; i < data.topology.num_routes(); ++i) {
      const double lhs = solution.workload(k, i) - solution.workload(0, i);
      const double rhs = data.rho(i) * solution.times[static_cast<std::size_t>(k)] -
                         solution.served(k, i);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

double fluid_equation_residual(const FluidData& data, const FluidSolution& solution,
                               std::span<const double> thetas) {
  const int routes = data.topology.num_routes();
  const std::size_t stored = solution.stored_steps.size();
  require(stored >= 1, ErrorCode::InvalidInput, "solution stores no measures");

  // indicator integral on the fine grid, matching the solver's
  // left-endpoint convention
  const std::size_t n = solution.times.size();
  Eigen::MatrixXd indicator(static_cast<Eigen::Index>(n), routes);
  indicator.row(0).setZero();
  for (std::size_t k = 1; k < n; ++k) {
    for (int i = 0; i < routes; ++i) {
      const double on = solution.counts(static_cast<Eigen::Index>(k - 1), i) > 0.0 ? 1.0 : 0.0;
      indicator(static_cast<Eigen::Index>(k), i) =
          indicator(static_cast<Eigen::Index>(k - 1), i) + on * solution.dt;
    }
  }

  double worst = 0.0;
  for (double theta : thetas) {
    for (int i = 0; i < routes; ++i) {
      const double inflow_mean = probe_mean(data.sizes[static_cast<std::size_t>(i)], theta);
      double transport_integral = 0.0;
      double prev_time = 0.0;
      double prev_g = 0.0;
      double base = 0.0;
      for (std::size_t m = 0; m < stored; ++m) {
        const std::size_t k = solution.stored_steps[m];
        const double t = solution.times[k];
        const AtomicMeasure& zeta = solution.measures[m][static_cast<std::size_t>(i)];
        const double z = solution.counts(static_cast<Eigen::Index>(k), i);
        const double lam = solution.bandwidth(static_cast<Eigen::Index>(k), i);
        const double rate = z > 0.0 ? lam / z : 0.0;
        const double g =
            zeta.integrate_with([theta](double x) { return probe_deriv(theta, x); }) * rate;
        const double projected = zeta.integrate_with([theta](double x) { return probe(theta, x); });
        if (m == 0) {
          base = projected;
          prev_time = t;
          prev_g = g;
          continue;
        }
        transport_integral += 0.5 * (g + prev_g) * (t - prev_time);
        prev_time = t;
        prev_g = g;
        const double rhs = base - transport_integral +
                           data.arrival_rates(i) * inflow_mean *
                               indicator(static_cast<Eigen::Index>(k), i);
        worst = std::max(worst, std::abs(projected - rhs));
      }
    }
  }
  return worst;
}

}  // namespace bwshare
