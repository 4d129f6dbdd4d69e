#include "bwshare/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bwshare/detail/complementarity.hpp"

namespace bwshare {

namespace {

constexpr double kPriceSumFloor = 1e-300;
constexpr double kBandwidthCap = 1e15;

struct ReducedProgram {
  std::vector<Eigen::Index> routes;     // routes with z_i > 0
  std::vector<Eigen::Index> resources;  // resources used by some positive route
  Eigen::MatrixXd incidence;            // |resources| x |routes|
  Eigen::VectorXd capacities;           // |resources|
  Eigen::VectorXd z, kappa;             // per reduced route
  double alpha = 1.0;
};

ReducedProgram reduce(const NetworkTopology& topology, const AlphaFairPolicy& policy,
                      const Eigen::VectorXd& z) {
  ReducedProgram rp;
  rp.alpha = policy.alpha;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z(i) > 0.0) rp.routes.push_back(i);
  }
  for (Eigen::Index j = 0; j < topology.num_resources(); ++j) {
    for (Eigen::Index i : rp.routes) {
      if (topology.incidence(j, i) != 0.0) {
        rp.resources.push_back(j);
        break;
      }
    }
  }
  const auto nr = static_cast<Eigen::Index>(rp.routes.size());
  const auto nj = static_cast<Eigen::Index>(rp.resources.size());
  rp.incidence.resize(nj, nr);
  rp.capacities.resize(nj);
  rp.z.resize(nr);
  rp.kappa.resize(nr);
  for (Eigen::Index a = 0; a < nj; ++a) {
    rp.capacities(a) = topology.capacities(rp.resources[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < nr; ++b) {
      rp.incidence(a, b) = topology.incidence(rp.resources[static_cast<std::size_t>(a)],
                                              rp.routes[static_cast<std::size_t>(b)]);
    }
  }
  for (Eigen::Index b = 0; b < nr; ++b) {
    rp.z(b) = z(rp.routes[static_cast<std::size_t>(b)]);
    rp.kappa(b) = policy.kappa(rp.routes[static_cast<std::size_t>(b)]);
  }
  return rp;
}

// Primal recovery from reduced prices, with overflow clamps that only act
// far from the optimum.
Eigen::VectorXd recover_bandwidth(const ReducedProgram& rp, const Eigen::VectorXd& p) {
  const Eigen::VectorXd sums = (rp.incidence.transpose() * p).cwiseMax(kPriceSumFloor);
  Eigen::VectorXd lambda(rp.z.size());
  for (Eigen::Index i = 0; i < rp.z.size(); ++i) {
    const double v = rp.z(i) * std::pow(rp.kappa(i) / sums(i), 1.0 / rp.alpha);
    lambda(i) = std::isfinite(v) ? std::min(v, kBandwidthCap) : kBandwidthCap;
  }
  return lambda;
}

// Dual of the allocation program. With s_i = (A^T p)_i, each positive
// route contributes
//   alpha != 1:  kappa^{1/alpha} z s^{(alpha-1)/alpha} * alpha/(1-alpha)
//   alpha == 1:  kappa z (log(kappa z) - log s - 1)
// and the constraint term p . C is added.
double dual_value(const ReducedProgram& rp, const Eigen::VectorXd& p) {
  const Eigen::VectorXd sums = rp.incidence.transpose() * p;
  double value = p.dot(rp.capacities);
  for (Eigen::Index i = 0; i < rp.z.size(); ++i) {
    const double s = sums(i);
    if (s <= 0.0) {
      if (rp.alpha <= 1.0) return std::numeric_limits<double>::infinity();
      continue;  // contribution vanishes as s -> 0 for alpha > 1
    }
    if (rp.alpha == 1.0) {
      value += rp.kappa(i) * rp.z(i) * (std::log(rp.kappa(i) * rp.z(i)) - std::log(s) - 1.0);
    } else {
      value += std::pow(rp.kappa(i), 1.0 / rp.alpha) * rp.z(i) *
               std::pow(s, (rp.alpha - 1.0) / rp.alpha) * rp.alpha / (1.0 - rp.alpha);
    }
  }
  return value;
}

double spec_kkt_residual(const NetworkTopology& topology, const AlphaFairPolicy& policy,
                         const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                         const Eigen::VectorXd& prices) {
  const Eigen::VectorXd sums = topology.incidence.transpose() * prices;
  const Eigen::VectorXd load = topology.incidence * lambda;
  double res = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z(i) > 0.0 && sums(i) > 0.0) {
      const double target = z(i) * std::pow(policy.kappa(i) / sums(i), 1.0 / policy.alpha);
      res = std::max(res, std::abs(lambda(i) - target));
    } else if (z(i) > 0.0) {
      res = std::numeric_limits<double>::infinity();
    }
  }
  for (Eigen::Index j = 0; j < topology.num_resources(); ++j) {
    res = std::max(res, std::abs(prices(j) * (topology.capacities(j) - load(j))));
    res = std::max(res, load(j) - topology.capacities(j));
    res = std::max(res, -prices(j));
  }
  return std::max(res, 0.0);
}

// Exact allocation when exactly one route has work: the objective is
// strictly increasing in that route's bandwidth, so the tightest used
// resource binds.
AllocationResult single_route_exact(const NetworkTopology& topology,
                                    const AlphaFairPolicy& policy, const Eigen::VectorXd& z,
                                    Eigen::Index route) {
  double cap = std::numeric_limits<double>::infinity();
  Eigen::Index argmin = -1;
  for (Eigen::Index j = 0; j < topology.num_resources(); ++j) {
    if (topology.incidence(j, route) != 0.0 && topology.capacities(j) < cap) {
      cap = topology.capacities(j);
      argmin = j;
    }
  }
  AllocationResult out;
  out.bandwidth = Eigen::VectorXd::Zero(z.size());
  out.bandwidth(route) = cap;
  out.prices = Eigen::VectorXd::Zero(topology.num_resources());
  out.prices(argmin) = policy.kappa(route) * std::pow(z(route) / cap, policy.alpha);
  out.iterations = 0;
  out.kkt_residual = spec_kkt_residual(topology, policy, z, out.bandwidth, out.prices);
  return out;
}

}  // namespace

void validate_policy(const NetworkTopology& topology, const AlphaFairPolicy& policy) {
  require(policy.alpha > 0.0 && std::isfinite(policy.alpha), ErrorCode::InvalidInput,
          "alpha must be positive finite");
  require(policy.kappa.size() == topology.num_routes(), ErrorCode::DimensionMismatch,
          "kappa length must equal the number of routes");
  require((policy.kappa.array() > 0.0).all(), ErrorCode::InvalidInput,
          "all route weights must be positive");
}

AllocationResult allocate(const NetworkTopology& topology, const AlphaFairPolicy& policy,
                          const Eigen::VectorXd& z, const AllocateOptions& options) {
  validate_policy(topology, policy);
  require(z.size() == topology.num_routes(), ErrorCode::DimensionMismatch,
          "z length must equal the number of routes");
  require((z.array() >= 0.0).all(), ErrorCode::InvalidInput, "z must be nonnegative");

  AllocationResult out;
  out.bandwidth = Eigen::VectorXd::Zero(z.size());
  out.prices = Eigen::VectorXd::Zero(topology.num_resources());
  const ReducedProgram rp = reduce(topology, policy, z);
  if (rp.routes.empty()) return out;
  if (rp.routes.size() == 1) return single_route_exact(topology, policy, z, rp.routes[0]);

  detail::ComplementarityProblem problem;
  problem.potential = [&rp](const Eigen::VectorXd& p) { return dual_value(rp, p); };
  problem.slack = [&rp](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    return rp.capacities - rp.incidence * recover_bandwidth(rp, p);
  };
  problem.slack_jacobian = [&rp](const Eigen::VectorXd& p) -> Eigen::MatrixXd {
    const Eigen::VectorXd sums = (rp.incidence.transpose() * p).cwiseMax(kPriceSumFloor);
    const Eigen::VectorXd lambda = recover_bandwidth(rp, p);
    const Eigen::VectorXd diag = lambda.array() / (rp.alpha * sums.array());
    return rp.incidence * diag.asDiagonal() * rp.incidence.transpose();
  };

  Eigen::VectorXd p0 = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(rp.resources.size()));
  if (options.warm_start && options.warm_start->size() == topology.num_resources()) {
    for (std::size_t a = 0; a < rp.resources.size(); ++a) {
      p0(static_cast<Eigen::Index>(a)) = std::max((*options.warm_start)(rp.resources[a]), 0.0);
    }
    if (p0.maxCoeff() <= 0.0) p0.setOnes();
  }

  const auto solution = detail::solve_monotone_complementarity(problem, p0, options.tolerance,
                                                               options.max_iterations);

  Eigen::VectorXd lambda_reduced = recover_bandwidth(rp, solution.point);
  // pull any residual infeasibility back inside the capacity region
  const Eigen::VectorXd load = rp.incidence * lambda_reduced;
  double scale = 1.0;
  for (Eigen::Index a = 0; a < load.size(); ++a) {
    if (load(a) > rp.capacities(a)) scale = std::min(scale, rp.capacities(a) / load(a));
  }
  lambda_reduced *= scale;

  for (std::size_t b = 0; b < rp.routes.size(); ++b) {
    out.bandwidth(rp.routes[b]) = lambda_reduced(static_cast<Eigen::Index>(b));
  }
  for (std::size_t a = 0; a < rp.resources.size(); ++a) {
    out.prices(rp.resources[a]) = solution.point(static_cast<Eigen::Index>(a));
  }
  out.iterations = solution.iterations;
  out.kkt_residual = spec_kkt_residual(topology, policy, z, out.bandwidth, out.prices);
  if (out.kkt_residual > options.tolerance) {
    fail(ErrorCode::NonConvergence,
         "allocation residual " + std::to_string(out.kkt_residual) + " above tolerance");
  }
  return out;
}

double objective_value(const AlphaFairPolicy& policy, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& lambda) {
  require(z.size() == lambda.size() && z.size() == policy.kappa.size(),
          ErrorCode::DimensionMismatch, "z, lambda, kappa must have equal length");
  const double alpha = policy.alpha;
  double value = 0.0;
  bool any_positive = false;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z(i) <= 0.0) continue;
    any_positive = true;
    const double l = lambda(i);
    if (l <= 0.0) {
      if (alpha >= 1.0) return -std::numeric_limits<double>::infinity();
      continue;  // lambda^{1-alpha} -> 0 for alpha < 1
    }
    if (alpha == 1.0) {
      value += policy.kappa(i) * z(i) * std::log(l);
    } else {
      value += policy.kappa(i) * std::pow(z(i), alpha) * std::pow(l, 1.0 - alpha) / (1.0 - alpha);
    }
  }
  return any_positive ? value : 0.0;
}

Eigen::VectorXd grid_oracle(const NetworkTopology& topology, const AlphaFairPolicy& policy,
                            const Eigen::VectorXd& z, double step) {
  validate_policy(topology, policy);
  require(topology.num_routes() <= 3, ErrorCode::TooManyRoutes,
          "grid_oracle supports at most three routes");
  require(step > 0.0, ErrorCode::InvalidInput, "step must be positive");
  require(z.size() == topology.num_routes(), ErrorCode::DimensionMismatch, "z length mismatch");

  std::vector<Eigen::Index> free_routes;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z(i) > 0.0) free_routes.push_back(i);
  }
  Eigen::VectorXd best = Eigen::VectorXd::Zero(z.size());
  if (free_routes.empty()) return best;

  const auto ticks_below = [step](double limit) {
    return static_cast<long>(std::floor(limit / step + 1e-9));
  };
  // per-route upper bound from the capacities of the resources it uses
  const auto route_cap = [&](Eigen::Index i) {
    double cap = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < topology.num_resources(); ++j) {
      if (topology.incidence(j, i) != 0.0) cap = std::min(cap, topology.capacities(j));
    }
    return cap;
  };

  const Eigen::Index last = free_routes.back();
  std::vector<Eigen::Index> outer(free_routes.begin(), free_routes.end() - 1);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(z.size());
  double best_value = -std::numeric_limits<double>::infinity();
  bool found = false;

  std::vector<long> counter(outer.size(), 0);
  std::vector<long> limits(outer.size());
  for (std::size_t d = 0; d < outer.size(); ++d) limits[d] = ticks_below(route_cap(outer[d]));

  while (true) {
    lambda.setZero();
    for (std::size_t d = 0; d < outer.size(); ++d) {
      lambda(outer[d]) = static_cast<double>(counter[d]) * step;
    }
    // residual capacity determines the maximal feasible tick of the last route
    bool feasible = true;
    double max_last = route_cap(last);
    for (Eigen::Index j = 0; j < topology.num_resources() && feasible; ++j) {
      double used = 0.0;
      for (std::size_t d = 0; d < outer.size(); ++d) {
        used += topology.incidence(j, outer[d]) * lambda(outer[d]);
      }
      const double slackj = topology.capacities(j) - used;
      if (slackj < -1e-12) feasible = false;
      if (topology.incidence(j, last) != 0.0) max_last = std::min(max_last, slackj);
    }
    if (feasible) {
      const long t = std::max<long>(ticks_below(std::max(max_last, 0.0)), 0);
      lambda(last) = static_cast<double>(t) * step;
      const double value = objective_value(policy, z, lambda);
      if (!found || value > best_value) {
        best_value = value;
        best = lambda;
        found = true;
      }
    }
    // odometer increment over the outer dimensions
    std::size_t d = 0;
    for (; d < outer.size(); ++d) {
      if (++counter[d] <= limits[d]) break;
      counter[d] = 0;
    }
    if (d == outer.size()) break;
    if (outer.empty()) break;
  }
  return best;
}

}  // namespace bwshare
