#pragma once

#include <Eigen/Dense>
#include <optional>

#include "bwshare/topology.hpp"

namespace bwshare {

/// Parameters of a weighted alpha-fair bandwidth-sharing policy.
struct AlphaFairPolicy {
  double alpha;            // > 0
  Eigen::VectorXd kappa;   // route weights, all > 0

  static AlphaFairPolicy uniform(int num_routes, double alpha) {
    return AlphaFairPolicy{alpha, Eigen::VectorXd::Ones(num_routes)};
  }
};

void validate_policy(const NetworkTopology& topology, const AlphaFairPolicy& policy);

/// A certified allocation: bandwidth per route, resource prices (Lagrange
/// multipliers of the capacity constraints), and the composite KKT
/// residual of the returned pair.
struct AllocationResult {
  Eigen::VectorXd bandwidth;  // lambda, zero exactly where z is zero
  Eigen::VectorXd prices;     // p >= 0 per resource
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct AllocateOptions {
  double tolerance = 1e-8;
  int max_iterations = 100000;
  /// Optional warm start for the resource prices.
  std::optional<Eigen::VectorXd> warm_start;
};

/// Solves the weighted alpha-fair allocation program: maximize the
/// policy's concave objective over {lambda >= 0 : A lambda <= C,
/// lambda_i = 0 when z_i = 0}. Dual ascent on resource prices with primal
/// recovery lambda_i = z_i (kappa_i / (A^T p)_i)^{1/alpha}, Armijo
/// backtracking, and an active-set Newton polish. The composite KKT
/// residual of the result is certified <= options.tolerance.
AllocationResult allocate(const NetworkTopology& topology, const AlphaFairPolicy& policy,
                          const Eigen::VectorXd& z, const AllocateOptions& options = {});

/// Objective of the allocation program, including the conventions: the
/// value is 0 when no route has work, and -inf when alpha >= 1 and some
/// positive route receives zero bandwidth.
double objective_value(const AlphaFairPolicy& policy, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& lambda);

/// Brute-force lattice maximizer over the feasible set, for networks with
/// at most three routes. The objective increases in every coordinate, so
/// the last free coordinate is taken at its maximal feasible lattice
/// value; the rest are enumerated exhaustively. Test oracle only.
Eigen::VectorXd grid_oracle(const NetworkTopology& topology, const AlphaFairPolicy& policy,
                            const Eigen::VectorXd& z, double step);

}  // namespace bwshare
