#pragma once

#include <Eigen/Dense>

#include "bwshare/errors.hpp"

namespace bwshare {

/// Fixed network structure: a 0/1 incidence matrix (resources x routes)
/// and strictly positive per-resource capacities. Immutable after
/// construction and safe for concurrent reads.
struct NetworkTopology {
  Eigen::MatrixXd incidence;   // J x I, entries in {0, 1}
  Eigen::VectorXd capacities;  // J, all > 0

  int num_routes() const { return static_cast<int>(incidence.cols()); }
  int num_resources() const { return static_cast<int>(incidence.rows()); }
};

/// Validates a raw incidence matrix and capacity vector. Every route must
/// use at least one resource and all capacities must be positive finite.
NetworkTopology validate_topology(const Eigen::MatrixXd& incidence,
                                  const Eigen::VectorXd& capacities);

/// Load placed on each resource by per-route intensities: the product of
/// the incidence matrix with `per_route`. Callers compare against the
/// capacity vector for feasibility/criticality tests.
Eigen::VectorXd resource_load(const NetworkTopology& topology,
                              const Eigen::VectorXd& per_route);

}  // namespace bwshare
