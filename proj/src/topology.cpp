#include "bwshare/topology.hpp"

#include <cmath>
#include <string>

namespace bwshare {

NetworkTopology validate_topology(const Eigen::MatrixXd& incidence,
                                  const Eigen::VectorXd& capacities) {
  const auto rows = incidence.rows();
  const auto cols = incidence.cols();
  require(rows >= 1 && cols >= 1, ErrorCode::InvalidInput,
          "topology needs at least one route and one resource");
  require(capacities.size() == rows, ErrorCode::DimensionMismatch,
          "capacity vector length must equal the number of resources");

  for (Eigen::Index j = 0; j < rows; ++j) {
    for (Eigen::Index i = 0; i < cols; ++i) {
      const double a = incidence(j, i);
      if (a != 0.0 && a != 1.0) {
        fail(ErrorCode::NonBinaryEntry, "incidence(" + std::to_string(j) + "," +
                                            std::to_string(i) + ") = " + std::to_string(a));
      }
    }
  }
  for (Eigen::Index i = 0; i < cols; ++i) {
    if (incidence.col(i).sum() == 0.0) {
      fail(ErrorCode::EmptyRoute, "route " + std::to_string(i) + " uses no resource");
    }
  }
  for (Eigen::Index j = 0; j < rows; ++j) {
    const double c = capacities(j);
    if (!(c > 0.0) || !std::isfinite(c)) {
      fail(ErrorCode::NonpositiveCapacity,
           "capacity of resource " + std::to_string(j) + " must be positive finite");
    }
  }
  return NetworkTopology{incidence, capacities};
}

Eigen::VectorXd resource_load(const NetworkTopology& topology,
                              const Eigen::VectorXd& per_route) {
  require(per_route.size() == topology.num_routes(), ErrorCode::DimensionMismatch,
          "per-route vector length must equal the number of routes");
  return topology.incidence * per_route;
}

}  // namespace bwshare
