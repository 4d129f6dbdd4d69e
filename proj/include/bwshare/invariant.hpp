#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "bwshare/fluid.hpp"

namespace bwshare {

/// The set of exactly-critical resources and the invariant-state
/// existence verdict. Criticality is a knife-edge property: membership
/// uses a 1e-9 tolerance, and resources within 1e-6 (but not 1e-9) of
/// critical are reported as warnings since the lifting map is not robust
/// there.
struct CriticalResources {
  std::vector<int> indices;          // J_*
  bool invariant_states_exist = false;  // load <= capacity everywhere
  Eigen::VectorXd load;              // A rho
  std::vector<int> near_critical;    // warning set
};

CriticalResources critical_resources(const FluidData& data);

struct MembershipResult {
  bool in_P = false;
  double max_deviation = 0.0;  // max over positive routes of |Lambda_i(z) - rho_i|
};

/// Membership of z in the invariant count set: the allocation equals the
/// traffic intensity on every positive route. z = 0 belongs vacuously.
MembershipResult is_in_P(const FluidData& data, const Eigen::VectorXd& z, double tol = 1e-6);

struct LiftResult {
  Eigen::VectorXd z;            // full route vector
  Eigen::VectorXd multipliers;  // q, one per critical resource (in index order)
  double residual = 0.0;
  int iterations = 0;
};

/// The workload-to-state lifting map: the unique minimizer of the strictly
/// convex potential
///   F(z) = 1/(alpha+1) sum_i nu_i kappa_i mu_i^{alpha-1} (z_i/nu_i)^{alpha+1}
/// over {z >= 0 : sum_i A_ji z_i / mu_i >= w_j for every critical j}.
/// Solved by dual ascent on the multipliers q with the closed-form primal
/// z_i = rho_i ((1/kappa_i) sum_j q_j A_ji)^{1/alpha}, sharing the
/// allocator's projected-descent machinery.
LiftResult lift_workload(const FluidData& data, const Eigen::VectorXd& w, double tol = 1e-8,
                         int max_iterations = 100000);

struct InvariantState {
  Eigen::VectorXd z;
  std::vector<AtomicMeasure> measures;  // xi_i = z_i * (excess lifetime of theta_i)
  Eigen::VectorXd multipliers;          // empty when no resource is critical
};

/// Materializes the invariant state with counts z: per route, z_i times
/// the discretized excess-lifetime distribution. Requires z in P.
InvariantState make_invariant_state(const FluidData& data, const Eigen::VectorXd& z,
                                    int discretize_atoms = 512, double membership_tol = 1e-6);

struct InvariantCheck {
  bool ok = false;
  bool load_feasible = false;           // A rho <= C
  MembershipResult membership;
  std::vector<double> shape_distances;  // per-route Levy distance to z_i theta_i^e
  double shape_tol = 0.0;
};

/// Checks whether a vector of measures is an invariant state: the load
/// condition, membership of the counts in P, and per-route shape match
/// against the discretized excess-lifetime profile in Levy distance. A
/// nonpositive tol selects the default 3/sqrt(discretize_atoms), which
/// absorbs discretization error.
InvariantCheck is_invariant_state(const FluidData& data, std::span<const AtomicMeasure> xi,
                                  double tol = 0.0, int discretize_atoms = 512);

}  // namespace bwshare
