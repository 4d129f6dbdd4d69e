#include "bwshare/invariant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bwshare/detail/complementarity.hpp"

namespace bwshare {

namespace {

constexpr double kCriticalTol = 1e-9;
constexpr double kNearCriticalTol = 1e-6;
constexpr double kSumFloor = 1e-300;

}  // namespace

CriticalResources critical_resources(const FluidData& data) {
  CriticalResources out;
  out.load = resource_load(data.topology, data.rho);
  out.invariant_states_exist = true;
  for (int j = 0; j < data.topology.num_resources(); ++j) {
    const double gap = data.topology.capacities(j) - out.load(j);
    if (gap < -kCriticalTol) out.invariant_states_exist = false;
    if (std::abs(gap) <= kCriticalTol) {
      out.indices.push_back(j);
    } else if (std::abs(gap) <= kNearCriticalTol) {
      out.near_critical.push_back(j);
    }
  }
  return out;
}

MembershipResult is_in_P(const FluidData& data, const Eigen::VectorXd& z, double tol) {
  require(z.size() == data.topology.num_routes(), ErrorCode::DimensionMismatch,
          "z length mismatch");
  require((z.array() >= 0.0).all(), ErrorCode::InvalidInput, "z must be nonnegative");
  MembershipResult out;
  if (z.maxCoeff() <= 0.0) {
    out.in_P = true;  // no positive route: the condition is vacuous
    return out;
  }
  Eigen::VectorXd lambda;
  try {
    lambda = allocate(data.topology, data.policy, z).bandwidth;
  } catch (const Error& e) {
    fail(ErrorCode::AllocatorFailure, e.what());
  }
  for (int i = 0; i < z.size(); ++i) {
    if (z(i) > 0.0) {
      out.max_deviation = std::max(out.max_deviation, std::abs(lambda(i) - data.rho(i)));
    }
  }
  out.in_P = out.max_deviation <= tol;
  return out;
}

LiftResult lift_workload(const FluidData& data, const Eigen::VectorXd& w, double tol,
                         int max_iterations) {
  const CriticalResources critical = critical_resources(data);
  require(!critical.indices.empty(), ErrorCode::EmptyCriticalSet,
          "the lifting map is defined only when some resource is critical");
  const auto njs = static_cast<Eigen::Index>(critical.indices.size());
  require(w.size() == njs, ErrorCode::DimensionMismatch,
          "workload vector must have one entry per critical resource");
  require((w.array() >= 0.0).all(), ErrorCode::InvalidInput, "workloads must be nonnegative");

  const int routes = data.topology.num_routes();
  const double alpha = data.policy.alpha;

  // rows of the constraint matrix: a_{ji} = A_{ji} / mu_i over critical j
  Eigen::MatrixXd usage(njs, routes);      // A restricted to critical rows
  Eigen::MatrixXd constraint(njs, routes); // usage with columns divided by mu
  for (Eigen::Index a = 0; a < njs; ++a) {
    for (int i = 0; i < routes; ++i) {
      usage(a, i) = data.topology.incidence(critical.indices[static_cast<std::size_t>(a)], i);
      constraint(a, i) = usage(a, i) / data.mu(i);
    }
  }

  const auto primal = [&](const Eigen::VectorXd& q) -> Eigen::VectorXd {
    const Eigen::VectorXd sums = usage.transpose() * q;
    Eigen::VectorXd z(routes);
    for (int i = 0; i < routes; ++i) {
      if (data.rho(i) <= 0.0 || sums(i) <= 0.0) {
        z(i) = 0.0;
      } else {
        z(i) = data.rho(i) * std::pow(sums(i) / data.policy.kappa(i), 1.0 / alpha);
      }
    }
    return z;
  };

  const auto potential_F = [&](const Eigen::VectorXd& z) {
    double f = 0.0;
    for (int i = 0; i < routes; ++i) {
      const double nu = data.arrival_rates(i);
      if (nu <= 0.0) continue;
      f += nu * data.policy.kappa(i) * std::pow(data.mu(i), alpha - 1.0) *
           std::pow(z(i) / nu, alpha + 1.0) / (alpha + 1.0);
    }
    return f;
  };

  detail::ComplementarityProblem problem;
  problem.potential = [&](const Eigen::VectorXd& q) {
    const Eigen::VectorXd z = primal(q);
    // negative of the dual function of the lifting program
    return -potential_F(z) + q.dot(constraint * z - w);
  };
  problem.slack = [&](const Eigen::VectorXd& q) -> Eigen::VectorXd {
    return constraint * primal(q) - w;
  };
  problem.slack_jacobian = [&](const Eigen::VectorXd& q) -> Eigen::MatrixXd {
    const Eigen::VectorXd sums = (usage.transpose() * q).cwiseMax(kSumFloor);
    const Eigen::VectorXd z = primal(q);
    const Eigen::VectorXd diag = z.array() / (alpha * sums.array());
    return constraint * diag.asDiagonal() * usage.transpose();
  };

  const Eigen::VectorXd q0 = Eigen::VectorXd::Ones(njs);
  const auto solution =
      detail::solve_monotone_complementarity(problem, q0, tol, max_iterations);
  if (!solution.converged) {
    fail(ErrorCode::NonConvergence,
         "lift_workload residual " + std::to_string(solution.residual) + " above tolerance");
  }

  LiftResult out;
  out.z = primal(solution.point);
  out.multipliers = solution.point;
  out.residual = solution.residual;
  out.iterations = solution.iterations;
  return out;
}

InvariantState make_invariant_state(const FluidData& data, const Eigen::VectorXd& z,
                                    int discretize_atoms, double membership_tol) {
  const MembershipResult membership = is_in_P(data, z, membership_tol);
  if (!membership.in_P) {
    fail(ErrorCode::NotInP, "counts deviate from the traffic intensities by " +
                                std::to_string(membership.max_deviation));
  }
  InvariantState out;
  out.z = z;
  out.measures.reserve(static_cast<std::size_t>(z.size()));
  for (int i = 0; i < z.size(); ++i) {
    if (z(i) > 0.0) {
      const ExcessLifetime excess(data.sizes[static_cast<std::size_t>(i)]);
      out.measures.push_back(excess.discretize(discretize_atoms).scaled(z(i)));
    } else {
      out.measures.emplace_back();
    }
  }
  const CriticalResources critical = critical_resources(data);
  if (!critical.indices.empty()) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(critical.indices.size()));
    for (std::size_t a = 0; a < critical.indices.size(); ++a) {
      double acc = 0.0;
      for (int i = 0; i < z.size(); ++i) {
        acc += data.topology.incidence(critical.indices[a], i) * z(i) / data.mu(i);
      }
      w(static_cast<Eigen::Index>(a)) = acc;
    }
    out.multipliers = lift_workload(data, w).multipliers;
  }
  return out;
}

InvariantCheck is_invariant_state(const FluidData& data, std::span<const AtomicMeasure> xi,
                                  double tol, int discretize_atoms) {
  require(static_cast<int>(xi.size()) == data.topology.num_routes(),
          ErrorCode::DimensionMismatch, "need one measure per route");
  InvariantCheck out;
  out.shape_tol = tol > 0.0 ? tol : 3.0 / std::sqrt(static_cast<double>(discretize_atoms));

  const CriticalResources critical = critical_resources(data);
  out.load_feasible = critical.invariant_states_exist;

  Eigen::VectorXd z(data.topology.num_routes());
  for (int i = 0; i < z.size(); ++i) z(i) = xi[static_cast<std::size_t>(i)].total_mass();
  out.membership = is_in_P(data, z);

  out.shape_distances.resize(xi.size(), 0.0);
  bool shapes_ok = true;
  for (int i = 0; i < z.size(); ++i) {
    const auto& measure = xi[static_cast<std::size_t>(i)];
    double d;
    if (z(i) > 0.0) {
      const ExcessLifetime excess(data.sizes[static_cast<std::size_t>(i)]);
      d = levy_distance(measure, excess.discretize(discretize_atoms).scaled(z(i)));
    } else {
      d = measure.total_mass();
    }
    out.shape_distances[static_cast<std::size_t>(i)] = d;
    if (d > out.shape_tol) shapes_ok = false;
  }
  out.ok = out.load_feasible && out.membership.in_P && shapes_ok;
  return out;
}

}  // namespace bwshare
