#pragma once

#include <Eigen/Dense>
#include <functional>

namespace bwshare::detail {

/// A monotone complementarity problem in nonnegative multipliers:
/// find p >= 0 with slack(p) >= 0 and p_j * slack_j(p) = 0, where slack is
/// the gradient of a convex potential (so the problem is the KKT system of
/// a projected convex minimization over the nonnegative orthant).
struct ComplementarityProblem {
  std::function<double(const Eigen::VectorXd&)> potential;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> slack;
  /// Jacobian of the slack map (positive semidefinite).
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> slack_jacobian;
};

struct ComplementaritySolution {
  Eigen::VectorXd point;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Projected gradient descent on the potential with Armijo backtracking
/// and an adaptive step, interleaved with an active-set Newton polish on
/// the binding constraints. The polish solves slack_B(p) = 0 on the
/// current active set to drive the residual well below `tol`.
ComplementaritySolution solve_monotone_complementarity(const ComplementarityProblem& problem,
                                                       Eigen::VectorXd p0, double tol,
                                                       int max_iterations);

}  // namespace bwshare::detail
