#include "bwshare/detail/complementarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace bwshare::detail {

namespace {

double kkt_residual(const Eigen::VectorXd& p, const Eigen::VectorXd& slack) {
  double res = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    res = std::max(res, -slack(j));               // primal feasibility
    res = std::max(res, std::abs(p(j) * slack(j)));  // complementary slackness
  }
  return res;
}

// Active-set Newton on slack_B(p) = 0. Returns the number of inner
// iterations spent; updates p in place if it improves the residual.
int newton_polish(const ComplementarityProblem& problem, Eigen::VectorXd& p, double target,
                  int budget) {
  const Eigen::Index n = p.size();
  Eigen::VectorXd slack = problem.slack(p);
  double res = kkt_residual(p, slack);
  int used = 0;

  std::vector<bool> active(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    active[static_cast<std::size_t>(j)] = p(j) > 1e-12 || slack(j) < -1e-12;
  }

  for (int outer = 0; outer < 30 && used < budget; ++outer) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (active[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    bool stalled = idx.empty();

    for (int inner = 0; inner < 40 && !stalled && used < budget; ++inner, ++used) {
      Eigen::VectorXd r(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) r(static_cast<Eigen::Index>(k)) = slack(idx[k]);
      if (r.lpNorm<Eigen::Infinity>() <= 0.01 * target) break;

      const Eigen::MatrixXd full = problem.slack_jacobian(p);
      Eigen::MatrixXd h(idx.size(), idx.size());
      for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
          h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = full(idx[a], idx[b]);
        }
      }
      const double ridge = 1e-13 * (h.trace() / static_cast<double>(idx.size()) + 1.0);
      h.diagonal().array() += ridge;
      const Eigen::VectorXd delta = h.ldlt().solve(-r);
      if (!delta.allFinite()) {
        stalled = true;
        break;
      }

      // damped step, clamped to the nonnegative orthant
      double t = 1.0;
      bool accepted = false;
      const double before = r.lpNorm<Eigen::Infinity>();
      while (t >= 1e-6) {
        Eigen::VectorXd cand = p;
        for (std::size_t k = 0; k < idx.size(); ++k) {
          cand(idx[k]) = std::max(0.0, p(idx[k]) + t * delta(static_cast<Eigen::Index>(k)));
        }
        const Eigen::VectorXd cand_slack = problem.slack(cand);
        double after = 0.0;
        for (Eigen::Index j : idx) after = std::max(after, std::abs(cand_slack(j)));
        if (after < before || after <= 0.01 * target) {
          p = cand;
          slack = cand_slack;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        stalled = true;
        break;
      }
    }

    // revise the active set: release binding constraints pinned at zero
    // with positive slack, bind violated ones
    bool changed = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::size_t k = static_cast<std::size_t>(j);
      if (active[k] && p(j) <= 0.0 && slack(j) > 1e-12) {
        active[k] = false;
        changed = true;
      } else if (!active[k] && slack(j) < -1e-12) {
        active[k] = true;
        changed = true;
      }
    }
    res = kkt_residual(p, slack);
    if (res <= 0.01 * target || (!changed && stalled)) break;
    if (!changed && !stalled) break;
  }
  return used;
}

}  // namespace

ComplementaritySolution solve_monotone_complementarity(const ComplementarityProblem& problem,
                                                       Eigen::VectorXd p0, double tol,
                                                       int max_iterations) {
  constexpr double kArmijo = 1e-4;
  Eigen::VectorXd p = p0.cwiseMax(0.0);
  double value = problem.potential(p);
  double step = 1.0;

  Eigen::VectorXd best_p = p;
  double best_res = std::numeric_limits<double>::infinity();
  int it = 0;

  while (it < max_iterations) {
    ++it;
    Eigen::VectorXd slack = problem.slack(p);
    double res = kkt_residual(p, slack);
    if (res < best_res) {
      best_res = res;
      best_p = p;
    }
    if (res <= 0.01 * tol) break;

    // polish once the gradient phase is in the basin, and periodically
    if (res < 1e-3 * std::max(1.0, slack.cwiseAbs().maxCoeff()) || it % 50 == 0) {
      it += newton_polish(problem, p, tol, max_iterations - it);
      slack = problem.slack(p);
      res = kkt_residual(p, slack);
      value = problem.potential(p);
      if (res < best_res) {
        best_res = res;
        best_p = p;
      }
      if (res <= 0.01 * tol) break;
    }

    // Armijo backtracking along the projected gradient direction
    bool moved = false;
    while (step >= 1e-18) {
      const Eigen::VectorXd cand = (p - step * slack).cwiseMax(0.0);
      const double cand_value = problem.potential(cand);
      const double decrease = kArmijo * slack.dot(p - cand);
      if (std::isfinite(cand_value) && cand_value <= value - decrease) {
        if ((cand - p).lpNorm<Eigen::Infinity>() > 0.0) moved = true;
        p = cand;
        value = cand_value;
        step = std::min(step * 2.0, 1e12);
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      // gradient projection is stationary; one final polish and stop
      it += newton_polish(problem, p, tol, max_iterations - it);
      const Eigen::VectorXd s2 = problem.slack(p);
      const double r2 = kkt_residual(p, s2);
      if (r2 < best_res) {
        best_res = r2;
        best_p = p;
      }
      break;
    }
  }

  ComplementaritySolution out;
  out.point = best_p;
  out.iterations = it;
  out.residual = best_res;
  out.converged = best_res <= tol;
  return out;
}

}  // namespace bwshare::detail
