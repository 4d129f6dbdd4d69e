#pragma once

// Test-only oracles. Each one recomputes a quantity by an independent
// route (small-step integration, brute-force search, quadrature) so the
// production implementations can be checked against frozen expectations.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "bwshare/atomic_measure.hpp"
#include "bwshare/numeric.hpp"
#include "bwshare/rng.hpp"

namespace testsupport {

/// Departure times of an egalitarian processor-sharing queue with fixed
/// capacity, by brute-force small-step integration. Returned in
/// completion order.
inline std::vector<double> euler_departures(double capacity, std::vector<double> residuals,
                                            double dt) {
  std::vector<double> out;
  double clock = 0.0;
  std::vector<bool> active(residuals.size(), true);
  std::size_t remaining = residuals.size();
  while (remaining > 0) {
    const double share = capacity / static_cast<double>(remaining) * dt;
    clock += dt;
    for (std::size_t k = 0; k < residuals.size(); ++k) {
      if (!active[k]) continue;
      residuals[k] -= share;
      if (residuals[k] <= 0.0) {
        active[k] = false;
        --remaining;
        out.push_back(clock);
      }
    }
  }
  return out;
}

/// Projection onto the intersection of {z >= 0} and halfspaces
/// {rows.row(a) . z >= bounds(a)} by Dykstra's alternating method.
inline Eigen::VectorXd dykstra_project(Eigen::VectorXd z, const Eigen::MatrixXd& rows,
                                       const Eigen::VectorXd& bounds, int sweeps = 400) {
  const Eigen::Index m = rows.rows();
  std::vector<Eigen::VectorXd> corrections(static_cast<std::size_t>(m) + 1,
                                           Eigen::VectorXd::Zero(z.size()));
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (Eigen::Index a = 0; a <= m; ++a) {
      const Eigen::VectorXd y = z + corrections[static_cast<std::size_t>(a)];
      Eigen::VectorXd projected;
      if (a < m) {
        const Eigen::VectorXd g = rows.row(a).transpose();
        const double defect = bounds(a) - g.dot(y);
        projected = defect > 0.0 ? Eigen::VectorXd(y + g * (defect / g.squaredNorm()))
                                 : y;
      } else {
        projected = y.cwiseMax(0.0);
      }
      corrections[static_cast<std::size_t>(a)] = y - projected;
      z = projected;
    }
  }
  return z;
}

/// Brute-force minimizer of a smooth convex function over
/// {z >= 0 : rows z >= bounds} by projected gradient with Dykstra
/// projections. Step size from the supplied curvature bound.
template <typename F, typename Grad>
Eigen::VectorXd projected_gradient_minimize(F&&, Grad&& grad, Eigen::VectorXd z,
                                            const Eigen::MatrixXd& rows,
                                            const Eigen::VectorXd& bounds, double lipschitz,
                                            int iterations = 20000) {
  z = dykstra_project(z, rows, bounds);
  const double step = 1.0 / lipschitz;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd next = dykstra_project(z - step * grad(z), rows, bounds, 60);
    if ((next - z).lpNorm<Eigen::Infinity>() < 1e-13) return next;
    z = next;
  }
  return z;
}

/// Random atomic measure with up to `max_atoms` atoms. Locations may
/// include exact zeros.
inline bwshare::AtomicMeasure random_measure(bwshare::RngStream& rng, int max_atoms,
                                             double max_location = 3.0) {
  const int n = 1 + static_cast<int>(rng.uniform01() * max_atoms);
  std::vector<bwshare::AtomicMeasure::Atom> atoms;
  for (int k = 0; k < n; ++k) {
    double loc = rng.uniform01() * max_location;
    if (rng.uniform01() < 0.1) loc = 0.0;
    atoms.push_back({loc, 0.1 + 1.9 * rng.uniform01()});
  }
  return bwshare::AtomicMeasure(std::move(atoms));
}

/// Exhaustive-ish adversarial check of the Prohorov condition using
/// random finite unions of closed intervals as the test sets. Returns the
/// worst violation of xi(B) <= zeta(B^eps) + eps over the sampled sets.
inline double prohorov_interval_violation(const bwshare::AtomicMeasure& xi,
                                          const bwshare::AtomicMeasure& zeta, double eps,
                                          bwshare::RngStream& rng, int trials = 2000) {
  const double hi = std::max(xi.max_location(), zeta.max_location()) + 1.0;
  const auto measure_of = [](const bwshare::AtomicMeasure& m,
                             const std::vector<std::pair<double, double>>& intervals,
                             double widen) {
    double acc = 0.0;
    for (const auto& atom : m.atoms()) {
      for (const auto& [a, b] : intervals) {
        if (atom.location > a - widen && atom.location < b + widen) {
          acc += atom.mass;
          break;
        }
      }
    }
    return acc;
  };
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const int pieces = 1 + static_cast<int>(rng.uniform01() * 3.0);
    std::vector<std::pair<double, double>> intervals;
    for (int p = 0; p < pieces; ++p) {
      double a = rng.uniform01() * hi;
      double b = a + rng.uniform01() * hi * 0.5;
      intervals.emplace_back(a, b);
    }
    // closed B: no widening; B^eps: open eps-enlargement
    const double forward = measure_of(xi, intervals, 0.0) - measure_of(zeta, intervals, eps) - eps;
    const double backward = measure_of(zeta, intervals, 0.0) - measure_of(xi, intervals, eps) - eps;
    worst = std::max({worst, forward, backward});
  }
  return worst;
}

/// Quadrature over [a, b] split at the supplied breakpoints.
template <typename F>
double integrate_piecewise(F&& f, double a, double b, std::vector<double> breaks, double tol) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = std::max(a, breaks[k]);
    const double hi = std::min(b, breaks[k + 1]);
    if (hi > lo) acc += bwshare::integrate_adaptive(f, lo, hi, tol);
  }
  return acc;
}

}  // namespace testsupport
