#pragma once

#include <array>
#include <cmath>

#include "bwshare/distribution.hpp"

namespace bwshare {

/// Smooth probe functions f_theta(x) = 1 - (1 + theta x) e^{-theta x},
/// extended by zero on (-inf, 0]. They are bounded with bounded derivative
/// and vanish to second order at the origin (f(0) = f'(0) = 0), which
/// makes them suitable for probing measures on the half-line without
/// sensitivity to mass near zero.
inline double probe(double theta, double x) {
  if (x <= 0.0) return 0.0;
  return 1.0 - (1.0 + theta * x) * std::exp(-theta * x);
}

/// Derivative theta^2 x e^{-theta x} of the probe (zero on x <= 0).
inline double probe_deriv(double theta, double x) {
  if (x <= 0.0) return 0.0;
  return theta * theta * x * std::exp(-theta * x);
}

/// Closed-form expectation of the probe under a distribution, via the
/// Laplace-transform moments: E f_theta(V) = 1 - E e^{-tV} - t E[V e^{-tV}].
inline double probe_mean(const Distribution& dist, double theta) {
  return 1.0 - dist.laplace(theta) - theta * dist.laplace_x(theta);
}

/// The standard probe battery used by residual verifiers.
inline constexpr std::array<double, 4> kProbeThetas{0.5, 1.0, 2.0, 4.0};

}  // namespace bwshare
