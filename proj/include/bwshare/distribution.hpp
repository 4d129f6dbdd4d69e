#pragma once

#include <variant>
#include <vector>

#include "bwshare/atomic_measure.hpp"
#include "bwshare/rng.hpp"

namespace bwshare {

struct ExponentialSpec {
  double rate;  // > 0
};

struct DeterministicSpec {
  double value;  // > 0
};

struct UniformIntervalSpec {
  double lower;  // 0 < lower < upper
  double upper;
};

struct HyperExponentialSpec {
  std::vector<double> weights;  // nonnegative, sum to 1
  std::vector<double> rates;    // > 0, same length
};

struct EmpiricalSpec {
  AtomicMeasure atoms;  // probability measure, no atom at 0
};

/// A parametric document-size or interarrival distribution on (0, inf).
/// Mean is finite and positive and no mass sits at 0. All accessors are
/// closed-form per variant; sampling is inverse-CDF on a caller-owned
/// stream.
class Distribution {
 public:
  using Spec = std::variant<ExponentialSpec, DeterministicSpec, UniformIntervalSpec,
                            HyperExponentialSpec, EmpiricalSpec>;

  static Distribution exponential(double rate);
  static Distribution deterministic(double value);
  static Distribution uniform_interval(double lower, double upper);
  static Distribution hyper_exponential(std::vector<double> weights, std::vector<double> rates);
  static Distribution empirical(AtomicMeasure atoms);

  double mean() const;
  double second_moment() const;
  double tail(double x) const;  // P(V > x)
  double cdf(double x) const { return 1.0 - tail(x); }

  /// Inverse CDF at u in [0, 1).
  double quantile(double u) const;
  double sample(RngStream& rng) const;

  /// Partial first moment over (a, b].
  double partial_mean(double a, double b) const;

  /// Laplace-transform moments E[e^{-theta V}] and E[V e^{-theta V}].
  double laplace(double theta) const;
  double laplace_x(double theta) const;

  /// Equal-probability-cell discretization: n cells of mass 1/n with the
  /// atom of each cell placed at the cell's conditional mean, so the total
  /// mean is preserved exactly. Distributions that are already atomic are
  /// returned exactly.
  AtomicMeasure discretize(int n) const;

  const Spec& spec() const { return spec_; }

 private:
  explicit Distribution(Spec spec);
  Spec spec_;
};

/// The excess-lifetime (stationary residual) distribution of a base
/// distribution: absolutely continuous with density
///   p^e(x) = tail(x) / mean.
class ExcessLifetime {
 public:
  explicit ExcessLifetime(Distribution base);

  double density(double x) const;
  double cdf(double x) const;
  double quantile(double u) const;
  double sample(RngStream& rng) const;
  double mean() const;  // = E[V^2] / (2 E[V]) of the base

  /// Equal-probability-cell discretization with conditional-mean atom
  /// placement, as for Distribution::discretize.
  AtomicMeasure discretize(int n) const;

  /// Locations where the density has kinks; quadrature in verification
  /// code splits at these.
  std::vector<double> breakpoints() const;

  const Distribution& base() const { return base_; }
  double rate() const { return mu_; }  // 1 / mean of the base

 private:
  double partial_mean(double a, double b) const;  // of the excess distribution

  Distribution base_;
  double mu_;
  // piecewise-linear CDF tables for the empirical variant
  std::vector<double> emp_x_, emp_tail_, emp_integral_;
};

/// The excess-lifetime transform of a distribution.
ExcessLifetime excess_lifetime(const Distribution& theta);

}  // namespace bwshare
