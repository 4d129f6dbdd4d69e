#pragma once

#include <functional>
#include <span>
#include <vector>

#include "bwshare/errors.hpp"

namespace bwshare {

/// A finite nonnegative Borel measure on the half-line represented as a
/// sorted list of atoms. Locations are nonnegative, masses strictly
/// positive; atoms closer than 1e-12 in location are merged at
/// construction. Values are immutable: all operations are pure.
class AtomicMeasure {
 public:
  struct Atom {
    double location;
    double mass;
  };

  AtomicMeasure() = default;
  explicit AtomicMeasure(std::vector<Atom> atoms);
  AtomicMeasure(const std::vector<double>& locations, const std::vector<double>& masses);

  static AtomicMeasure dirac(double location, double mass = 1.0);

  const std::vector<Atom>& atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }
  std::size_t size() const { return atoms_.size(); }

  double total_mass() const;
  double first_moment() const;
  double max_location() const;  // 0 for the zero measure

  /// Cumulative mass of [0, x].
  double cdf(double x) const;
  /// Cumulative mass of [0, x), the left limit of the CDF.
  double cdf_left(double x) const;
  /// First moment restricted to [x, inf); used for uniform-integrability probes.
  double tail_first_moment(double x) const;

  /// Integral of f against the measure: sum of mass * f(location).
  double integrate(const std::function<double(double)>& f) const;

  template <typename F>
  double integrate_with(F&& f) const {
    double acc = 0.0;
    for (const Atom& a : atoms_) acc += a.mass * f(a.location);
    return acc;
  }

  /// Masses multiplied by a positive factor.
  AtomicMeasure scaled(double factor) const;

 private:
  void normalize();
  std::vector<Atom> atoms_;
};

/// Integral of a test function against an atomic measure.
double integrate(const std::function<double(double)>& f, const AtomicMeasure& xi);

/// Pushforward under y -> (y - x)^+ with mass landing at 0 deleted: an
/// atom at y > x moves to y - x; atoms at y <= x are removed.
AtomicMeasure shift_left(const AtomicMeasure& xi, double x);

/// Superposition of two measures.
AtomicMeasure operator+(const AtomicMeasure& a, const AtomicMeasure& b);
AtomicMeasure operator*(double factor, const AtomicMeasure& xi);

/// Levy-style metric on finite measures over the half-line:
///   inf{eps > 0 : F_xi(x - eps) - eps <= F_zeta(x) <= F_xi(x + eps) + eps for all x},
/// where F is the unnormalized cumulative mass function. Metrizes weak
/// convergence of finite measures (CDF convergence at continuity points
/// plus total-mass convergence). Computed by bisection to absolute
/// tolerance 1e-9.
double levy_distance(const AtomicMeasure& xi, const AtomicMeasure& zeta);

/// Exact Prohorov distance between atomic measures with at most 12 atoms
/// each: inf{eps : xi(B) <= zeta(B^eps) + eps and zeta(B) <= xi(B^eps) + eps
/// for all closed B}. For atomic measures it suffices to range B over
/// subsets of each measure's atom support: replacing a closed B by
/// B n supp(xi) keeps xi(B) and shrinks B^eps, so the subset constraint is
/// at least as tight. Brute-force test oracle only.
double prohorov_exact(const AtomicMeasure& xi, const AtomicMeasure& zeta);

enum class MeasureMetric { Levy, Prohorov };

/// Componentwise maximum of the chosen scalar metric over two equal-length
/// vectors of measures.
double vector_distance(std::span<const AtomicMeasure> xi, std::span<const AtomicMeasure> zeta,
                       MeasureMetric metric);

}  // namespace bwshare
