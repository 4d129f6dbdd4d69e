#pragma once

#include <cmath>
#include <cstdlib>

#include "bwshare/errors.hpp"

namespace bwshare {

namespace detail {

template <typename F>
double simpson_segment(F&& f, double a, double fa, double b, double fb, double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_simpson_rec(F&& f, double a, double fa, double b, double fb, double m, double fm,
                            double whole, double tol, int depth, int forced) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson_segment(f, a, fa, m, fm, lm, flm);
  const double right = simpson_segment(f, m, fm, b, fb, rm, frm);
  const double delta = left + right - whole;
  // the forced levels guard against false convergence on integrands
  // concentrated well inside the interval
  if (depth <= 0 || (forced <= 0 && std::abs(delta) <= 15.0 * tol)) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, forced - 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, forced - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f on [a, b] to absolute tolerance tol.
/// Subdivision is forced through the first few levels before the error
/// estimate may terminate a branch.
template <typename F>
double integrate_adaptive(F&& f, double a, double b, double tol, int max_depth = 48,
                          int forced_levels = 8) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = detail::simpson_segment(f, a, fa, b, fb, m, fm);
  return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth,
                                      forced_levels);
}

/// Bisection solve f(x) = 0 for nondecreasing f with f(lo) <= 0 <= f(hi).
/// Returns the midpoint of the final bracket of width <= tol.
template <typename F>
double bisect_increasing(F&& f, double lo, double hi, double tol, int max_iter = 200) {
  require(hi >= lo, ErrorCode::InvalidInput, "bisect_increasing: empty bracket");
  for (int it = 0; it < max_iter && (hi - lo) > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace bwshare
