#include "bwshare/atomic_measure.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace bwshare {

namespace {

constexpr double kMergeResolution = 1e-12;

struct CdfTable {
  std::vector<double> locations;
  std::vector<double> prefix;  // prefix[k] = mass of first k atoms

  explicit CdfTable(const AtomicMeasure& m) {
    locations.reserve(m.size());
    prefix.reserve(m.size() + 1);
    prefix.push_back(0.0);
    for (const auto& a : m.atoms()) {
      locations.push_back(a.location);
      prefix.push_back(prefix.back() + a.mass);
    }
  }

  double total() const { return prefix.back(); }

  // Mass of [0, x].
  double at(double x) const {
    const auto it = std::upper_bound(locations.begin(), locations.end(), x);
    return prefix[static_cast<std::size_t>(it - locations.begin())];
  }

  // Mass of [0, x).
  double left(double x) const {
    const auto it = std::lower_bound(locations.begin(), locations.end(), x);
    return prefix[static_cast<std::size_t>(it - locations.begin())];
  }
};

// One direction of the Levy sandwich: sup_x [F(x - eps) - G(x)] <= eps.
// Both CDFs are right-continuous steps, so the supremum is attained either
// at an up-jump of x -> F(x - eps) (x = a + eps for an atom a of F) or as
// the left limit at a down-jump of G (x = b for an atom b of G).
bool levy_one_sided_ok(const CdfTable& F, const CdfTable& G, double eps) {
  constexpr double slack = 1e-15;
  for (double a : F.locations) {
    if (F.at(a) - G.at(a + eps) > eps + slack) return false;
  }
  for (double b : G.locations) {
    if (F.left(b - eps) - G.left(b) > eps + slack) return false;
  }
  return true;
}

bool atoms_identical(const AtomicMeasure& a, const AtomicMeasure& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a.atoms()[k].location != b.atoms()[k].location) return false;
    if (a.atoms()[k].mass != b.atoms()[k].mass) return false;
  }
  return true;
}

}  // namespace

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) { normalize(); }

AtomicMeasure::AtomicMeasure(const std::vector<double>& locations,
                             const std::vector<double>& masses) {
  require(locations.size() == masses.size(), ErrorCode::DimensionMismatch,
          "locations and masses must have equal length");
  atoms_.reserve(locations.size());
  for (std::size_t k = 0; k < locations.size(); ++k) {
    atoms_.push_back({locations[k], masses[k]});
  }
  normalize();
}

AtomicMeasure AtomicMeasure::dirac(double location, double mass) {
  return AtomicMeasure({{location, mass}});
}

void AtomicMeasure::normalize() {
  for (const Atom& a : atoms_) {
    require(std::isfinite(a.location) && a.location >= 0.0, ErrorCode::InvalidInput,
            "atom locations must be nonnegative finite");
    require(std::isfinite(a.mass) && a.mass > 0.0, ErrorCode::InvalidInput,
            "atom masses must be positive finite");
  }
  std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) {
    return a.location < b.location;
  });
  std::vector<Atom> merged;
  merged.reserve(atoms_.size());
  for (const Atom& a : atoms_) {
    if (!merged.empty() && a.location - merged.back().location < kMergeResolution) {
      Atom& last = merged.back();
      if (a.location != last.location) {
        last.location = (last.location * last.mass + a.location * a.mass) / (last.mass + a.mass);
      }
      last.mass += a.mass;
    } else {
      merged.push_back(a);
    }
  }
  atoms_ = std::move(merged);
}

double AtomicMeasure::total_mass() const {
  double acc = 0.0;
  for (const Atom& a : atoms_) acc += a.mass;
  return acc;
}

double AtomicMeasure::first_moment() const {
  double acc = 0.0;
  for (const Atom& a : atoms_) acc += a.mass * a.location;
  return acc;
}

double AtomicMeasure::max_location() const {
  return atoms_.empty() ? 0.0 : atoms_.back().location;
}

double AtomicMeasure::cdf(double x) const {
  double acc = 0.0;
  for (const Atom& a : atoms_) {
    if (a.location > x) break;
    acc += a.mass;
  }
  return acc;
}

double AtomicMeasure::cdf_left(double x) const {
  double acc = 0.0;
  for (const Atom& a : atoms_) {
    if (a.location >= x) break;
    acc += a.mass;
  }
  return acc;
}

double AtomicMeasure::tail_first_moment(double x) const {
  double acc = 0.0;
  for (const Atom& a : atoms_) {
    if (a.location >= x) acc += a.mass * a.location;
  }
  return acc;
}

double AtomicMeasure::integrate(const std::function<double(double)>& f) const {
  return integrate_with(f);
}

AtomicMeasure AtomicMeasure::scaled(double factor) const {
  require(factor > 0.0 && std::isfinite(factor), ErrorCode::InvalidInput,
          "scale factor must be positive finite");
  std::vector<Atom> out = atoms_;
  for (Atom& a : out) a.mass *= factor;
  AtomicMeasure result;
  result.atoms_ = std::move(out);  // sorted and distinct already
  return result;
}

double integrate(const std::function<double(double)>& f, const AtomicMeasure& xi) {
  return xi.integrate(f);
}

AtomicMeasure shift_left(const AtomicMeasure& xi, double x) {
  require(x >= 0.0, ErrorCode::InvalidInput, "shift amount must be nonnegative");
  std::vector<AtomicMeasure::Atom> out;
  out.reserve(xi.size());
  for (const auto& a : xi.atoms()) {
    if (a.location > x) out.push_back({a.location - x, a.mass});
  }
  return AtomicMeasure(std::move(out));
}

AtomicMeasure operator+(const AtomicMeasure& a, const AtomicMeasure& b) {
  std::vector<AtomicMeasure::Atom> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.atoms().begin(), a.atoms().end());
  out.insert(out.end(), b.atoms().begin(), b.atoms().end());
  return AtomicMeasure(std::move(out));
}

AtomicMeasure operator*(double factor, const AtomicMeasure& xi) { return xi.scaled(factor); }

double levy_distance(const AtomicMeasure& xi, const AtomicMeasure& zeta) {
  if (atoms_identical(xi, zeta)) return 0.0;
  const CdfTable F(xi), G(zeta);
  double lo = 0.0;
  double hi = std::max(F.total(), G.total()) + 1.0;  // eps >= both totals is always feasible
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (levy_one_sided_ok(F, G, mid) && levy_one_sided_ok(G, F, mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

// Feasibility of eps in the Prohorov condition, with B restricted to
// subsets of the first measure's atoms. cover[k] is the bitmask of second
// measure atoms within distance < eps of the k-th first-measure atom.
bool prohorov_one_sided_ok(const std::vector<double>& mass_a,
                           const std::vector<std::uint32_t>& cover,
                           const std::vector<double>& mass_b_by_mask, double eps) {
  constexpr double slack = 1e-15;
  const std::size_t n = mass_a.size();
  const std::uint32_t masks = 1u << n;
  // subset_mass[m] and coverage OR built incrementally from m & (m-1).
  std::vector<double> subset_mass(masks, 0.0);
  std::vector<std::uint32_t> subset_cover(masks, 0u);
  for (std::uint32_t m = 1; m < masks; ++m) {
    const std::uint32_t low = m & (~m + 1u);
    const int bit = std::countr_zero(low);
    subset_mass[m] = subset_mass[m ^ low] + mass_a[static_cast<std::size_t>(bit)];
    subset_cover[m] = subset_cover[m ^ low] | cover[static_cast<std::size_t>(bit)];
    if (subset_mass[m] - mass_b_by_mask[subset_cover[m]] > eps + slack) return false;
  }
  return true;
}

}  // namespace

double prohorov_exact(const AtomicMeasure& xi, const AtomicMeasure& zeta) {
  constexpr std::size_t kMaxAtoms = 12;
  require(xi.size() <= kMaxAtoms && zeta.size() <= kMaxAtoms, ErrorCode::TooManyAtoms,
          "prohorov_exact supports at most 12 atoms per measure");
  if (atoms_identical(xi, zeta)) return 0.0;

  const auto masses_of = [](const AtomicMeasure& m) {
    std::vector<double> out;
    out.reserve(m.size());
    for (const auto& a : m.atoms()) out.push_back(a.mass);
    return out;
  };
  const std::vector<double> mass_x = masses_of(xi);
  const std::vector<double> mass_z = masses_of(zeta);

  const auto mass_by_mask = [](const std::vector<double>& masses) {
    const std::uint32_t n = 1u << masses.size();
    std::vector<double> table(n, 0.0);
    for (std::uint32_t m = 1; m < n; ++m) {
      const std::uint32_t low = m & (~m + 1u);
      table[m] = table[m ^ low] + masses[static_cast<std::size_t>(std::countr_zero(low))];
    }
    return table;
  };
  const std::vector<double> mask_x = mass_by_mask(mass_x);
  const std::vector<double> mask_z = mass_by_mask(mass_z);

  // cover masks for a candidate eps; the eps-enlargement B^eps is open,
  // so strict inequality.
  const auto covers = [](const AtomicMeasure& a, const AtomicMeasure& b, double eps) {
    std::vector<std::uint32_t> out(a.size(), 0u);
    for (std::size_t k = 0; k < a.size(); ++k) {
      for (std::size_t l = 0; l < b.size(); ++l) {
        if (std::abs(a.atoms()[k].location - b.atoms()[l].location) < eps) {
          out[k] |= (1u << l);
        }
      }
    }
    return out;
  };

  const auto feasible = [&](double eps) {
    return prohorov_one_sided_ok(mass_x, covers(xi, zeta, eps), mask_z, eps) &&
           prohorov_one_sided_ok(mass_z, covers(zeta, xi, eps), mask_x, eps);
  };

  double lo = 0.0;
  double hi = std::max(xi.total_mass(), zeta.total_mass()) + 1.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double vector_distance(std::span<const AtomicMeasure> xi, std::span<const AtomicMeasure> zeta,
                       MeasureMetric metric) {
  require(xi.size() == zeta.size(), ErrorCode::DimensionMismatch,
          "vector_distance requires equal-length vectors of measures");
  double worst = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const double d = metric == MeasureMetric::Levy ? levy_distance(xi[i], zeta[i])
                                                   : prohorov_exact(xi[i], zeta[i]);
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace bwshare
