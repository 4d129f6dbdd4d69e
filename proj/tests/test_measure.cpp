#include <doctest.h>

#include <cmath>

#include "bwshare/atomic_measure.hpp"
#include "bwshare/rng.hpp"
#include "support/oracles.hpp"

using namespace bwshare;

namespace {

AtomicMeasure two_atoms() { return AtomicMeasure::dirac(2.0) + AtomicMeasure::dirac(5.0, 3.0); }

// locations and shifts on a dyadic grid, so subtraction is exact and the
// transport composition law can be asserted with equality
double dyadic(RngStream& rng, double scale) {
  return std::floor(rng.uniform01() * scale * 1048576.0) / 1048576.0;
}

bool same_atoms(const AtomicMeasure& a, const AtomicMeasure& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a.atoms()[k].location != b.atoms()[k].location) return false;
    if (a.atoms()[k].mass != b.atoms()[k].mass) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("integration against atoms") {
  const AtomicMeasure xi = two_atoms();
  CHECK(integrate([](double) { return 1.0; }, xi) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(integrate([](double x) { return x; }, xi) == doctest::Approx(17.0).epsilon(1e-15));
  CHECK(integrate([](double x) { return x * x; }, AtomicMeasure{}) == 0.0);
}

TEST_CASE("construction merges duplicate locations") {
  const AtomicMeasure xi({1.0, 1.0, 2.0}, {1.0, 2.0, 1.0});
  REQUIRE(xi.size() == 2);
  CHECK(xi.atoms()[0].location == 1.0);
  CHECK(xi.atoms()[0].mass == 3.0);
  const AtomicMeasure near({1.0, 1.0 + 1e-13}, {1.0, 1.0});
  CHECK(near.size() == 1);
}

TEST_CASE("shift_left basics") {
  CHECK(same_atoms(shift_left(AtomicMeasure::dirac(3.0), 1.0), AtomicMeasure::dirac(2.0)));
  // mass landing exactly at zero is deleted
  const AtomicMeasure xi = AtomicMeasure::dirac(1.0) + AtomicMeasure::dirac(3.0);
  CHECK(same_atoms(shift_left(xi, 1.0), AtomicMeasure::dirac(2.0)));
  CHECK(same_atoms(shift_left(xi, 0.0), xi));
}

TEST_CASE("shift_left composes exactly") {
  RngStream rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<AtomicMeasure::Atom> atoms;
    const int n = 1 + static_cast<int>(rng.uniform01() * 6.0);
    for (int k = 0; k < n; ++k) atoms.push_back({dyadic(rng, 4.0), 0.5 + rng.uniform01()});
    const AtomicMeasure xi{atoms};
    const double a = dyadic(rng, 1.0);
    const double b = dyadic(rng, 1.0);
    CHECK(same_atoms(shift_left(shift_left(xi, a), b), shift_left(xi, a + b)));
  }
}

TEST_CASE("Levy metric hand cases") {
  CHECK(levy_distance(two_atoms(), two_atoms()) == 0.0);
  CHECK(levy_distance(AtomicMeasure::dirac(0.0), AtomicMeasure::dirac(0.3)) ==
        doctest::Approx(0.3).epsilon(1e-6));
  const double d = levy_distance(AtomicMeasure::dirac(1.0), AtomicMeasure::dirac(1.0, 2.0));
  CHECK(d > 0.0);
  CHECK(d <= 1.0 + 1e-9);
  CHECK(d == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Prohorov metric hand cases") {
  CHECK(prohorov_exact(two_atoms(), two_atoms()) == 0.0);
  CHECK(prohorov_exact(AtomicMeasure::dirac(0.0), AtomicMeasure::dirac(0.3)) ==
        doctest::Approx(0.3).epsilon(1e-6));
  CHECK(prohorov_exact(AtomicMeasure::dirac(1.0), AtomicMeasure::dirac(1.0, 2.0)) ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Prohorov oracle rejects large atom counts") {
  std::vector<double> locs, masses;
  for (int k = 0; k < 13; ++k) {
    locs.push_back(static_cast<double>(k));
    masses.push_back(1.0);
  }
  const AtomicMeasure big(locs, masses);
  CHECK_THROWS_AS((void)prohorov_exact(big, AtomicMeasure::dirac(1.0)), Error);
}

TEST_CASE("metric axioms on sampled triples") {
  RngStream rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const AtomicMeasure a = testsupport::random_measure(rng, 6);
    const AtomicMeasure b = testsupport::random_measure(rng, 6);
    const AtomicMeasure c = testsupport::random_measure(rng, 6);
    for (const auto metric : {MeasureMetric::Levy, MeasureMetric::Prohorov}) {
      const auto dist = [metric](const AtomicMeasure& x, const AtomicMeasure& y) {
        return metric == MeasureMetric::Levy ? levy_distance(x, y) : prohorov_exact(x, y);
      };
      const double dab = dist(a, b);
      const double dba = dist(b, a);
      const double dac = dist(a, c);
      const double dcb = dist(c, b);
      CHECK(dab >= 0.0);
      CHECK(std::abs(dab - dba) <= 1e-9);
      CHECK(dist(a, a) == 0.0);
      CHECK(dab <= dac + dcb + 1e-9);
    }
  }
}

TEST_CASE("Levy is dominated by Prohorov") {
  RngStream rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const AtomicMeasure a = testsupport::random_measure(rng, 6);
    const AtomicMeasure b = testsupport::random_measure(rng, 6);
    CHECK(levy_distance(a, b) <= prohorov_exact(a, b) + 1e-9);
  }
}

TEST_CASE("Prohorov subset restriction is adversarially tight") {
  // worst-case closed sets for atomic measures are subsets of the atom
  // support; cross-check against random closed interval unions
  RngStream rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const AtomicMeasure a = testsupport::random_measure(rng, 5);
    const AtomicMeasure b = testsupport::random_measure(rng, 5);
    const double d = prohorov_exact(a, b);
    const double violation =
        testsupport::prohorov_interval_violation(a, b, d + 1e-7, rng, 1000);
    CHECK(violation <= 1e-9);
  }
}

TEST_CASE("vector distance is the componentwise max") {
  const std::vector<AtomicMeasure> xs{AtomicMeasure::dirac(1.0), AtomicMeasure::dirac(2.0)};
  const std::vector<AtomicMeasure> same = xs;
  CHECK(vector_distance(xs, same, MeasureMetric::Levy) == 0.0);

  const std::vector<AtomicMeasure> ys{AtomicMeasure::dirac(1.1), AtomicMeasure::dirac(2.3)};
  const double expected = std::max(levy_distance(xs[0], ys[0]), levy_distance(xs[1], ys[1]));
  CHECK(vector_distance(xs, ys, MeasureMetric::Levy) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.3).epsilon(1e-6));

  const std::vector<AtomicMeasure> single_a{AtomicMeasure::dirac(0.0)};
  const std::vector<AtomicMeasure> single_b{AtomicMeasure::dirac(0.3)};
  CHECK(vector_distance(single_a, single_b, MeasureMetric::Prohorov) ==
        doctest::Approx(prohorov_exact(single_a[0], single_b[0])).epsilon(1e-12));

  CHECK_THROWS_AS((void)vector_distance(xs, single_a, MeasureMetric::Levy), Error);
}

TEST_CASE("bounded support has vanishing tail moments") {
  RngStream rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    const AtomicMeasure xi = testsupport::random_measure(rng, 6, 2.5);
    const double support_end = xi.max_location();
    CHECK(xi.tail_first_moment(std::nextafter(support_end, 1e300)) == 0.0);
    CHECK(xi.tail_first_moment(support_end + 0.5) == 0.0);
    CHECK(xi.tail_first_moment(0.0) == doctest::Approx(xi.first_moment()).epsilon(1e-15));
  }
}
