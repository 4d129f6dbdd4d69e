#include <doctest.h>

#include <cmath>

#include "bwshare/distribution.hpp"
#include "bwshare/probe.hpp"
#include "support/oracles.hpp"

using namespace bwshare;

namespace {

Distribution hyper_example() { return Distribution::hyper_exponential({0.5, 0.5}, {1.0, 2.0}); }

std::vector<Distribution> battery() {
  return {Distribution::exponential(1.0), Distribution::exponential(2.0),
          Distribution::deterministic(1.0), Distribution::uniform_interval(0.5, 1.5),
          hyper_example(),
          Distribution::empirical(AtomicMeasure({0.5, 1.0, 2.5}, {0.25, 0.5, 0.25}))};
}

double quadrature_upper(const Distribution& d) {
  // point beyond which the excess density contributes < 1e-12
  double hi = std::max(1.0, d.mean());
  const ExcessLifetime e(d);
  while (1.0 - e.cdf(hi) > 1e-13) hi *= 2.0;
  return hi;
}

}  // namespace

TEST_CASE("closed-form means and tails") {
  CHECK(Distribution::exponential(2.0).mean() == doctest::Approx(0.5).epsilon(1e-15));
  const Distribution det = Distribution::deterministic(3.0);
  CHECK(det.mean() == 3.0);
  CHECK(det.tail(2.999) == 1.0);
  CHECK(det.tail(3.0) == 0.0);
  CHECK(hyper_example().mean() == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(Distribution::uniform_interval(0.5, 1.5).mean() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("validation rejects bad parameters") {
  CHECK_THROWS_AS(Distribution::exponential(0.0), Error);
  CHECK_THROWS_AS(Distribution::uniform_interval(0.0, 1.0), Error);
  CHECK_THROWS_AS(Distribution::uniform_interval(1.0, 1.0), Error);
  CHECK_THROWS_AS(Distribution::hyper_exponential({0.2, 0.2}, {1.0, 2.0}), Error);
  // empirical: mass at zero and non-unit total are rejected
  CHECK_THROWS_AS(Distribution::empirical(AtomicMeasure({0.0, 1.0}, {0.5, 0.5})), Error);
  CHECK_THROWS_AS(Distribution::empirical(AtomicMeasure({1.0}, {0.9})), Error);
}

TEST_CASE("quantile inverts the CDF") {
  RngStream rng(3);
  for (const Distribution& d : battery()) {
    for (int k = 0; k < 50; ++k) {
      const double u = rng.uniform01();
      const double x = d.quantile(u);
      // right-continuous inverse: cdf(x) >= u, and cdf just below x < u
      CHECK(d.cdf(x) >= u - 1e-9);
      if (x > 1e-9) CHECK(d.cdf(x * (1.0 - 1e-9) - 1e-12) <= u + 1e-9);
    }
  }
}

TEST_CASE("sampling is deterministic per stream") {
  const Distribution d = hyper_example();
  RngStream a(derive_stream_seed(42, StreamPurpose::DocumentSize, 1));
  RngStream b(derive_stream_seed(42, StreamPurpose::DocumentSize, 1));
  for (int k = 0; k < 20; ++k) {
    const double va = d.sample(a);
    CHECK(va == d.sample(b));
    CHECK(va > 0.0);
  }
  RngStream c(derive_stream_seed(42, StreamPurpose::DocumentSize, 2));
  CHECK(d.sample(c) != d.sample(a));
}

TEST_CASE("excess lifetime of the exponential is itself") {
  const Distribution d = Distribution::exponential(1.7);
  const ExcessLifetime e(d);
  for (double x : {0.0, 0.1, 0.8, 2.0, 5.0}) {
    CHECK(e.cdf(x) == doctest::Approx(d.cdf(x)).epsilon(1e-12));
    CHECK(e.density(x) == doctest::Approx(1.7 * std::exp(-1.7 * x)).epsilon(1e-12));
  }
}

TEST_CASE("excess lifetime of a point mass is uniform") {
  const ExcessLifetime e(Distribution::deterministic(1.0));
  double worst = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double x = static_cast<double>(k) / 1000.0;
    worst = std::max(worst, std::abs(e.cdf(x) - x));
  }
  CHECK(worst <= 1e-9);
  CHECK(e.cdf(1.5) == 1.0);
  CHECK(e.density(0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.density(1.5) == 0.0);
}

TEST_CASE("excess density is the normalized tail") {
  RngStream rng(17);
  for (const Distribution& d : battery()) {
    const ExcessLifetime e(d);
    const double mu = 1.0 / d.mean();
    for (int k = 0; k < 100; ++k) {
      const double x = rng.uniform01() * 4.0;
      CHECK(std::abs(e.density(x) - mu * d.tail(x)) <= 1e-12);
    }
  }
}

TEST_CASE("excess hyperexponential has the expected closed form") {
  const ExcessLifetime e(hyper_example());
  CHECK(e.rate() == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  RngStream rng(19);
  for (int k = 0; k < 100; ++k) {
    const double x = rng.uniform01() * 5.0;
    const double expected = (4.0 / 3.0) * (0.5 * std::exp(-x) + 0.5 * std::exp(-2.0 * x));
    CHECK(std::abs(e.density(x) - expected) <= 1e-12);
  }
}

TEST_CASE("excess density integrates to one") {
  for (const Distribution& d : battery()) {
    const ExcessLifetime e(d);
    const double total = testsupport::integrate_piecewise(
        [&e](double x) { return e.density(x); }, 0.0, quadrature_upper(d), e.breakpoints(),
        1e-11);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("probe integration by parts identity") {
  // <f, theta> = (1/mu) <f', theta^e> for probes vanishing at the origin
  for (const Distribution& d : battery()) {
    const ExcessLifetime e(d);
    for (double theta : kProbeThetas) {
      const double lhs = probe_mean(d, theta);
      const double rhs = testsupport::integrate_piecewise(
                             [&](double x) { return probe_deriv(theta, x) * e.density(x); }, 0.0,
                             quadrature_upper(d), e.breakpoints(), 1e-10) /
                         e.rate();
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
  }
}

TEST_CASE("discretization preserves mass and mean") {
  for (const Distribution& d : battery()) {
    for (int n : {16, 512}) {
      const AtomicMeasure atoms = d.discretize(n);
      CHECK(atoms.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(atoms.first_moment() == doctest::Approx(d.mean()).epsilon(1e-9));
      CHECK(atoms.atoms().front().location > 0.0);
    }
    const ExcessLifetime e(d);
    const AtomicMeasure atoms = e.discretize(512);
    CHECK(atoms.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(atoms.first_moment() == doctest::Approx(e.mean()).epsilon(1e-8));
    CHECK(atoms.atoms().front().location > 0.0);
  }
}

TEST_CASE("discretized CDF tracks the true CDF") {
  for (const Distribution& d : battery()) {
    const AtomicMeasure atoms = d.discretize(512);
    RngStream rng(29);
    for (int k = 0; k < 200; ++k) {
      const double x = rng.uniform01() * 4.0;
      // equal-mass cells bound the CDF gap by one cell of mass
      CHECK(std::abs(atoms.cdf(x) - d.cdf(x)) <= 1.0 / 512.0 + 1e-9);
    }
  }
}

TEST_CASE("excess sampling matches the excess quantile") {
  const Distribution d = hyper_example();
  const ExcessLifetime e(d);
  RngStream rng(derive_stream_seed(9, StreamPurpose::InitialSize, 0));
  RngStream mirror(derive_stream_seed(9, StreamPurpose::InitialSize, 0));
  for (int k = 0; k < 50; ++k) {
    const double v = e.sample(rng);
    CHECK(v == e.quantile(mirror.uniform01()));
    CHECK(e.cdf(v) <= 1.0);
  }
}
