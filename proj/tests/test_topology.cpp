#include <doctest.h>

#include "bwshare/rng.hpp"
#include "bwshare/topology.hpp"

using namespace bwshare;

namespace {

Eigen::MatrixXd linear_incidence() {
  Eigen::MatrixXd a(2, 3);
  a << 1, 1, 0,
       1, 0, 1;
  return a;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a throw");
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST_CASE("linear network validates") {
  const NetworkTopology topo = validate_topology(linear_incidence(), Eigen::Vector2d(1.0, 1.0));
  CHECK(topo.num_routes() == 3);
  CHECK(topo.num_resources() == 2);
}

TEST_CASE("topology validation errors") {
  Eigen::MatrixXd zero_col(2, 2);
  zero_col << 1, 0,
              1, 0;
  CHECK(code_of([&] { validate_topology(zero_col, Eigen::Vector2d(1.0, 1.0)); }) ==
        ErrorCode::EmptyRoute);

  Eigen::MatrixXd one(1, 1);
  one << 1;
  Eigen::VectorXd zero_cap(1);
  zero_cap << 0.0;
  CHECK(code_of([&] { validate_topology(one, zero_cap); }) == ErrorCode::NonpositiveCapacity);

  Eigen::MatrixXd half(1, 1);
  half << 0.5;
  CHECK(code_of([&] { validate_topology(half, Eigen::VectorXd::Ones(1)); }) ==
        ErrorCode::NonBinaryEntry);
}

TEST_CASE("validation is idempotent") {
  const NetworkTopology once = validate_topology(linear_incidence(), Eigen::Vector2d(1.0, 1.0));
  const NetworkTopology twice = validate_topology(once.incidence, once.capacities);
  CHECK(once.incidence == twice.incidence);
  CHECK(once.capacities == twice.capacities);
}

TEST_CASE("resource load matches hand values") {
  const NetworkTopology topo = validate_topology(linear_incidence(), Eigen::Vector2d(1.0, 1.0));
  const Eigen::VectorXd load = resource_load(topo, Eigen::Vector3d(0.2, 0.3, 0.4));
  CHECK(load(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(load(1) == doctest::Approx(0.6).epsilon(1e-12));

  CHECK(resource_load(topo, Eigen::Vector3d::Zero()).isZero(0.0));

  const Eigen::VectorXd critical = resource_load(topo, Eigen::Vector3d(0.5, 0.5, 0.5));
  CHECK(critical(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(critical(1) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(code_of([&] { resource_load(topo, Eigen::Vector2d(1.0, 1.0)); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("resource load is linear") {
  const NetworkTopology topo = validate_topology(linear_incidence(), Eigen::Vector2d(1.0, 1.0));
  RngStream rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Vector3d a, b;
    for (int i = 0; i < 3; ++i) {
      a(i) = rng.uniform01() * 5.0;
      b(i) = rng.uniform01() * 5.0;
    }
    const Eigen::VectorXd sum = resource_load(topo, a + b);
    const Eigen::VectorXd parts = resource_load(topo, a) + resource_load(topo, b);
    CHECK((sum - parts).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}
