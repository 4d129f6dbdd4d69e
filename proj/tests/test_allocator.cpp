#include <doctest.h>

#include <cmath>

#include "bwshare/allocator.hpp"
#include "bwshare/rng.hpp"

using namespace bwshare;

namespace {

NetworkTopology linear_network() {
  Eigen::MatrixXd a(2, 3);
  a << 1, 1, 0,
       1, 0, 1;
  return validate_topology(a, Eigen::Vector2d(1.0, 1.0));
}

NetworkTopology single_route(double capacity = 1.0) {
  Eigen::MatrixXd a(1, 1);
  a << 1;
  Eigen::VectorXd c(1);
  c << capacity;
  return validate_topology(a, c);
}

struct RandomInstance {
  NetworkTopology topology;
  AlphaFairPolicy policy;
  Eigen::VectorXd z;
};

RandomInstance random_instance(RngStream& rng, bool allow_zero_z = true) {
  const int routes = 1 + static_cast<int>(rng.uniform01() * 6.0);
  const int resources = 1 + static_cast<int>(rng.uniform01() * 6.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(resources, routes);
  for (int i = 0; i < routes; ++i) {
    bool used = false;
    for (int j = 0; j < resources; ++j) {
      if (rng.uniform01() < 0.45) {
        a(j, i) = 1.0;
        used = true;
      }
    }
    if (!used) a(static_cast<int>(rng.uniform01() * resources), i) = 1.0;
  }
  Eigen::VectorXd c(resources);
  for (int j = 0; j < resources; ++j) c(j) = 0.5 + 1.5 * rng.uniform01();
  AlphaFairPolicy policy;
  const double alphas[] = {0.5, 1.0, 2.0, 3.0};
  policy.alpha = alphas[static_cast<int>(rng.uniform01() * 4.0)];
  policy.kappa.resize(routes);
  for (int i = 0; i < routes; ++i) policy.kappa(i) = 0.5 + 1.5 * rng.uniform01();
  Eigen::VectorXd z(routes);
  for (int i = 0; i < routes; ++i) {
    z(i) = (allow_zero_z && rng.uniform01() < 0.25) ? 0.0 : 0.2 + 2.8 * rng.uniform01();
  }
  return {validate_topology(a, c), policy, z};
}

}  // namespace

TEST_CASE("single saturated route") {
  const NetworkTopology topo = single_route();
  for (double z : {0.25, 1.0, 7.5}) {
    for (double alpha : {0.5, 1.0, 2.0}) {
      const auto res = allocate(topo, AlphaFairPolicy::uniform(1, alpha),
                                Eigen::VectorXd::Constant(1, z));
      CHECK(res.bandwidth(0) == 1.0);  // capacity binds exactly
      CHECK(res.kkt_residual <= 1e-8);
    }
  }
}

TEST_CASE("proportional fairness on the linear network") {
  const auto res = allocate(linear_network(), AlphaFairPolicy::uniform(3, 1.0),
                            Eigen::Vector3d(1.0, 1.0, 1.0));
  CHECK(res.bandwidth(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  CHECK(res.bandwidth(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(res.bandwidth(2) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(res.prices(0) == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(res.prices(1) == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(res.kkt_residual <= 1e-8);

  const Eigen::VectorXd oracle = grid_oracle(linear_network(), AlphaFairPolicy::uniform(3, 1.0),
                                             Eigen::Vector3d(1.0, 1.0, 1.0), 1e-3);
  CHECK((oracle - res.bandwidth).lpNorm<Eigen::Infinity>() <= 2e-3);
}

TEST_CASE("alpha=2 fairness on the linear network") {
  const auto res = allocate(linear_network(), AlphaFairPolicy::uniform(3, 2.0),
                            Eigen::Vector3d(1.0, 1.0, 1.0));
  const double root2 = std::sqrt(2.0);
  CHECK(res.bandwidth(0) == doctest::Approx(root2 - 1.0).epsilon(1e-6));
  CHECK(res.bandwidth(1) == doctest::Approx(2.0 - root2).epsilon(1e-6));
  CHECK(res.bandwidth(2) == doctest::Approx(2.0 - root2).epsilon(1e-6));
  CHECK(res.kkt_residual <= 1e-8);

  const Eigen::VectorXd oracle = grid_oracle(linear_network(), AlphaFairPolicy::uniform(3, 2.0),
                                             Eigen::Vector3d(1.0, 1.0, 1.0), 1e-3);
  CHECK((oracle - res.bandwidth).lpNorm<Eigen::Infinity>() <= 2e-3);
}

TEST_CASE("objective value conventions") {
  const AlphaFairPolicy log_policy = AlphaFairPolicy::uniform(3, 1.0);
  CHECK(objective_value(log_policy, Eigen::Vector3d::Zero(), Eigen::Vector3d(1.0, 1.0, 1.0)) ==
        0.0);
  const AlphaFairPolicy one_route = AlphaFairPolicy::uniform(1, 1.0);
  CHECK(objective_value(one_route, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1)) ==
        -std::numeric_limits<double>::infinity());
  const double v = objective_value(log_policy, Eigen::Vector3d(1.0, 1.0, 1.0),
                                   Eigen::Vector3d(1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0));
  CHECK(v == doctest::Approx(std::log(1.0 / 3.0) + 2.0 * std::log(2.0 / 3.0)).epsilon(1e-9));
  CHECK(v == doctest::Approx(-1.9095).epsilon(1e-4));
  // alpha < 1 tolerates zero bandwidth on a positive route
  const AlphaFairPolicy low = AlphaFairPolicy::uniform(2, 0.5);
  CHECK(std::isfinite(objective_value(low, Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(0.0, 1.0))));
}

TEST_CASE("grid oracle corners") {
  // a mesh containing the capacity returns it exactly
  const Eigen::VectorXd single =
      grid_oracle(single_route(), AlphaFairPolicy::uniform(1, 1.0), Eigen::VectorXd::Ones(1), 0.25);
  CHECK(single(0) == 1.0);

  // zero coordinates stay zero: the search is restricted to the face
  const Eigen::VectorXd face = grid_oracle(linear_network(), AlphaFairPolicy::uniform(3, 1.0),
                                           Eigen::Vector3d(1.0, 0.0, 1.0), 0.125);
  CHECK(face(1) == 0.0);
  CHECK(face(0) > 0.0);
  CHECK(face(2) > 0.0);

  Eigen::MatrixXd wide = Eigen::MatrixXd::Ones(1, 4);
  const NetworkTopology four = validate_topology(wide, Eigen::VectorXd::Ones(1));
  CHECK_THROWS_AS(
      (void)grid_oracle(four, AlphaFairPolicy::uniform(4, 1.0), Eigen::VectorXd::Ones(4), 0.5),
      Error);
}

TEST_CASE("negative counts are rejected") {
  try {
    (void)allocate(single_route(), AlphaFairPolicy::uniform(1, 1.0),
                   Eigen::VectorXd::Constant(1, -1.0));
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidInput);
  }
}

TEST_CASE("policy axioms on random instances") {
  RngStream rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    const RandomInstance inst = random_instance(rng);
    const auto res = allocate(inst.topology, inst.policy, inst.z);
    CHECK(res.kkt_residual <= 1e-8);
    for (int i = 0; i < inst.z.size(); ++i) {
      if (inst.z(i) > 0.0) {
        CHECK(res.bandwidth(i) > 0.0);
      } else {
        CHECK(res.bandwidth(i) == 0.0);
      }
    }
    const Eigen::VectorXd load = resource_load(inst.topology, res.bandwidth);
    CHECK((load - inst.topology.capacities).maxCoeff() <= 1e-9);
    // every route uses a resource, so no allocation exceeds the largest capacity
    CHECK(res.bandwidth.maxCoeff() <= inst.topology.capacities.maxCoeff() + 1e-9);

    // scale invariance
    if (inst.z.maxCoeff() > 0.0) {
      for (double r : {1e-3, 0.5, 3.0, 1e3}) {
        const auto scaled = allocate(inst.topology, inst.policy, r * inst.z);
        CHECK((scaled.bandwidth - res.bandwidth).lpNorm<Eigen::Infinity>() <= 1e-7);
      }
    }

    // some resource binds whenever there is work
    if (inst.z.maxCoeff() > 0.0) {
      double min_slack = std::numeric_limits<double>::infinity();
      for (int j = 0; j < inst.topology.num_resources(); ++j) {
        bool used = false;
        for (int i = 0; i < inst.z.size(); ++i) {
          if (inst.z(i) > 0.0 && inst.topology.incidence(j, i) != 0.0) used = true;
        }
        if (used) min_slack = std::min(min_slack, inst.topology.capacities(j) - load(j));
      }
      CHECK(min_slack <= 1e-8);
    }
  }
}

TEST_CASE("allocation stays positive on the sampled box") {
  const NetworkTopology topo = linear_network();
  const AlphaFairPolicy policy = AlphaFairPolicy::uniform(3, 1.0);
  for (double z0 : {0.1, 1.0, 5.0, 10.0}) {
    for (double z1 : {0.1, 2.0, 10.0}) {
      for (double z2 : {0.1, 4.0, 10.0}) {
        const auto res = allocate(topo, policy, Eigen::Vector3d(z0, z1, z2));
        CHECK(res.bandwidth.minCoeff() > 0.0);
      }
    }
  }
}

TEST_CASE("oracle equivalence on small instances") {
  RngStream rng(211);
  int done = 0;
  while (done < 100) {
    RandomInstance inst = random_instance(rng);
    if (inst.topology.num_routes() > 2) continue;
    ++done;
    const auto res = allocate(inst.topology, inst.policy, inst.z);
    const Eigen::VectorXd oracle = grid_oracle(inst.topology, inst.policy, inst.z, 1e-3);
    const double solver_value = objective_value(inst.policy, inst.z, res.bandwidth);
    const double oracle_value = objective_value(inst.policy, inst.z, oracle);
    CHECK(solver_value >= oracle_value - 1e-6);
  }
}

TEST_CASE("warm starts do not change the answer") {
  const NetworkTopology topo = linear_network();
  const AlphaFairPolicy policy = AlphaFairPolicy::uniform(3, 2.0);
  const Eigen::Vector3d z(1.0, 2.0, 0.5);
  const auto cold = allocate(topo, policy, z);
  AllocateOptions opts;
  opts.warm_start = cold.prices;
  const auto warm = allocate(topo, policy, z, opts);
  CHECK((warm.bandwidth - cold.bandwidth).lpNorm<Eigen::Infinity>() <= 1e-9);
}
