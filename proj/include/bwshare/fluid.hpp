#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "bwshare/allocator.hpp"
#include "bwshare/atomic_measure.hpp"
#include "bwshare/distribution.hpp"
#include "bwshare/topology.hpp"

namespace bwshare {

/// Problem data of the fluid model: network, policy, per-route arrival
/// rates and document-size distributions, and the derived service rates
/// mu_i = 1/mean and traffic intensities rho_i = nu_i / mu_i.
struct FluidData {
  NetworkTopology topology;
  AlphaFairPolicy policy;
  Eigen::VectorXd arrival_rates;   // nu
  std::vector<Distribution> sizes; // vartheta, one per route
  Eigen::VectorXd mu;
  Eigen::VectorXd rho;
};

/// Validates and derives a FluidData. Arrival rates must be strictly
/// positive unless `allow_zero_arrivals` is set (useful for pure-draining
/// test runs).
FluidData make_fluid_data(NetworkTopology topology, AlphaFairPolicy policy,
                          Eigen::VectorXd arrival_rates, std::vector<Distribution> sizes,
                          bool allow_zero_arrivals = false);

struct FluidOptions {
  double dt = 1e-3;
  int inflow_atoms = 512;        // atoms in each per-step inflow batch
  int atom_budget = 500000;      // hard cap per route
  double merge_divisor = 4096.0; // atoms closer than max_location/divisor merge
  int store_stride = 0;          // 0: automatic (~256 stored measure snapshots)
  std::vector<double> store_times;  // additional times to store measures at
};

/// Time-gridded trajectory of the fluid model with auxiliary arrays. The
/// scalar arrays cover every grid step; measures are stored at a subset
/// of steps.
struct FluidSolution {
  double dt = 0.0;
  std::vector<double> times;        // grid, size N+1
  Eigen::MatrixXd counts;           // z,   (N+1) x I
  Eigen::MatrixXd workload;         // w,   (N+1) x I
  Eigen::MatrixXd served;           // tau, (N+1) x I
  Eigen::MatrixXd bandwidth;        // lambda used on [t_k, t_{k+1}), (N+1) x I
  Eigen::MatrixXd per_flow_service; // s,   (N+1) x I
  Eigen::MatrixXd unused;           // u,   (N+1) x J
  std::vector<std::size_t> stored_steps;
  std::vector<std::vector<AtomicMeasure>> measures;  // parallel to stored_steps

  /// Index into stored_steps of the snapshot nearest to time t.
  std::size_t nearest_stored(double t) const;
  const std::vector<AtomicMeasure>& measures_at(double t) const;
};

/// Forward integration of the fluid model by transported atoms: per step,
/// the current measure on each nonempty route shifts left by the per-flow
/// drain (mass reaching 0 is deleted), then an inflow batch of mass
/// nu_i * dt with the discretized size distribution is appended. The
/// step's allocation is evaluated at the step start. Inflow is injected
/// on empty routes as well, which realizes the boundary behaviour to
/// first order in dt.
FluidSolution solve(const FluidData& data, const std::vector<AtomicMeasure>& initial,
                    double horizon, const FluidOptions& options = {});

/// Max defect of the workload identity w(t) = w(0) + rho t - tau(t) over
/// the whole grid.
double workload_identity_residual(const FluidData& data, const FluidSolution& solution);

/// Independent verification of the measure transport equation projected
/// against the probe battery, with time integrals by the trapezoid rule
/// on the stored grid. Returns the max absolute discrepancy over routes,
/// probe parameters, and stored times.
double fluid_equation_residual(const FluidData& data, const FluidSolution& solution,
                               std::span<const double> thetas);

}  // namespace bwshare
