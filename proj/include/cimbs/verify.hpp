#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cimbs/budget.hpp"
#include "cimbs/graph.hpp"
#include "cimbs/strategy.hpp"

// Reference computations used to check the solver. They favour plain,
// independent algorithms over speed and share no code with the routines they
// check beyond the cost function itself.

namespace cimbs::verify {

/// Euclidean projection onto P by Dykstra's alternating projections between
/// the box [0, upper] and the cost set {c(y) <= k}.
std::vector<double> dykstra_project(const BudgetModel& budget, std::span<const double> z,
                                    std::uint64_t max_iterations = 100000, double tol = 1e-15);

/// argmin_{y in P} eta*lambda*||y||_1 + 1/2 ||z - y||^2 by projected gradient
/// (step 1/2, Dykstra projections) until the iterates stop moving.
std::vector<double> qp_prox_one_norm(const BudgetModel& budget, std::span<const double> z, double eta,
                                     std::uint64_t max_iterations = 100000);

/// argmin_{y in P} eta*lambda*||y||_2 + 1/2 ||z - y||^2 by bisection on the
/// radius r of eta*lambda*r + 1/2 dist^2(z, P cap B(r)).
std::vector<double> radius_prox_two_norm(const BudgetModel& budget, std::span<const double> z, double eta);

/// Dense-grid maximum of exact g + s over the lattice {i * resolution} inside
/// P. Supports d <= 3.
struct GridOptimum {
  double value;
  std::vector<double> x;
};
GridOptimum grid_opt(const Graph& graph, const StrategyModel& strategy, const BudgetModel& budget,
                     double resolution);

/// Maximum over a lattice for an arbitrary objective, d <= 3.
GridOptimum grid_max(const BudgetModel& budget, double resolution,
                     const std::function<double(std::span<const double>)>& f);

/// Central differences (f(x + h e_j) - f(x - h e_j)) / 2h.
std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double step);

/// max_j |a_j - b_j| / max(1, |b_j|).
double max_relative_error(std::span<const double> a, std::span<const double> b);
double max_abs_error(std::span<const double> a, std::span<const double> b);

struct OracleOutcome {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

struct OracleOptions {
  std::uint64_t seed = 20240501;
  /// Added to every prox/projection output before comparison; a nonzero
  /// value must make the prox oracle fail.
  double prox_shift = 0.0;
  int workers = 0;
};

/// Runs the built-in oracle fixtures.
std::vector<OracleOutcome> run_oracle_suite(const OracleOptions& options = {});

}  // namespace cimbs::verify
