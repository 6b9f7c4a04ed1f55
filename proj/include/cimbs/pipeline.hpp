#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cimbs/budget.hpp"
#include "cimbs/graph.hpp"
#include "cimbs/objective.hpp"
#include "cimbs/optimize.hpp"
#include "cimbs/rrset.hpp"
#include "cimbs/strategy.hpp"

namespace cimbs {

struct SolveConfig {
  const Graph* graph = nullptr;
  const StrategyModel* strategy = nullptr;
  const BudgetModel* budget = nullptr;
  OptimizerSpec optimizer;
  double epsilon = 0.3;
  double ell = 1.0;
  ResampleMode resample = ResampleMode::kReuse;
  std::uint64_t seed = 1;
  std::uint64_t eval_sims = 1000;
  std::uint64_t eval_runs = 1;
  std::uint64_t theta_cap = 10'000'000;
  /// Iterations of the stochastic route.
  std::uint64_t org_iterations = 10'000;
  int workers = 0;
};

struct EvalStats {
  /// Mean of g + s over runs; each run averages `sims` simulations.
  double mean = 0.0;
  /// Sample standard deviation of the per-run means (0 for one run).
  double std_dev = 0.0;
  /// Standard error of the mean over all runs x sims simulations.
  double std_error = 0.0;
  Decomposition parts;
  std::uint64_t sims = 0;
  std::uint64_t runs = 0;
};

struct RunReport {
  Trace trace;
  std::uint64_t rr_sets = 0;
  double lb = 1.0;
  std::size_t sampling_rounds = 0;
  std::vector<std::uint64_t> theta_history;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double nu1 = 0.0;
  double nu2 = 0.0;
  double nu3 = 0.0;
  /// Objective of the returned x on the final RR sets (hat_g + s), or the
  /// checkpoint estimate for the stochastic route.
  double optimizer_value = 0.0;
  std::uint64_t iterations = 0;
  bool truncated = false;
  double seconds_sampling = 0.0;
  double seconds_optimize = 0.0;
  double seconds_evaluate = 0.0;
};

struct Solution {
  std::vector<double> x;
  EvalStats evaluation;
  RunReport report;
};

/// Monte Carlo statistics of g(x) + s(x); s is exact. Run r uses
/// streams.child(r); results do not depend on `workers`.
EvalStats evaluate(const Graph& graph, const StrategyModel& strategy, const BudgetModel& budget,
                   std::span<const double> x, std::uint64_t sims, std::uint64_t runs, const StreamFamily& streams,
                   int workers = 0);

/// Lipschitz constants L1 = L2 used for sample sizing by the RR-set routes.
double sizing_lipschitz(const SolveConfig& config);

/// Sampling followed by the optimizer on the final RR sets with additive
/// target epsilon * LB, then an out-of-sample evaluation. The stochastic
/// route skips sampling and runs on the original objective.
Solution solve(const SolveConfig& config);

}  // namespace cimbs
