#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cimbs/budget.hpp"
#include "cimbs/graph.hpp"
#include "cimbs/objective.hpp"
#include "cimbs/rng.hpp"
#include "cimbs/strategy.hpp"

namespace cimbs {

enum class OptimizerKind { kProxGradRis, kUpperGradRis, kProxGradOrg, kGreedyRis };
enum class Termination { kTheory, kHeuristic };

inline constexpr std::uint64_t kDefaultIterationCap = 1'000'000;

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::kProxGradRis;
  Termination termination = Termination::kTheory;
  double heu_threshold = 0.3;
  double greedy_step = 0.1;
  std::uint64_t iteration_cap = kDefaultIterationCap;
  /// Replaces the schedule's step (eta for the proximal routes, the Delta / L
  /// factor for the subgradient route).
  std::optional<double> step_override;
  /// Replaces the theory iteration count.
  std::optional<std::uint64_t> iterations_override;
  /// Monte Carlo sims per checkpoint when selecting the best iterate of the
  /// stochastic route.
  std::uint64_t checkpoint_sims = 200;

  /// 1/2, 1 - 1/e, 1/2 for the gradient routes under theory termination;
  /// nullopt for greedy and for heuristic termination.
  std::optional<double> declared_alpha() const;
  /// The ratio of the underlying iteration rule (greedy counts as 1 - 1/e),
  /// used to size samples even when no guarantee is declared.
  double sizing_alpha() const;
};

/// Same iteration rule, stopped once consecutive objective values differ by
/// less than `threshold`. ConfigError unless threshold > 0.
OptimizerSpec heuristic_wrap(OptimizerSpec inner, double threshold = 0.3);

std::string to_string(OptimizerKind kind);

struct Trace {
  /// Objective of every recorded iterate; index 0 is the start point.
  std::vector<double> values;
  std::size_t best_index = 0;
  double best_value = 0.0;
  std::vector<double> best_x;
  std::uint64_t iterations = 0;
  /// Iteration budget from the schedule before capping.
  std::uint64_t planned_iterations = 0;
  bool truncated = false;

  /// Appends a value; keeps the running maximum (first index on ties).
  void record(double value, std::span<const double> x);
};

struct OptimizerResult {
  std::vector<double> x;
  Trace trace;
  /// (hat_g_R + s)(x); for the stochastic route, the checkpoint estimate.
  double hat_value = 0.0;
  /// (bar_g_R + s)(x) for the subgradient route.
  std::optional<double> bar_value;
};

/// x+ = prox_{-eta s}(x + eta grad hat_g(x)), eta = 1/beta,
/// T = ceil(3 beta Delta^2 / (4 target)). Best iterate by hat_g + s.
OptimizerResult proximal_gradient(const ObjectiveBundle& bundle, std::span<const double> x0, double target,
                                  const OptimizerSpec& spec = {});

/// x+ = project(x + eta_t (subgrad bar_g(x) - lambda grad c(x))),
/// eta_t = Delta / (L sqrt(t)), T = ceil(9 (Delta L)^2 / target^2). Best
/// iterate by bar_g + s.
OptimizerResult projected_subgradient(const ObjectiveBundle& bundle, std::span<const double> x0, double target,
                                      const OptimizerSpec& spec = {});

/// Stochastic proximal gradient on g + s with step
/// mu_t = 1 / (beta_g + (2 sqrt(2) L_h n^2 / Delta) sqrt(t)),
/// beta_g = beta_h n^2 + 2 L_h^2 n^3. The best iterate is picked by Monte
/// Carlo estimates of g + s at every max(1, T/50)-th iterate and at the end.
/// Gradient draws use `gradient_streams`, checkpoints `checkpoint_streams`.
OptimizerResult stochastic_proximal_gradient(const Graph& graph, const StrategyModel& strategy,
                                             const BudgetModel& budget, std::span<const double> x0,
                                             std::uint64_t iterations, const OptimizerSpec& spec,
                                             const StreamFamily& gradient_streams,
                                             const StreamFamily& checkpoint_streams, int workers = 0);

/// Coordinate greedy on hat_g + s from 0 with increments of `spec.greedy_step`;
/// stops when no increment is feasible or no increment gains. Ties go to the
/// lowest dimension.
OptimizerResult greedy_ris(const ObjectiveBundle& bundle, const OptimizerSpec& spec = {});

/// Dispatches on spec.kind for the RR-set routes. ConfigError for the
/// stochastic route, which does not run on RR sets.
OptimizerResult run_ris_optimizer(const ObjectiveBundle& bundle, double target, const OptimizerSpec& spec);

}  // namespace cimbs
