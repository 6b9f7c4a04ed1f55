#include "cimbs/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "cimbs/diffusion.hpp"
#include "cimbs/errors.hpp"

namespace cimbs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void validate(const SolveConfig& c) {
  if (c.graph == nullptr || c.strategy == nullptr || c.budget == nullptr)
    throw ConfigError("solve needs a graph, a strategy and a budget");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(c.ell > 0.0)) throw ConfigError("ell must be positive");
  if (c.graph->num_nodes() != c.strategy->num_nodes()) throw ConfigError("graph and strategy disagree on n");
  if (c.strategy->dim() != c.budget->dim()) throw ConfigError("strategy and budget disagree on d");
  if (c.optimizer.kind == OptimizerKind::kUpperGradRis && c.strategy->as_independent() == nullptr)
    throw ConfigError("uppergrad_ris needs an independent activation model");
  if (c.eval_sims == 0 || c.eval_runs == 0) throw ConfigError("evaluation needs sims >= 1 and runs >= 1");
}

}  // namespace

EvalStats evaluate(const Graph& graph, const StrategyModel& strategy, const BudgetModel& budget,
                   std::span<const double> x, std::uint64_t sims, std::uint64_t runs, const StreamFamily& streams,
                   int workers) {
  if (sims == 0 || runs == 0) throw ConfigError("evaluation needs sims >= 1 and runs >= 1");
  EvalStats out;
  out.sims = sims;
  out.runs = runs;
  const double s = budget.saving(x);
  double mean_sum = 0.0;
  std::vector<double> means;
  double pooled_var = 0.0;
  for (std::uint64_t r = 0; r < runs; ++r) {
    const SpreadEstimate est = estimate_g(graph, strategy, x, sims, streams.child(r), workers);
    means.push_back(est.mean);
    mean_sum += est.mean;
    pooled_var += est.std_error * est.std_error;
  }
  const double g = mean_sum / static_cast<double>(runs);
  double ss = 0.0;
  for (double m : means) ss += (m - g) * (m - g);
  out.std_dev = runs > 1 ? std::sqrt(ss / static_cast<double>(runs - 1)) : 0.0;
  out.std_error = std::sqrt(pooled_var) / static_cast<double>(runs);
  out.parts = {g, s};
  out.mean = g + s;
  return out;
}

double sizing_lipschitz(const SolveConfig& c) {
  const BudgetModel& b = *c.budget;
  const std::size_t n = c.graph->num_nodes();
  if (c.optimizer.kind == OptimizerKind::kUpperGradRis) {
    const auto* ind = c.strategy->as_independent();
    return uppergrad_lipschitz(n, b.dim(), ind->lipschitz_q(), b.lambda(), b.lipschitz_cost());
  }
  return proxgrad_lipschitz(n, c.strategy->lipschitz(), b.lambda(), b.lipschitz_cost());
}

Solution solve(const SolveConfig& c) {
  validate(c);
  const Graph& graph = *c.graph;
  const StrategyModel& strategy = *c.strategy;
  const BudgetModel& budget = *c.budget;
  Solution sol;
  RunReport& rep = sol.report;

  if (c.optimizer.kind == OptimizerKind::kProxGradOrg) {
    const auto start = Clock::now();
    const std::vector<double> x0(budget.dim(), 0.0);
    OptimizerResult res = stochastic_proximal_gradient(
        graph, strategy, budget, x0, c.org_iterations, c.optimizer,
        StreamFamily(c.seed, StreamPurpose::kStochasticGradient),
        StreamFamily(c.seed, StreamPurpose::kIterateEvaluation), c.workers);
    rep.seconds_optimize = seconds_since(start);
    sol.x = std::move(res.x);
    rep.optimizer_value = res.hat_value;
    rep.iterations = res.trace.iterations;
    rep.truncated = res.trace.truncated;
    rep.trace = std::move(res.trace);
  } else {
    const double L = sizing_lipschitz(c);
    SamplingParams params;
    params.epsilon = c.epsilon;
    params.ell = c.ell;
    params.L1 = L;
    params.L2 = L;
    params.alpha = c.optimizer.sizing_alpha();
    params.mode = c.resample;
    params.theta_cap = c.theta_cap;
    params.workers = c.workers;
    GradientAlgorithm algorithm = [&](const RRCollection& rr, double target) {
      const ObjectiveBundle bundle(rr, strategy, budget, c.workers);
      OptimizerResult res = run_ris_optimizer(bundle, target, c.optimizer);
      return InnerResult{std::move(res.x), res.hat_value, res.trace.iterations, res.trace.truncated};
    };

    auto start = Clock::now();
    SamplingOutput sampled =
        sampling_procedure(graph, budget, params, algorithm, StreamFamily(c.seed, StreamPurpose::kRoundSets),
                           StreamFamily(c.seed, StreamPurpose::kFinalSets));
    rep.seconds_sampling = seconds_since(start);
    rep.lb = sampled.lb;
    rep.sampling_rounds = sampled.loop_rounds;
    rep.theta_history = sampled.theta_history;
    rep.theta1 = sampled.theta1;
    rep.theta2 = sampled.theta2;
    rep.rr_sets = sampled.collection.size();
    rep.nu1 = sampled.collection.nu1();
    rep.nu2 = sampled.collection.nu2();
    rep.nu3 = sampled.collection.nu3();

    start = Clock::now();
    const ObjectiveBundle bundle(sampled.collection, strategy, budget, c.workers);
    sampled.collection = RRCollection();
    OptimizerResult res = run_ris_optimizer(bundle, c.epsilon * sampled.lb, c.optimizer);
    rep.seconds_optimize = seconds_since(start);
    sol.x = std::move(res.x);
    rep.optimizer_value = res.hat_value;
    rep.iterations = res.trace.iterations;
    rep.truncated = res.trace.truncated;
    rep.trace = std::move(res.trace);
  }

  const auto start = Clock::now();
  sol.evaluation = evaluate(graph, strategy, budget, sol.x, c.eval_sims, c.eval_runs,
                            StreamFamily(c.seed, StreamPurpose::kEvaluation), c.workers);
  rep.seconds_evaluate = seconds_since(start);
  return sol;
}

}  // namespace cimbs
