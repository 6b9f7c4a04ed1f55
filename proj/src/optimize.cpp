#include "cimbs/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cimbs/diffusion.hpp"
#include "cimbs/errors.hpp"

namespace cimbs {

namespace {

constexpr double kOneMinusInvE = 1.0 - 0.36787944117144233;
constexpr double kGreedyTol = 1e-9;

/// Theory iteration count clamped to the cap; sets planned/truncated.
std::uint64_t resolve_iterations(double planned, const OptimizerSpec& spec, Trace& trace) {
  if (spec.iterations_override) planned = static_cast<double>(*spec.iterations_override);
  const double cap = static_cast<double>(spec.iteration_cap);
  if (!(planned <= cap)) {
    trace.planned_iterations = std::isfinite(planned) && planned < 1.8e19
                                   ? static_cast<std::uint64_t>(std::ceil(planned))
                                   : std::numeric_limits<std::uint64_t>::max();
    return spec.iteration_cap;
  }
  trace.planned_iterations = static_cast<std::uint64_t>(std::max(0.0, std::ceil(planned)));
  return trace.planned_iterations;
}

void require_start(const BudgetModel& budget, std::span<const double> x0) {
  if (!budget.is_feasible(x0)) throw DomainError("start point is not feasible");
}

void require_target(double target) {
  if (!(target > 0.0) || !std::isfinite(target)) throw ConfigError("additive error target must be positive");
}

bool heuristic_stop(const OptimizerSpec& spec, double value, double previous) {
  return spec.termination == Termination::kHeuristic && std::abs(value - previous) < spec.heu_threshold;
}

}  // namespace

std::optional<double> OptimizerSpec::declared_alpha() const {
  if (termination == Termination::kHeuristic) return std::nullopt;
  switch (kind) {
    case OptimizerKind::kProxGradRis:
    case OptimizerKind::kProxGradOrg:
      return 0.5;
    case OptimizerKind::kUpperGradRis:
      return kOneMinusInvE;
    case OptimizerKind::kGreedyRis:
      return std::nullopt;
  }
  return std::nullopt;
}

double OptimizerSpec::sizing_alpha() const {
  switch (kind) {
    case OptimizerKind::kProxGradRis:
    case OptimizerKind::kProxGradOrg:
      return 0.5;
    case OptimizerKind::kUpperGradRis:
    case OptimizerKind::kGreedyRis:
      return kOneMinusInvE;
  }
  return 0.5;
}

OptimizerSpec heuristic_wrap(OptimizerSpec inner, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("heuristic threshold must be positive");
  inner.termination = Termination::kHeuristic;
  inner.heu_threshold = threshold;
  return inner;
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kProxGradRis:
      return "proxgrad_ris";
    case OptimizerKind::kUpperGradRis:
      return "uppergrad_ris";
    case OptimizerKind::kProxGradOrg:
      return "proxgrad_org";
    case OptimizerKind::kGreedyRis:
      return "greedy_ris";
  }
  return "unknown";
}

void Trace::record(double value, std::span<const double> x) {
  if (values.empty() || value > best_value) {
    best_index = values.size();
    best_value = value;
    best_x.assign(x.begin(), x.end());
  }
  values.push_back(value);
}

OptimizerResult proximal_gradient(const ObjectiveBundle& bundle, std::span<const double> x0, double target,
                                  const OptimizerSpec& spec) {
  require_target(target);
  const BudgetModel& budget = bundle.budget();
  require_start(budget, x0);
  const double beta = bundle.smoothness();
  const double delta = budget.diameter();
  const double eta = spec.step_override ? *spec.step_override : (beta > 0.0 ? 1.0 / beta : 1.0);
  if (!(eta > 0.0)) throw ConfigError("step size must be positive");

  OptimizerResult res;
  Trace& trace = res.trace;
  const double planned = beta > 0.0 ? std::ceil(3.0 * beta * delta * delta / (4.0 * target)) : 1.0;
  const std::uint64_t T = resolve_iterations(planned, spec, trace);

  std::vector<double> x(x0.begin(), x0.end());
  auto [g, grad] = bundle.hat_value_and_grad(x);
  double value = g + budget.saving(x);
  trace.record(value, x);
  std::vector<double> z(x.size());
  bool stopped = false;
  for (std::uint64_t t = 1; t <= T; ++t) {
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = x[j] + eta * grad[j];
    x = budget.prox(z, eta);
    const double previous = value;
    std::tie(g, grad) = bundle.hat_value_and_grad(x);
    value = g + budget.saving(x);
    trace.record(value, x);
    trace.iterations = t;
    if (heuristic_stop(spec, value, previous)) {
      stopped = true;
      break;
    }
  }
  trace.truncated = !stopped && trace.planned_iterations > T;
  res.x = trace.best_x;
  res.hat_value = trace.best_value;
  return res;
}

OptimizerResult projected_subgradient(const ObjectiveBundle& bundle, std::span<const double> x0, double target,
                                      const OptimizerSpec& spec) {
  require_target(target);
  const BudgetModel& budget = bundle.budget();
  require_start(budget, x0);
  const double L = bundle.bar_lipschitz();
  const double delta = budget.diameter();
  const double factor = spec.step_override ? *spec.step_override : (L > 0.0 ? delta / L : 1.0);
  const double lambda = budget.lambda();

  OptimizerResult res;
  Trace& trace = res.trace;
  const double planned = std::ceil(9.0 * (delta * L) * (delta * L) / (target * target));
  const std::uint64_t T = resolve_iterations(planned, spec, trace);

  std::vector<double> x(x0.begin(), x0.end());
  auto [g, sg] = bundle.bar_value_and_subgrad(x);
  double value = g + budget.saving(x);
  trace.record(value, x);
  std::vector<double> z(x.size());
  bool stopped = false;
  for (std::uint64_t t = 1; t <= T; ++t) {
    const double eta = factor / std::sqrt(static_cast<double>(t));
    const std::vector<double> dc = budget.cost_subgradient(x);
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = x[j] + eta * (sg[j] - lambda * dc[j]);
    x = budget.project(z);
    const double previous = value;
    std::tie(g, sg) = bundle.bar_value_and_subgrad(x);
    value = g + budget.saving(x);
    trace.record(value, x);
    trace.iterations = t;
    if (heuristic_stop(spec, value, previous)) {
      stopped = true;
      break;
    }
  }
  trace.truncated = !stopped && trace.planned_iterations > T;
  res.x = trace.best_x;
  res.bar_value = trace.best_value;
  res.hat_value = bundle.combined(res.x, Estimator::kHat);
  return res;
}

OptimizerResult stochastic_proximal_gradient(const Graph& graph, const StrategyModel& strategy,
                                             const BudgetModel& budget, std::span<const double> x0,
                                             std::uint64_t iterations, const OptimizerSpec& spec,
                                             const StreamFamily& gradient_streams,
                                             const StreamFamily& checkpoint_streams, int workers) {
  require_start(budget, x0);
  if (spec.checkpoint_sims == 0) throw ConfigError("checkpoint sims must be >= 1");
  const double n = static_cast<double>(graph.num_nodes());
  const double lh = strategy.lipschitz();
  const double beta_g = strategy.smoothness() * n * n + 2.0 * lh * lh * n * n * n;
  const double delta = budget.diameter();
  const double growth = 2.0 * std::sqrt(2.0) * lh * n * n / delta;

  OptimizerResult res;
  Trace& trace = res.trace;
  const std::uint64_t T = resolve_iterations(static_cast<double>(iterations), spec, trace);
  const std::uint64_t every = std::max<std::uint64_t>(1, T / 50);

  auto checkpoint = [&](std::span<const double> x, std::uint64_t t) {
    const SpreadEstimate est =
        estimate_g(graph, strategy, x, spec.checkpoint_sims, checkpoint_streams.child(t), workers);
    return est.mean + budget.saving(x);
  };

  std::vector<double> x(x0.begin(), x0.end());
  double value = checkpoint(x, 0);
  trace.record(value, x);
  StochasticGradient sampler(graph, strategy);
  std::vector<double> v;
  std::vector<double> z(x.size());
  bool stopped = false;
  for (std::uint64_t t = 1; t <= T; ++t) {
    const std::vector<double> h = activation_vector(strategy, x);
    Rng rng = gradient_streams.at(t);
    sampler.draw(x, h, rng, v);
    double mu = spec.step_override ? *spec.step_override
                                   : 1.0 / (beta_g + growth * std::sqrt(static_cast<double>(t)));
    if (!(mu > 0.0) || !std::isfinite(mu)) mu = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = x[j] + mu * v[j];
    x = budget.prox(z, mu);
    trace.iterations = t;
    if (t % every == 0 || t == T) {
      const double previous = value;
      value = checkpoint(x, t);
      trace.record(value, x);
      if (heuristic_stop(spec, value, previous)) {
        stopped = true;
        break;
      }
    }
  }
  trace.truncated = !stopped && trace.planned_iterations > T;
  res.x = trace.best_x;
  res.hat_value = trace.best_value;
  return res;
}

OptimizerResult greedy_ris(const ObjectiveBundle& bundle, const OptimizerSpec& spec) {
  const double step = spec.greedy_step;
  if (!(step > 0.0)) throw ConfigError("greedy step must be positive");
  const StrategyModel& strategy = bundle.strategy();
  const BudgetModel& budget = bundle.budget();
  const std::size_t d = bundle.dim();
  const std::size_t n = bundle.num_nodes();
  const double lambda = budget.lambda();
  const bool one_norm = budget.kind() == CostKind::kOneNorm;
  const auto& upper = budget.upper();
  const auto& box = strategy.upper();

  OptimizerResult res;
  Trace& trace = res.trace;
  std::vector<double> x(d, 0.0);
  std::vector<double> h = activation_vector(strategy, x);
  double value = bundle.hat_g_from_h(h) + budget.saving(x);
  trace.record(value, x);

  const IndependentActivation* ind = strategy.as_independent();
  std::vector<std::vector<NodeId>> dim_nodes;
  std::vector<double> prod;
  std::vector<std::uint32_t> zeros;
  auto refresh_entry = [&](std::size_t e) {
    double p = 1.0;
    std::uint32_t z = 0;
    for (NodeId v : bundle.entry(e)) {
      const double f = 1.0 - h[v];
      if (f == 0.0) {
        ++z;
      } else {
        p *= f;
      }
    }
    prod[e] = p;
    zeros[e] = z;
  };
  if (ind != nullptr) {
    dim_nodes.resize(d);
    for (std::size_t v = 0; v < n; ++v)
      for (const auto& t : ind->terms(static_cast<NodeId>(v)))
        if (dim_nodes[t.dim].empty() || dim_nodes[t.dim].back() != v)
          dim_nodes[t.dim].push_back(static_cast<NodeId>(v));
    prod.resize(bundle.num_entries());
    zeros.resize(bundle.num_entries());
    for (std::size_t e = 0; e < bundle.num_entries(); ++e) refresh_entry(e);
  }

  std::vector<std::uint32_t> stamp(bundle.num_entries(), 0);
  std::uint32_t epoch = 0;
  std::vector<double> tmp_prod(bundle.num_entries());
  std::vector<std::uint32_t> tmp_zeros(bundle.num_entries());
  std::vector<std::uint32_t> touched;
  std::vector<double> new_h;

  // Gain in hat_g from moving x_j to `xj` (x itself is restored).
  auto hat_gain = [&](std::size_t j, double xj) {
    const double old = x[j];
    x[j] = xj;
    double gain = 0.0;
    if (ind == nullptr) {
      gain = bundle.hat_g_from_h(activation_vector(strategy, x)) - bundle.hat_g_from_h(h);
      x[j] = old;
      return gain;
    }
    if (++epoch == 0) {
      std::fill(stamp.begin(), stamp.end(), 0);
      epoch = 1;
    }
    touched.clear();
    for (NodeId v : dim_nodes[j]) {
      const double f_old = 1.0 - h[v];
      const double f_new = 1.0 - strategy.value(v, x);
      for (std::uint32_t e : bundle.entries_of(v)) {
        if (stamp[e] != epoch) {
          stamp[e] = epoch;
          tmp_prod[e] = prod[e];
          tmp_zeros[e] = zeros[e];
          touched.push_back(e);
        }
        if (f_old == 0.0) {
          --tmp_zeros[e];
        } else {
          tmp_prod[e] /= f_old;
        }
        if (f_new == 0.0) {
          ++tmp_zeros[e];
        } else {
          tmp_prod[e] *= f_new;
        }
      }
    }
    x[j] = old;
    double acc = 0.0;
    for (std::uint32_t e : touched) {
      const double miss_old = zeros[e] > 0 ? 0.0 : prod[e];
      const double miss_new = tmp_zeros[e] > 0 ? 0.0 : tmp_prod[e];
      acc += static_cast<double>(bundle.multiplicity(e)) * (miss_old - miss_new);
    }
    return bundle.scale() * acc;
  };

  // hat_gain(j, x_j + step) only changes when an entry of dimension j
  // changes, so cached gains stay valid until a neighbour moves.
  std::vector<double> cached_gain(d, 0.0);
  std::vector<double> cached_xj(d, -1.0);
  std::vector<std::uint8_t> valid(d, 0);
  std::vector<std::vector<std::uint32_t>> node_dims;
  if (ind != nullptr) {
    node_dims.resize(n);
    for (std::size_t j = 0; j < d; ++j)
      for (NodeId v : dim_nodes[j]) node_dims[v].push_back(static_cast<std::uint32_t>(j));
  }
  std::vector<std::uint32_t> entry_seen(bundle.num_entries(), 0);
  std::uint32_t entry_epoch = 0;

  double l1 = 0.0;
  double sq = 0.0;
  double hat = value - budget.saving(x);
  bool capped = true;

  auto apply_step = [&](std::size_t j, double xj, double hg) {
    l1 += xj - x[j];
    sq += xj * xj - x[j] * x[j];
    x[j] = xj;
    if (ind != nullptr) {
      for (NodeId v : dim_nodes[j]) h[v] = strategy.value(v, x);
      if (++entry_epoch == 0) {
        std::fill(entry_seen.begin(), entry_seen.end(), 0);
        entry_epoch = 1;
      }
      valid[j] = 0;
      for (NodeId v : dim_nodes[j]) {
        for (std::uint32_t e : bundle.entries_of(v)) {
          if (entry_seen[e] == entry_epoch) continue;
          entry_seen[e] = entry_epoch;
          refresh_entry(e);
          for (NodeId u : bundle.entry(e))
            for (std::uint32_t t : node_dims[u]) valid[t] = 0;
        }
      }
      hat += hg;
    } else {
      h = activation_vector(strategy, x);
      hat = bundle.hat_g_from_h(h);
    }
    value = hat + budget.saving(x);
  };

  if (ind != nullptr && one_norm) {
    // hat_g is DR-submodular and a step costs lambda * step under the
    // 1-norm, so a stale gain bounds the current one from above. Entries
    // are ordered by gain, then by lower dimension.
    struct Candidate {
      double gain;
      std::uint32_t dim;
      std::uint64_t round;
    };
    auto worse = [](const Candidate& a, const Candidate& b) {
      return a.gain < b.gain || (a.gain == b.gain && a.dim > b.dim);
    };
    std::vector<Candidate> heap;
    heap.reserve(d);
    const std::uint64_t never = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t j = 0; j < d; ++j)
      heap.push_back({std::numeric_limits<double>::infinity(), static_cast<std::uint32_t>(j), never});
    std::make_heap(heap.begin(), heap.end(), worse);
    for (std::uint64_t it = 0; it < spec.iteration_cap; ++it) {
      bool chosen = false;
      Candidate pick{};
      double pick_xj = 0.0, pick_hat = 0.0;
      while (!heap.empty()) {
        std::pop_heap(heap.begin(), heap.end(), worse);
        Candidate top = heap.back();
        heap.pop_back();
        const std::size_t j = top.dim;
        const double limit = std::min(upper[j], box[j]);
        if (x[j] + step > limit + kGreedyTol) continue;
        const double xj = std::min(limit, x[j] + step);
        if (l1 + (xj - x[j]) > budget.budget() + kGreedyTol) continue;
        const double hg = hat_gain(j, xj);
        const double gain = hg - lambda * (xj - x[j]);
        if (top.round == it || (heap.empty() || !worse(Candidate{gain, top.dim, it}, heap.front()))) {
          pick = {gain, top.dim, it};
          pick_xj = xj;
          pick_hat = hg;
          chosen = true;
          break;
        }
        heap.push_back({gain, top.dim, it});
        std::push_heap(heap.begin(), heap.end(), worse);
      }
      if (!chosen || !(pick.gain > 0.0)) {
        capped = false;
        break;
      }
      apply_step(pick.dim, pick_xj, pick_hat);
      trace.record(value, x);
      trace.iterations = it + 1;
      heap.push_back(pick);
      std::push_heap(heap.begin(), heap.end(), worse);
    }
  } else {
  for (std::uint64_t it = 0; it < spec.iteration_cap; ++it) {
    const double cost_now = one_norm ? l1 : std::sqrt(sq);
    double best_gain = -std::numeric_limits<double>::infinity();
    std::size_t best_j = d;
    double best_xj = 0.0;
    double best_hat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double limit = std::min(upper[j], box[j]);
      if (x[j] + step > limit + kGreedyTol) continue;
      const double xj = std::min(limit, x[j] + step);
      const double cost_new = one_norm ? l1 + (xj - x[j]) : std::sqrt(std::max(0.0, sq - x[j] * x[j] + xj * xj));
      if (cost_new > budget.budget() + kGreedyTol) continue;
      double hg;
      if (ind != nullptr && valid[j] && cached_xj[j] == xj) {
        hg = cached_gain[j];
      } else {
        hg = hat_gain(j, xj);
        cached_gain[j] = hg;
        cached_xj[j] = xj;
        valid[j] = 1;
      }
      const double gain = hg - lambda * (cost_new - cost_now);
      if (gain > best_gain) {
        best_gain = gain;
        best_j = j;
        best_xj = xj;
        best_hat = hg;
      }
    }
    if (best_j == d || !(best_gain > 0.0)) {
      capped = false;
      break;
    }
    apply_step(best_j, best_xj, best_hat);
    trace.record(value, x);
    trace.iterations = it + 1;
  }
  }
  trace.planned_iterations = trace.iterations;
  trace.truncated = capped;
  res.x = trace.best_x;
  res.hat_value = bundle.hat_g(res.x) + budget.saving(res.x);
  return res;
}

OptimizerResult run_ris_optimizer(const ObjectiveBundle& bundle, double target, const OptimizerSpec& spec) {
  const std::vector<double> x0(bundle.dim(), 0.0);
  switch (spec.kind) {
    case OptimizerKind::kProxGradRis:
      return proximal_gradient(bundle, x0, target, spec);
    case OptimizerKind::kUpperGradRis:
      return projected_subgradient(bundle, x0, target, spec);
    case OptimizerKind::kGreedyRis:
      return greedy_ris(bundle, spec);
    case OptimizerKind::kProxGradOrg:
      break;
  }
  throw ConfigError("the stochastic route runs on the original objective, not on RR sets");
}

}  // namespace cimbs
