#include "cimbs/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "cimbs/errors.hpp"
#include "cimbs/parallel.hpp"

namespace cimbs {

namespace {

constexpr std::size_t kEntryChunk = 4096;
constexpr std::size_t kNodeChunk = 256;

std::uint64_t hash_set(std::span<const NodeId> s) {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL ^ s.size();
  for (NodeId v : s) {
    h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    h *= 0xBF58476D1CE4E5B9ULL;
  }
  return h;
}

/// Sum of per-chunk partial sums in chunk order.
template <class Term>
double chunked_sum(std::size_t count, std::size_t chunk, int workers, Term&& term) {
  const std::size_t chunks = chunk_count(count, chunk);
  std::vector<double> parts(chunks, 0.0);
  for_each_chunk(chunks, workers, [&](std::size_t c) {
    const std::size_t begin = c * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += term(i);
    parts[c] = s;
  });
  double total = 0.0;
  for (double p : parts) total += p;
  return total;
}

/// Per-node totals of contributions visited entry by entry. Entries are split
/// into at most kMaxGroups contiguous groups, each with its own node array,
/// and the groups are added in order; the grouping depends only on the sizes.
constexpr std::size_t kMaxGroups = 64;
constexpr std::size_t kGroupScratch = std::size_t{1} << 22;

template <class Visit>
std::vector<double> node_totals(std::size_t entries, std::size_t n, int workers, Visit&& visit) {
  std::size_t groups = std::min(kMaxGroups, std::max<std::size_t>(1, chunk_count(entries, kEntryChunk)));
  groups = std::max<std::size_t>(1, std::min(groups, kGroupScratch / std::max<std::size_t>(1, n)));
  const std::size_t per = chunk_count(entries, groups);
  std::vector<std::vector<double>> partial(groups);
  for_each_chunk(groups, workers, [&](std::size_t g) {
    partial[g].assign(n, 0.0);
    const std::size_t end = std::min(entries, (g + 1) * per);
    for (std::size_t e = g * per; e < end; ++e) visit(e, partial[g].data());
  });
  std::vector<double> total(n, 0.0);
  for (const auto& part : partial)
    for (std::size_t v = 0; v < n; ++v) total[v] += part[v];
  return total;
}

}  // namespace

ObjectiveBundle::ObjectiveBundle(const RRCollection& collection, const StrategyModel& strategy,
                                 const BudgetModel& budget, int workers)
    : strategy_(&strategy),
      budget_(&budget),
      workers_(workers),
      n_(strategy.num_nodes()),
      theta_(collection.size()),
      nu1_(collection.nu1()),
      nu2_(collection.nu2()),
      nu3_(collection.nu3()) {
  if (collection.empty()) throw ConfigError("objective needs at least one RR set");
  if (collection.num_nodes() != n_) throw ConfigError("RR collection and strategy disagree on n");
  if (strategy.dim() != budget.dim()) throw ConfigError("strategy and budget disagree on d");
  scale_ = static_cast<double>(n_) / static_cast<double>(theta_);

  // Merge identical sets, keeping first-occurrence order.
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets;
  std::vector<NodeId> sorted;
  std::vector<NodeId> sorted_other;
  for (std::size_t i = 0; i < collection.size(); ++i) {
    const auto s = collection.set(i);
    sorted.assign(s.begin(), s.end());
    std::sort(sorted.begin(), sorted.end());
    auto& bucket = buckets[hash_set(sorted)];
    bool merged = false;
    for (std::uint32_t e : bucket) {
      const auto other = entry(e);
      if (other.size() != sorted.size()) continue;
      if (std::equal(other.begin(), other.end(), sorted.begin())) {
        ++mult_[e];
        merged = true;
        break;
      }
    }
    if (merged) continue;
    bucket.push_back(static_cast<std::uint32_t>(mult_.size()));
    nodes_.insert(nodes_.end(), sorted.begin(), sorted.end());
    offsets_.push_back(nodes_.size());
    mult_.push_back(1);
  }

  inv_offsets_.assign(n_ + 1, 0);
  for (NodeId v : nodes_) ++inv_offsets_[v + 1];
  std::partial_sum(inv_offsets_.begin(), inv_offsets_.end(), inv_offsets_.begin());
  inv_.resize(nodes_.size());
  std::vector<std::uint64_t> cursor(inv_offsets_.begin(), inv_offsets_.end() - 1);
  for (std::size_t e = 0; e < mult_.size(); ++e)
    for (NodeId v : entry(e)) inv_[cursor[v]++] = static_cast<std::uint32_t>(e);
}

const IndependentActivation& ObjectiveBundle::independent() const {
  const auto* ind = strategy_->as_independent();
  if (ind == nullptr) throw UnsupportedModelError("the concave upper bound needs an independent activation model");
  return *ind;
}

void ObjectiveBundle::entry_products(std::span<const double> h, std::vector<double>& prod,
                                     std::vector<std::uint32_t>& zeros) const {
  prod.assign(mult_.size(), 1.0);
  zeros.assign(mult_.size(), 0);
  const std::size_t chunks = chunk_count(mult_.size(), kEntryChunk);
  for_each_chunk(chunks, workers_, [&](std::size_t c) {
    const std::size_t end = std::min(mult_.size(), (c + 1) * kEntryChunk);
    for (std::size_t e = c * kEntryChunk; e < end; ++e) {
      double p = 1.0;
      std::uint32_t z = 0;
      for (NodeId v : entry(e)) {
        const double f = 1.0 - h[v];
        if (f == 0.0) {
          ++z;
        } else {
          p *= f;
        }
      }
      prod[e] = p;
      zeros[e] = z;
    }
  });
}

double ObjectiveBundle::hat_g_from_h(std::span<const double> h) const {
  const double total = chunked_sum(mult_.size(), kEntryChunk, workers_, [&](std::size_t e) {
    double miss = 1.0;
    for (NodeId v : entry(e)) miss *= 1.0 - h[v];
    return static_cast<double>(mult_[e]) * (1.0 - miss);
  });
  return scale_ * total;
}

double ObjectiveBundle::hat_g(std::span<const double> x) const {
  check_domain(*strategy_, x);
  return hat_g_from_h(activation_vector(*strategy_, x));
}

std::vector<double> ObjectiveBundle::grad_hat_g(std::span<const double> x) const {
  return hat_value_and_grad(x).second;
}

std::pair<double, std::vector<double>> ObjectiveBundle::hat_value_and_grad(std::span<const double> x) const {
  check_domain(*strategy_, x);
  const std::vector<double> h = activation_vector(*strategy_, x);
  std::vector<double> prod;
  std::vector<std::uint32_t> zeros;
  entry_products(h, prod, zeros);
  const double value = scale_ * chunked_sum(mult_.size(), kEntryChunk, workers_, [&](std::size_t e) {
    return static_cast<double>(mult_[e]) * (zeros[e] > 0 ? 1.0 : 1.0 - prod[e]);
  });

  // coef[v] = sum over entries R containing v of mult(R) * prod_{u in R, u != v} (1 - h_u).
  const std::vector<double> coef = node_totals(mult_.size(), n_, workers_, [&](std::size_t e, double* acc) {
    const double m = static_cast<double>(mult_[e]);
    for (NodeId v : entry(e)) {
      const double f = 1.0 - h[v];
      if (f == 0.0) {
        if (zeros[e] == 1) acc[v] += m * prod[e];
      } else if (zeros[e] == 0) {
        acc[v] += m * (prod[e] / f);
      }
    }
  });

  std::vector<double> grad(dim(), 0.0);
  std::vector<SparseEntry> partials;
  for (std::size_t v = 0; v < n_; ++v) {
    if (coef[v] == 0.0) continue;
    partials.clear();
    strategy_->gradient(static_cast<NodeId>(v), x, partials);
    for (const SparseEntry& p : partials) grad[p.dim] += scale_ * coef[v] * p.value;
  }
  return {value, std::move(grad)};
}

double ObjectiveBundle::bar_g(std::span<const double> x) const {
  const IndependentActivation& ind = independent();
  check_domain(ind, x);
  std::vector<double> qs(n_);
  for (std::size_t v = 0; v < n_; ++v) qs[v] = ind.q_sum(static_cast<NodeId>(v), x);
  const double total = chunked_sum(mult_.size(), kEntryChunk, workers_, [&](std::size_t e) {
    double s = 0.0;
    for (NodeId v : entry(e)) s += qs[v];
    return static_cast<double>(mult_[e]) * std::min(1.0, s);
  });
  return scale_ * total;
}

std::vector<double> ObjectiveBundle::subgrad_bar_g(std::span<const double> x) const {
  return bar_value_and_subgrad(x).second;
}

std::pair<double, std::vector<double>> ObjectiveBundle::bar_value_and_subgrad(std::span<const double> x) const {
  const IndependentActivation& ind = independent();
  check_domain(ind, x);
  std::vector<double> qs(n_);
  for (std::size_t v = 0; v < n_; ++v) qs[v] = ind.q_sum(static_cast<NodeId>(v), x);
  std::vector<double> sums(mult_.size(), 0.0);
  const double value = scale_ * chunked_sum(mult_.size(), kEntryChunk, workers_, [&](std::size_t e) {
    double s = 0.0;
    for (NodeId v : entry(e)) s += qs[v];
    sums[e] = s;
    return static_cast<double>(mult_[e]) * std::min(1.0, s);
  });
  // Entries with sum q >= 1 sit on the flat part of min(1, .) and contribute 0.
  const std::vector<double> counts = node_totals(mult_.size(), n_, workers_, [&](std::size_t e, double* acc) {
    if (!(sums[e] < 1.0)) return;
    const double m = static_cast<double>(mult_[e]);
    for (NodeId v : entry(e)) acc[v] += m;
  });
  std::vector<double> grad(dim(), 0.0);
  std::vector<SparseEntry> partials;
  for (std::size_t v = 0; v < n_; ++v) {
    if (counts[v] == 0.0) continue;
    partials.clear();
    ind.q_sum_gradient(static_cast<NodeId>(v), x, partials);
    for (const SparseEntry& p : partials) grad[p.dim] += scale_ * counts[v] * p.value;
  }
  return {value, std::move(grad)};
}

Decomposition ObjectiveBundle::decomposition(std::span<const double> x, Estimator which) const {
  Decomposition d;
  d.g_part = which == Estimator::kHat ? hat_g(x) : bar_g(x);
  d.s_part = budget_->saving(x);
  return d;
}

double ObjectiveBundle::combined(std::span<const double> x, Estimator which) const {
  return decomposition(x, which).total();
}

double ObjectiveBundle::smoothness() const {
  const double n = static_cast<double>(n_);
  const double lh = strategy_->lipschitz();
  return nu1_ * n * strategy_->smoothness() + nu2_ * n * lh * lh;
}

double ObjectiveBundle::hat_lipschitz() const {
  return nu1_ * static_cast<double>(n_) * strategy_->lipschitz();
}

double ObjectiveBundle::bar_lipschitz() const {
  const IndependentActivation& ind = independent();
  return nu1_ * static_cast<double>(n_) * std::sqrt(static_cast<double>(dim())) * ind.lipschitz_q() +
         budget_->lambda() * budget_->lipschitz_cost();
}

double hat_g(const ObjectiveBundle& bundle, std::span<const double> x) { return bundle.hat_g(x); }
std::vector<double> grad_hat_g(const ObjectiveBundle& bundle, std::span<const double> x) {
  return bundle.grad_hat_g(x);
}
double bar_g(const ObjectiveBundle& bundle, std::span<const double> x) { return bundle.bar_g(x); }
std::vector<double> subgrad_bar_g(const ObjectiveBundle& bundle, std::span<const double> x) {
  return bundle.subgrad_bar_g(x);
}
double combined(const ObjectiveBundle& bundle, std::span<const double> x, Estimator which) {
  return bundle.combined(x, which);
}

double proxgrad_lipschitz(std::size_t n, double lipschitz_h, double lambda, double lipschitz_c) {
  const double nd = static_cast<double>(n);
  return nd * nd * lipschitz_h + lambda * lipschitz_c;
}

double uppergrad_lipschitz(std::size_t n, std::size_t d, double lipschitz_q, double lambda, double lipschitz_c) {
  const double nd = static_cast<double>(n);
  return nd * nd * std::sqrt(static_cast<double>(d)) * lipschitz_q + lambda * lipschitz_c;
}

StochasticGradient::StochasticGradient(const Graph& graph, const StrategyModel& strategy)
    : graph_(&graph), strategy_(&strategy), ws_(graph.num_nodes()) {
  if (graph.num_nodes() != strategy.num_nodes()) throw ConfigError("strategy and graph disagree on n");
}

void StochasticGradient::draw(std::span<const double> x, std::span<const double> h, Rng& rng,
                              std::vector<double>& out) {
  const Graph& g = *graph_;
  const std::size_t n = g.num_nodes();
  out.assign(strategy_->dim(), 0.0);
  const auto u = static_cast<NodeId>(rng.below(n));

  ws_.reset(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (v == u) continue;
    if (rng.bernoulli(h[v]) && ws_.mark(static_cast<NodeId>(v))) ws_.queue.push_back(static_cast<NodeId>(v));
  }
  // Lazy live-edge sampling: an edge is flipped the first time its source is
  // expanded, and no node is expanded twice across the two searches.
  auto expand = [&](std::size_t from) {
    for (std::size_t head = from; head < ws_.queue.size(); ++head) {
      for (EdgeId e : g.out_edges(ws_.queue[head])) {
        const Edge& edge = g.edge(e);
        if (ws_.visited(edge.dst)) continue;
        if (!rng.bernoulli(edge.p)) continue;
        ws_.mark(edge.dst);
        ws_.queue.push_back(edge.dst);
      }
    }
  };
  expand(0);
  if (ws_.visited(u)) return;
  const std::size_t before = ws_.queue.size();
  ws_.mark(u);
  ws_.queue.push_back(u);
  expand(before);
  const double gain = static_cast<double>(ws_.queue.size() - before);

  partials_.clear();
  strategy_->gradient(u, x, partials_);
  for (const SparseEntry& p : partials_) out[p.dim] += static_cast<double>(n) * gain * p.value;
}

std::vector<double> stochastic_grad_g(const Graph& graph, const StrategyModel& strategy, std::span<const double> x,
                                      Rng& rng) {
  check_domain(strategy, x);
  StochasticGradient sampler(graph, strategy);
  const std::vector<double> h = activation_vector(strategy, x);
  std::vector<double> out;
  sampler.draw(x, h, rng, out);
  return out;
}

}  // namespace cimbs
