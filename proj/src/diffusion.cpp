#include "cimbs/diffusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <unordered_map>

#include "cimbs/errors.hpp"
#include "cimbs/parallel.hpp"

namespace cimbs {

namespace {

constexpr std::size_t kSimChunk = 2048;

std::size_t live_bfs(const LiveEdgeGraph& live, std::span<const NodeId> seeds, BfsWorkspace& ws) {
  const Graph& g = *live.graph;
  ws.reset(g.num_nodes());
  for (NodeId s : seeds)
    if (ws.mark(s)) ws.queue.push_back(s);
  for (std::size_t head = 0; head < ws.queue.size(); ++head) {
    for (EdgeId e : g.out_edges(ws.queue[head])) {
      if (!live.alive[e]) continue;
      const NodeId w = g.edge(e).dst;
      if (ws.mark(w)) ws.queue.push_back(w);
    }
  }
  return ws.queue.size();
}

struct Sums {
  std::uint64_t sum = 0;
  unsigned __int128 sum_sq = 0;
};

template <class Draw>
SpreadEstimate run_simulations(std::uint64_t num_sims, std::size_t n, int workers, Draw&& draw) {
  if (num_sims == 0) throw ConfigError("num_sims must be >= 1");
  const std::size_t chunks = chunk_count(num_sims, kSimChunk);
  std::vector<Sums> parts(chunks);
  for_each_chunk(chunks, workers, [&](std::size_t c) {
    BfsWorkspace ws(n);
    const std::uint64_t begin = c * kSimChunk;
    const std::uint64_t end = std::min<std::uint64_t>(num_sims, begin + kSimChunk);
    Sums s;
    for (std::uint64_t i = begin; i < end; ++i) {
      const std::uint64_t v = draw(i, ws);
      s.sum += v;
      s.sum_sq += static_cast<unsigned __int128>(v) * v;
    }
    parts[c] = s;
  });
  Sums total;
  for (const Sums& s : parts) {
    total.sum += s.sum;
    total.sum_sq += s.sum_sq;
  }
  return make_estimate(num_sims, total.sum, total.sum_sq);
}

}  // namespace

SpreadEstimate make_estimate(std::uint64_t num_sims, std::uint64_t sum, unsigned __int128 sum_sq) {
  SpreadEstimate est;
  est.num_sims = num_sims;
  const long double nn = static_cast<long double>(num_sims);
  est.mean = static_cast<double>(static_cast<long double>(sum) / nn);
  if (num_sims > 1) {
    // N * sum_sq - sum^2 is exact in 128 bits for the sizes used here.
    const unsigned __int128 s2 = static_cast<unsigned __int128>(sum) * sum;
    const unsigned __int128 scaled = static_cast<unsigned __int128>(num_sims) * sum_sq;
    const long double num = scaled >= s2 ? static_cast<long double>(scaled - s2) : 0.0L;
    const long double var = num / (nn * (nn - 1.0L));
    est.std_error = static_cast<double>(std::sqrt(var / nn));
  }
  return est;
}

LiveEdgeGraph sample_live_edge(const Graph& graph, Rng& rng) {
  LiveEdgeGraph live{&graph, std::vector<std::uint8_t>(graph.num_edges(), 0)};
  for (std::size_t e = 0; e < graph.num_edges(); ++e) live.alive[e] = rng.bernoulli(graph.edge(e).p);
  return live;
}

std::size_t spread_on(const LiveEdgeGraph& live, std::span<const NodeId> seeds, BfsWorkspace& ws) {
  return live_bfs(live, seeds, ws);
}

std::size_t spread_on(const LiveEdgeGraph& live, std::span<const NodeId> seeds) {
  BfsWorkspace ws(live.graph->num_nodes());
  return live_bfs(live, seeds, ws);
}

std::size_t marginal_gain_on(const LiveEdgeGraph& live, NodeId u_prime, std::span<const NodeId> seeds) {
  if (std::find(seeds.begin(), seeds.end(), u_prime) != seeds.end()) return 0;
  const Graph& g = *live.graph;
  BfsWorkspace ws(g.num_nodes());
  live_bfs(live, seeds, ws);
  if (ws.visited(u_prime)) return 0;
  // Continue the same search from u'; only newly marked nodes are counted.
  const std::size_t before = ws.queue.size();
  ws.mark(u_prime);
  ws.queue.push_back(u_prime);
  for (std::size_t head = before; head < ws.queue.size(); ++head) {
    for (EdgeId e : g.out_edges(ws.queue[head])) {
      if (!live.alive[e]) continue;
      const NodeId w = g.edge(e).dst;
      if (ws.mark(w)) ws.queue.push_back(w);
    }
  }
  return ws.queue.size() - before;
}

std::size_t sample_spread(const Graph& graph, std::span<const NodeId> seeds, Rng& rng, BfsWorkspace& ws) {
  ws.reset(graph.num_nodes());
  for (NodeId s : seeds)
    if (ws.mark(s)) ws.queue.push_back(s);
  for (std::size_t head = 0; head < ws.queue.size(); ++head) {
    for (EdgeId e : graph.out_edges(ws.queue[head])) {
      const Edge& edge = graph.edge(e);
      if (ws.visited(edge.dst)) continue;
      if (!rng.bernoulli(edge.p)) continue;
      ws.mark(edge.dst);
      ws.queue.push_back(edge.dst);
    }
  }
  return ws.queue.size();
}

std::vector<NodeId> sample_seed_set(const StrategyModel& strategy, std::span<const double> x, Rng& rng) {
  std::vector<NodeId> seeds;
  for (std::size_t v = 0; v < strategy.num_nodes(); ++v) {
    const double h = strategy.value(static_cast<NodeId>(v), x);
    if (rng.bernoulli(h)) seeds.push_back(static_cast<NodeId>(v));
  }
  return seeds;
}

SpreadEstimate estimate_sigma(const Graph& graph, std::span<const NodeId> seeds, std::uint64_t num_sims,
                              const StreamFamily& streams, int workers) {
  for (NodeId s : seeds)
    if (s >= graph.num_nodes()) throw RangeError("seed node out of range");
  return run_simulations(num_sims, graph.num_nodes(), workers, [&](std::uint64_t i, BfsWorkspace& ws) {
    Rng rng = streams.at(i);
    return static_cast<std::uint64_t>(sample_spread(graph, seeds, rng, ws));
  });
}

SpreadEstimate estimate_g(const Graph& graph, const StrategyModel& strategy, std::span<const double> x,
                          std::uint64_t num_sims, const StreamFamily& streams, int workers) {
  check_domain(strategy, x);
  if (strategy.num_nodes() != graph.num_nodes())
    throw ConfigError("strategy and graph disagree on the node count");
  const std::vector<double> h = activation_vector(strategy, x);
  std::vector<NodeId> active;
  for (std::size_t v = 0; v < h.size(); ++v)
    if (h[v] > 0.0) active.push_back(static_cast<NodeId>(v));
  return run_simulations(num_sims, graph.num_nodes(), workers, [&](std::uint64_t i, BfsWorkspace& ws) {
    Rng rng = streams.at(i);
    // Same law as sample_seed_set; nodes with h_v = 0 are never drawn.
    std::vector<NodeId> seeds;
    for (NodeId v : active)
      if (rng.bernoulli(h[v])) seeds.push_back(v);
    return static_cast<std::uint64_t>(sample_spread(graph, seeds, rng, ws));
  });
}

std::vector<double> activation_vector(const StrategyModel& strategy, std::span<const double> x) {
  std::vector<double> h(strategy.num_nodes());
  for (std::size_t v = 0; v < h.size(); ++v) h[v] = strategy.value(static_cast<NodeId>(v), x);
  return h;
}

namespace {

/// Calls visit(alive_mask, probability) for all 2^m live-edge graphs.
template <class Visit>
void enumerate_live_graphs(const Graph& graph, Visit&& visit) {
  const std::size_t m = graph.num_edges();
  const std::uint64_t total = std::uint64_t{1} << m;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double prob = 1.0;
    for (std::size_t e = 0; e < m && prob > 0.0; ++e) {
      const double p = graph.edge(static_cast<EdgeId>(e)).p;
      prob *= (mask >> e) & 1 ? p : 1.0 - p;
    }
    if (prob > 0.0) visit(mask, prob);
  }
}

/// Transitive closure along the live edges: reach[v] |= reach[u] for u -> v
/// when `reverse`, reach[u] |= reach[v] otherwise.
std::vector<std::uint64_t> closure(const Graph& graph, std::uint64_t live_mask, bool reverse) {
  const std::size_t n = graph.num_nodes();
  std::vector<std::uint64_t> reach(n);
  for (std::size_t v = 0; v < n; ++v) reach[v] = std::uint64_t{1} << v;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t e = 0; e < graph.num_edges(); ++e) {
      if (!((live_mask >> e) & 1)) continue;
      const Edge& edge = graph.edge(static_cast<EdgeId>(e));
      const NodeId to = reverse ? edge.dst : edge.src;
      const NodeId from = reverse ? edge.src : edge.dst;
      const std::uint64_t merged = reach[to] | reach[from];
      if (merged != reach[to]) {
        reach[to] = merged;
        changed = true;
      }
    }
  }
  return reach;
}

}  // namespace

ExactInfluence::ExactInfluence(const Graph& graph) : n_(graph.num_nodes()) {
  if (graph.num_edges() > kExactMaxEdges)
    throw EnumerationLimitError("exact_g enumerates at most " + std::to_string(kExactMaxEdges) +
                                " edges, graph has " + std::to_string(graph.num_edges()));
  if (n_ > kExactMaxNodes)
    throw EnumerationLimitError("exact_g supports at most " + std::to_string(kExactMaxNodes) + " nodes");
  std::unordered_map<std::uint64_t, double> acc;
  enumerate_live_graphs(graph, [&](std::uint64_t live, double prob) {
    for (std::uint64_t r : closure(graph, live, true)) acc[r] += prob;
  });
  table_.reserve(acc.size());
  for (const auto& [mask, w] : acc) table_.push_back({mask, w});
  std::sort(table_.begin(), table_.end(), [](const Entry& a, const Entry& b) { return a.mask < b.mask; });
}

double ExactInfluence::g_from_h(std::span<const double> h) const {
  double total = 0.0;
  for (const Entry& e : table_) {
    double miss = 1.0;
    for (std::uint64_t m = e.mask; m != 0; m &= m - 1) miss *= 1.0 - h[std::countr_zero(m)];
    total += e.weight * (1.0 - miss);
  }
  return total;
}

double ExactInfluence::g(const StrategyModel& strategy, std::span<const double> x) const {
  check_domain(strategy, x);
  return g_from_h(activation_vector(strategy, x));
}

ExactSpread::ExactSpread(const Graph& graph) : n_(graph.num_nodes()) {
  if (n_ > kExactGradMaxNodes || graph.num_edges() > kExactGradMaxEdges)
    throw EnumerationLimitError("exact gradient enumeration supports n <= " +
                                std::to_string(kExactGradMaxNodes) + " and m <= " +
                                std::to_string(kExactGradMaxEdges));
  const std::size_t subsets = std::size_t{1} << n_;
  sigma_.assign(subsets, 0.0);
  std::vector<std::uint64_t> cover(subsets);
  enumerate_live_graphs(graph, [&](std::uint64_t live, double prob) {
    const std::vector<std::uint64_t> fwd = closure(graph, live, false);
    cover[0] = 0;
    for (std::size_t s = 1; s < subsets; ++s) {
      const std::size_t low = static_cast<std::size_t>(std::countr_zero(s));
      cover[s] = cover[s & (s - 1)] | fwd[low];
      sigma_[s] += prob * std::popcount(cover[s]);
    }
  });
}

double ExactSpread::g_from_h(std::span<const double> h) const {
  double total = 0.0;
  const std::size_t subsets = sigma_.size();
  for (std::size_t s = 1; s < subsets; ++s) {
    double w = 1.0;
    for (std::size_t v = 0; v < n_ && w != 0.0; ++v) w *= (s >> v) & 1 ? h[v] : 1.0 - h[v];
    total += w * sigma_[s];
  }
  return total;
}

std::vector<double> ExactSpread::marginal_weights(std::span<const double> h) const {
  std::vector<double> f(n_, 0.0);
  const std::size_t subsets = sigma_.size();
  for (std::size_t u = 0; u < n_; ++u) {
    const std::size_t bit = std::size_t{1} << u;
    double acc = 0.0;
    for (std::size_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      double w = 1.0;
      for (std::size_t v = 0; v < n_ && w != 0.0; ++v) {
        if (v == u) continue;
        w *= (s >> v) & 1 ? h[v] : 1.0 - h[v];
      }
      acc += w * (sigma_[s | bit] - sigma_[s]);
    }
    f[u] = acc;
  }
  return f;
}

std::vector<double> ExactSpread::grad(const StrategyModel& strategy, std::span<const double> x) const {
  check_domain(strategy, x);
  const std::vector<double> f = marginal_weights(activation_vector(strategy, x));
  std::vector<double> out(strategy.dim(), 0.0);
  std::vector<SparseEntry> partials;
  for (std::size_t u = 0; u < n_; ++u) {
    partials.clear();
    strategy.gradient(static_cast<NodeId>(u), x, partials);
    for (const SparseEntry& p : partials) out[p.dim] += f[u] * p.value;
  }
  return out;
}

double exact_g(const Graph& graph, const StrategyModel& strategy, std::span<const double> x) {
  return ExactInfluence(graph).g(strategy, x);
}

std::vector<double> exact_grad_g(const Graph& graph, const StrategyModel& strategy, std::span<const double> x) {
  return ExactSpread(graph).grad(strategy, x);
}

}  // namespace cimbs
