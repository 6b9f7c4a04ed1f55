#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "cimbs/graph.hpp"
#include "cimbs/rng.hpp"
#include "cimbs/strategy.hpp"

namespace cimbs {

/// One realization of the independent cascade: edge e is live iff alive[e].
struct LiveEdgeGraph {
  const Graph* graph = nullptr;
  std::vector<std::uint8_t> alive;  // size m
};

struct SpreadEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t num_sims = 0;
};

/// Reusable BFS state. Visited marks are epoch stamps, so a reset is O(1).
class BfsWorkspace {
 public:
  explicit BfsWorkspace(std::size_t n = 0) : stamp_(n, 0) {}

  void reset(std::size_t n) {
    if (stamp_.size() != n) {
      stamp_.assign(n, 0);
      epoch_ = 0;
    }
    if (++epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      epoch_ = 1;
    }
    queue.clear();
  }
  bool visited(NodeId v) const { return stamp_[v] == epoch_; }
  /// Marks v; returns false if it was already marked.
  bool mark(NodeId v) {
    if (stamp_[v] == epoch_) return false;
    stamp_[v] = epoch_;
    return true;
  }

  std::vector<NodeId> queue;

 private:
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

LiveEdgeGraph sample_live_edge(const Graph& graph, Rng& rng);

/// Number of nodes reachable from `seeds` along live edges, seeds included.
std::size_t spread_on(const LiveEdgeGraph& live, std::span<const NodeId> seeds);
std::size_t spread_on(const LiveEdgeGraph& live, std::span<const NodeId> seeds, BfsWorkspace& ws);

/// |reach(u') \ reach(seeds)| in the live-edge graph; 0 if u' is a seed.
std::size_t marginal_gain_on(const LiveEdgeGraph& live, NodeId u_prime, std::span<const NodeId> seeds);

/// Spread of `seeds` in a live-edge graph sampled lazily: each edge is
/// flipped when the forward BFS first reaches its source, which has the same
/// law as sampling the whole graph first.
std::size_t sample_spread(const Graph& graph, std::span<const NodeId> seeds, Rng& rng, BfsWorkspace& ws);

/// Includes v independently with probability h_v(x).
std::vector<NodeId> sample_seed_set(const StrategyModel& strategy, std::span<const double> x, Rng& rng);

/// Monte Carlo estimate of sigma(seeds). Simulation i uses streams.at(i);
/// the result does not depend on `workers` (0 = hardware parallelism).
SpreadEstimate estimate_sigma(const Graph& graph, std::span<const NodeId> seeds, std::uint64_t num_sims,
                              const StreamFamily& streams, int workers = 0);

/// Monte Carlo estimate of g(x) = E_S[sigma(S)], S drawn from h(x).
SpreadEstimate estimate_g(const Graph& graph, const StrategyModel& strategy, std::span<const double> x,
                          std::uint64_t num_sims, const StreamFamily& streams, int workers = 0);

/// Sample mean and standard error from exact integer sums.
SpreadEstimate make_estimate(std::uint64_t num_sims, std::uint64_t sum, unsigned __int128 sum_sq);

inline constexpr std::size_t kExactMaxEdges = 20;
inline constexpr std::size_t kExactMaxNodes = 64;
inline constexpr std::size_t kExactGradMaxNodes = 10;
inline constexpr std::size_t kExactGradMaxEdges = 16;

/// Distribution of reverse-reachable sets under full live-edge enumeration:
/// g(x) = sum_k weight_k * (1 - prod_{u in mask_k} (1 - h_u(x))), where the
/// weights already include the sum over roots.
class ExactInfluence {
 public:
  /// EnumerationLimitError if m > 20 or n > 64.
  explicit ExactInfluence(const Graph& graph);

  double g(const StrategyModel& strategy, std::span<const double> x) const;
  /// Same, from precomputed activation probabilities.
  double g_from_h(std::span<const double> h) const;

  struct Entry {
    std::uint64_t mask;
    double weight;
  };
  const std::vector<Entry>& table() const { return table_; }

 private:
  std::size_t n_;
  std::vector<Entry> table_;
};

/// Exact sigma(S) for every seed set S (bit i = node i).
class ExactSpread {
 public:
  /// EnumerationLimitError if n > 10 or m > 16.
  explicit ExactSpread(const Graph& graph);

  double sigma(std::uint32_t set_mask) const { return sigma_[set_mask]; }
  std::size_t num_nodes() const { return n_; }

  /// sum_S P(S) sigma(S) with P the product law of h.
  double g_from_h(std::span<const double> h) const;
  /// f_{u'} = sum over S not containing u' of (sigma(S + u') - sigma(S)) * P(S | V \ u').
  std::vector<double> marginal_weights(std::span<const double> h) const;
  /// grad g(x) = sum_{u'} f_{u'} grad h_{u'}(x).
  std::vector<double> grad(const StrategyModel& strategy, std::span<const double> x) const;

 private:
  std::size_t n_;
  std::vector<double> sigma_;
};

double exact_g(const Graph& graph, const StrategyModel& strategy, std::span<const double> x);
std::vector<double> exact_grad_g(const Graph& graph, const StrategyModel& strategy, std::span<const double> x);

/// h_v(x) for every node.
std::vector<double> activation_vector(const StrategyModel& strategy, std::span<const double> x);

}  // namespace cimbs
