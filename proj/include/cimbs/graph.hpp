#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cimbs {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

struct Edge {
  NodeId src;
  NodeId dst;
  double p;

  friend bool operator==(const Edge&, const Edge&) = default;
};

enum class WeightMode { kExplicit, kWeightedCascade };

enum class SyntheticKind { kErdosRenyi, kScaleFreeLike };

/// Directed influence graph with dense 0-based node ids. Immutable after
/// construction; out- and in-adjacency hold edge indices.
class Graph {
 public:
  Graph() = default;
  /// Builds adjacency from `edges`. Duplicate (src, dst) pairs keep the first
  /// occurrence. Throws RangeError on an endpoint >= n or p outside [0, 1].
  Graph(std::size_t n, std::vector<Edge> edges);

  std::size_t num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[e]; }

  std::span<const EdgeId> out_edges(NodeId v) const {
    return {out_index_.data() + out_offsets_[v], out_index_.data() + out_offsets_[v + 1]};
  }
  std::span<const EdgeId> in_edges(NodeId v) const {
    return {in_index_.data() + in_offsets_[v], in_index_.data() + in_offsets_[v + 1]};
  }
  std::size_t in_degree(NodeId v) const { return in_offsets_[v + 1] - in_offsets_[v]; }
  std::size_t out_degree(NodeId v) const { return out_offsets_[v + 1] - out_offsets_[v]; }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<EdgeId> out_index_;
  std::vector<std::size_t> in_offsets_{0};
  std::vector<EdgeId> in_index_;
};

/// Reads the edge-list text format: '#' comment lines, a header "n m", then m
/// lines "src dst [p]". With kWeightedCascade the p column is optional and
/// ignored; probabilities become 1/indeg(dst).
Graph load_edge_list(std::istream& in, WeightMode mode);
Graph load_edge_list_file(const std::string& path, WeightMode mode);

/// Writes the format read by load_edge_list, probabilities at full precision.
void write_edge_list(std::ostream& out, const Graph& graph);

/// p(u, v) = 1 / indeg(v) for every edge.
Graph assign_weighted_cascade(const Graph& graph);

/// Deterministic synthetic graphs with weighted-cascade probabilities.
///   kErdosRenyi: each ordered pair (u, v), u != v, independently with
///     probability `param` in [0, 1].
///   kScaleFreeLike: preferential attachment; each new node links to
///     round(param) >= 1 earlier nodes chosen proportionally to degree + 1,
///     with edges in both directions.
Graph generate_synthetic(SyntheticKind kind, std::size_t n, double param, std::uint64_t seed);

}  // namespace cimbs
