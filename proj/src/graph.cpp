#include "cimbs/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>

#include "cimbs/errors.hpp"
#include "cimbs/rng.hpp"

namespace cimbs {

namespace {

std::uint64_t pair_key(NodeId src, NodeId dst) {
  return (static_cast<std::uint64_t>(src) << 32) | dst;
}

void build_csr(std::size_t n, const std::vector<Edge>& edges, bool by_src,
               std::vector<std::size_t>& offsets, std::vector<EdgeId>& index) {
  offsets.assign(n + 1, 0);
  for (const Edge& e : edges) ++offsets[(by_src ? e.src : e.dst) + 1];
  for (std::size_t v = 0; v < n; ++v) offsets[v + 1] += offsets[v];
  index.assign(edges.size(), 0);
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (EdgeId e = 0; e < edges.size(); ++e) {
    const NodeId key = by_src ? edges[e].src : edges[e].dst;
    index[cursor[key]++] = e;
  }
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
T parse_number(std::string_view tok, std::size_t line, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(tok) + "'");
  return value;
}

}  // namespace

Graph::Graph(std::size_t n, std::vector<Edge> edges) : n_(n) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges.size() * 2);
  edges_.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.src >= n || e.dst >= n)
      throw RangeError("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                       " has an endpoint >= n=" + std::to_string(n));
    if (!(e.p >= 0.0 && e.p <= 1.0))
      throw RangeError("edge probability " + std::to_string(e.p) + " outside [0,1]");
    if (seen.insert(pair_key(e.src, e.dst)).second) edges_.push_back(e);
  }
  build_csr(n_, edges_, true, out_offsets_, out_index_);
  build_csr(n_, edges_, false, in_offsets_, in_index_);
}

Graph load_edge_list(std::istream& in, WeightMode mode) {
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<Edge> edges;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    auto toks = split_ws(raw);
    if (toks.empty() || toks.front().front() == '#') continue;
    if (!have_header) {
      if (toks.size() != 2) throw ParseError(line_no, "expected header 'n m'");
      n = parse_number<std::size_t>(toks[0], line_no, "node count");
      m = parse_number<std::size_t>(toks[1], line_no, "edge count");
      have_header = true;
      edges.reserve(m);
      continue;
    }
    if (edges.size() == m) throw ParseError(line_no, "more edge lines than declared m");
    const bool need_p = mode == WeightMode::kExplicit;
    if (toks.size() < (need_p ? 3u : 2u) || toks.size() > 3)
      throw ParseError(line_no, need_p ? "expected 'src dst p'" : "expected 'src dst [p]'");
    const auto src = parse_number<std::uint64_t>(toks[0], line_no, "source");
    const auto dst = parse_number<std::uint64_t>(toks[1], line_no, "target");
    if (src >= n || dst >= n)
      throw RangeError("line " + std::to_string(line_no) + ": node index >= n=" +
                       std::to_string(n));
    double p = 1.0;
    if (toks.size() == 3) {
      p = parse_number<double>(toks[2], line_no, "probability");
      if (need_p && !(p >= 0.0 && p <= 1.0))
        throw RangeError("line " + std::to_string(line_no) + ": probability outside [0,1]");
    }
    if (!need_p) p = 1.0;
    edges.push_back({static_cast<NodeId>(src), static_cast<NodeId>(dst), p});
  }
  if (!have_header) throw ParseError(line_no, "missing header 'n m'");
  if (edges.size() != m)
    throw ParseError(line_no, "expected " + std::to_string(m) + " edges, found " +
                                  std::to_string(edges.size()));
  Graph g(n, std::move(edges));
  if (mode == WeightMode::kWeightedCascade) return assign_weighted_cascade(g);
  return g;
}

Graph load_edge_list_file(const std::string& path, WeightMode mode) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph file '" + path + "'");
  return load_edge_list(in, mode);
}

void write_edge_list(std::ostream& out, const Graph& graph) {
  out << graph.num_nodes() << ' ' << graph.num_edges() << '\n';
  char buf[64];
  for (const Edge& e : graph.edges()) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, e.p);
    out << e.src << ' ' << e.dst << ' ' << std::string_view(buf, ptr - buf) << '\n';
  }
}

Graph assign_weighted_cascade(const Graph& graph) {
  std::vector<Edge> edges = graph.edges();
  for (Edge& e : edges) e.p = 1.0 / static_cast<double>(graph.in_degree(e.dst));
  return Graph(graph.num_nodes(), std::move(edges));
}

Graph generate_synthetic(SyntheticKind kind, std::size_t n, double param, std::uint64_t seed) {
  if (n == 0) throw ConfigError("synthetic graph needs n >= 1");
  Rng rng = StreamFamily(seed, StreamPurpose::kSynthetic).at(0);
  std::vector<Edge> edges;
  switch (kind) {
    case SyntheticKind::kErdosRenyi: {
      if (!(param >= 0.0 && param <= 1.0))
        throw ConfigError("erdos_renyi edge probability must lie in [0,1]");
      for (NodeId u = 0; u < n; ++u)
        for (NodeId v = 0; v < n; ++v)
          if (u != v && rng.bernoulli(param)) edges.push_back({u, v, 1.0});
      break;
    }
    case SyntheticKind::kScaleFreeLike: {
      const double rounded = std::round(param);
      if (!(rounded >= 1.0) || rounded > 1e6)
        throw ConfigError("scale_free_like needs links per node >= 1");
      const auto links = static_cast<std::size_t>(rounded);
      // Each node appears (degree + 1) times in `urn`.
      std::vector<NodeId> urn;
      urn.push_back(0);
      std::vector<NodeId> picked;
      for (NodeId v = 1; v < n; ++v) {
        picked.clear();
        const std::size_t want = std::min<std::size_t>(links, v);
        while (picked.size() < want) {
          const NodeId u = urn[rng.below(urn.size())];
          if (std::find(picked.begin(), picked.end(), u) == picked.end()) picked.push_back(u);
        }
        for (NodeId u : picked) {
          edges.push_back({u, v, 1.0});
          edges.push_back({v, u, 1.0});
          urn.push_back(u);
          urn.push_back(v);
        }
        urn.push_back(v);
      }
      break;
    }
  }
  return assign_weighted_cascade(Graph(n, std::move(edges)));
}

}  // namespace cimbs
