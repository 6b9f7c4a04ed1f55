#include "cimbs/rrset.hpp"

#include <algorithm>
#include <cmath>

#include "cimbs/errors.hpp"
#include "cimbs/parallel.hpp"

namespace cimbs {

namespace {
constexpr std::size_t kRRChunk = 4096;
}

void sample_rr(const Graph& graph, Rng& rng, BfsWorkspace& ws, std::vector<NodeId>& out) {
  const std::size_t n = graph.num_nodes();
  ws.reset(n);
  const auto root = static_cast<NodeId>(rng.below(n));
  ws.mark(root);
  ws.queue.push_back(root);
  for (std::size_t head = 0; head < ws.queue.size(); ++head) {
    for (EdgeId e : graph.in_edges(ws.queue[head])) {
      const Edge& edge = graph.edge(e);
      if (ws.visited(edge.src)) continue;
      if (!rng.bernoulli(edge.p)) continue;
      ws.mark(edge.src);
      ws.queue.push_back(edge.src);
    }
  }
  out.assign(ws.queue.begin(), ws.queue.end());
}

std::vector<NodeId> sample_rr(const Graph& graph, Rng& rng) {
  if (graph.num_nodes() == 0) throw ConfigError("RR sampling needs n >= 1");
  BfsWorkspace ws(graph.num_nodes());
  std::vector<NodeId> out;
  sample_rr(graph, rng, ws, out);
  return out;
}

void RRCollection::add(std::span<const NodeId> set) {
  nodes_.insert(nodes_.end(), set.begin(), set.end());
  offsets_.push_back(nodes_.size());
  const std::uint64_t s = set.size();
  sum1_ += s;
  sum2_ += static_cast<unsigned __int128>(s) * s;
  sum3_ += static_cast<unsigned __int128>(s) * s * s;
}

void RRCollection::append(const RRCollection& other) {
  const std::uint64_t base = nodes_.size();
  nodes_.insert(nodes_.end(), other.nodes_.begin(), other.nodes_.end());
  offsets_.reserve(offsets_.size() + other.size());
  for (std::size_t i = 1; i < other.offsets_.size(); ++i) offsets_.push_back(base + other.offsets_[i]);
  sum1_ += other.sum1_;
  sum2_ += other.sum2_;
  sum3_ += other.sum3_;
}

double RRCollection::nu1() const {
  return empty() ? 0.0 : static_cast<double>(static_cast<long double>(sum1_) / size());
}
double RRCollection::nu2() const {
  return empty() ? 0.0 : static_cast<double>(static_cast<long double>(sum2_) / size());
}
double RRCollection::nu3() const {
  return empty() ? 0.0 : static_cast<double>(static_cast<long double>(sum3_) / size());
}

RRCollection generate(const Graph& graph, std::uint64_t count, const StreamFamily& streams, int workers,
                      std::uint64_t first_index) {
  if (graph.num_nodes() == 0) throw ConfigError("RR sampling needs n >= 1");
  const std::size_t chunks = chunk_count(count, kRRChunk);
  std::vector<RRCollection> parts(chunks, RRCollection(graph.num_nodes()));
  for_each_chunk(chunks, workers, [&](std::size_t c) {
    BfsWorkspace ws(graph.num_nodes());
    std::vector<NodeId> set;
    const std::uint64_t begin = c * kRRChunk;
    const std::uint64_t end = std::min<std::uint64_t>(count, begin + kRRChunk);
    for (std::uint64_t i = begin; i < end; ++i) {
      Rng rng = streams.at(first_index + i);
      sample_rr(graph, rng, ws, set);
      parts[c].add(set);
    }
  });
  RRCollection out(graph.num_nodes());
  for (const RRCollection& p : parts) out.append(p);
  return out;
}

void extend(RRCollection& collection, const Graph& graph, std::uint64_t target, const StreamFamily& streams,
            int workers) {
  if (target <= collection.size()) return;
  collection.append(generate(graph, target - collection.size(), streams, workers, collection.size()));
}

Moments moments_report(const RRCollection& collection) {
  if (collection.empty()) throw ConfigError("moments need at least one RR set");
  return {collection.nu1(), collection.nu2(), collection.nu3()};
}

double covering_log(const BudgetModel& budget, double radius) {
  if (!(radius > 0.0)) throw ConfigError("covering radius must be positive");
  return std::max(0.0, static_cast<double>(budget.dim()) * std::log(3.0 * budget.budget() / radius));
}

std::size_t sampling_rounds(std::size_t n, double lambda_k) {
  const double l = std::floor(std::log2(static_cast<double>(n) + lambda_k));
  return l > 1.0 ? static_cast<std::size_t>(l) - 1 : 0;
}

double round_threshold(std::size_t n, double lambda_k, std::size_t i) {
  return (static_cast<double>(n) + lambda_k) / std::ldexp(1.0, static_cast<int>(i));
}

double theta_round_real(std::size_t n, double lambda_k, double epsilon, double ell, double log_cover,
                        double xi) {
  const double nd = static_cast<double>(n);
  const double ep = std::sqrt(2.0) * epsilon / 3.0;
  const double log_term =
      log_cover + ell * std::log(nd) + std::log(2.0) + std::log(std::log2(nd + lambda_k));
  return nd * (2.0 + 2.0 / 3.0 * ep) * log_term / (ep * ep * xi);
}

double theta_one(std::size_t n, double epsilon, double ell, double alpha, double lb) {
  const double nd = static_cast<double>(n);
  const double a = alpha - epsilon / 3.0;
  const double log_term = std::log(4.0) + ell * std::log(nd);
  return 8.0 * nd * log_term / (lb * a * a * epsilon * epsilon / 9.0);
}

double theta_two(std::size_t n, double epsilon, double ell, double alpha, double lb, double log_cover) {
  const double nd = static_cast<double>(n);
  const double a = alpha - epsilon / 3.0;
  const double alpha_prime = a;
  const double gap = epsilon / 3.0 - 0.25 * a * a * epsilon / 3.0;
  const double log_term = std::log(4.0) + ell * std::log(nd) + log_cover;
  return 2.0 * alpha_prime * nd * log_term / (gap * gap * lb);
}

std::uint64_t checked_count(double v, std::uint64_t cap) {
  const double c = std::ceil(v);
  if (!(c <= static_cast<double>(cap))) {
    const double shown = std::min(c, 1.8e19);
    throw ResourceError(std::isfinite(shown) ? static_cast<std::uint64_t>(shown) : UINT64_MAX, cap);
  }
  return static_cast<std::uint64_t>(std::max(1.0, c));
}

SamplingOutput sampling_procedure(const Graph& graph, const BudgetModel& budget, const SamplingParams& params,
                                  const GradientAlgorithm& algorithm, const StreamFamily& round_streams,
                                  const StreamFamily& final_streams) {
  const double eps = params.epsilon;
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(params.ell > 0.0)) throw ConfigError("ell must be positive");
  if (!(params.L1 >= 0.0 && params.L2 >= 0.0 && std::isfinite(params.L1) && std::isfinite(params.L2)))
    throw ConfigError("Lipschitz constants must be finite and nonnegative");
  const std::size_t n = graph.num_nodes();
  const double lambda_k = budget.lambda() * budget.budget();
  const double ep = std::sqrt(2.0) * eps / 3.0;
  const double factor = 1.0 + ep + eps / 3.0;

  SamplingOutput out;
  RRCollection rounds(n);
  const std::size_t max_rounds = sampling_rounds(n, lambda_k);
  for (std::size_t i = 1; i <= max_rounds; ++i) {
    const double xi = round_threshold(n, lambda_k, i);
    const double log_cover = covering_log(budget, (eps / 3.0) / params.L2 * xi);
    const std::uint64_t theta_i =
        checked_count(theta_round_real(n, lambda_k, eps, params.ell, log_cover, xi), params.theta_cap);
    if (params.mode == ResampleMode::kReuse) {
      extend(rounds, graph, theta_i, round_streams, params.workers);
    } else {
      rounds = generate(graph, theta_i, round_streams.child(i), params.workers);
    }
    out.theta_history.push_back(theta_i);
    out.loop_rounds = i;
    const InnerResult y = algorithm(rounds, eps * xi / 3.0);
    out.inner_iterations += y.iterations;
    out.inner_truncated = out.inner_truncated || y.truncated;
    if (y.value >= factor * xi) {
      out.lb = std::max(1.0, y.value / factor);
      out.lb_updated = true;
      break;
    }
  }
  rounds = RRCollection();

  out.theta1 = theta_one(n, eps, params.ell, params.alpha, out.lb);
  const double log_cover = covering_log(budget, (eps / 3.0) / (params.L1 + params.L2) * out.lb);
  out.theta2 = theta_two(n, eps, params.ell, params.alpha, out.lb, log_cover);
  const std::uint64_t theta = checked_count(std::max(out.theta1, out.theta2), params.theta_cap);
  out.collection = generate(graph, theta, final_streams, params.workers);
  return out;
}

}  // namespace cimbs
