#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cimbs/budget.hpp"
#include "cimbs/diffusion.hpp"
#include "cimbs/graph.hpp"
#include "cimbs/rng.hpp"

namespace cimbs {

/// Reverse BFS from a uniformly drawn root; each in-edge on the frontier is
/// kept with its probability. The root is always the first element.
std::vector<NodeId> sample_rr(const Graph& graph, Rng& rng);
void sample_rr(const Graph& graph, Rng& rng, BfsWorkspace& ws, std::vector<NodeId>& out);

/// RR sets stored back to back, with exact integer size moments.
class RRCollection {
 public:
  RRCollection() = default;
  explicit RRCollection(std::size_t num_nodes) : n_(num_nodes) {}

  std::size_t num_nodes() const { return n_; }
  std::size_t size() const { return offsets_.size() - 1; }
  bool empty() const { return size() == 0; }
  std::span<const NodeId> set(std::size_t i) const {
    return {nodes_.data() + offsets_[i], nodes_.data() + offsets_[i + 1]};
  }
  std::size_t total_size() const { return nodes_.size(); }

  void add(std::span<const NodeId> set);
  void append(const RRCollection& other);

  /// Means of |R|, |R|^2, |R|^3; 0 on an empty collection.
  double nu1() const;
  double nu2() const;
  double nu3() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<NodeId> nodes_;
  std::uint64_t sum1_ = 0;
  unsigned __int128 sum2_ = 0;
  unsigned __int128 sum3_ = 0;
};

/// `count` RR sets; set i uses streams.at(first_index + i), so the result is
/// independent of `workers`.
RRCollection generate(const Graph& graph, std::uint64_t count, const StreamFamily& streams,
                      int workers = 0, std::uint64_t first_index = 0);
/// Extends `collection` to `target` sets, continuing the stream indices.
void extend(RRCollection& collection, const Graph& graph, std::uint64_t target, const StreamFamily& streams,
            int workers = 0);

struct Moments {
  double nu1;
  double nu2;
  double nu3;
};
Moments moments_report(const RRCollection& collection);

/// ln N(P, r) <= max(0, d ln(3k / r)).
double covering_log(const BudgetModel& budget, double radius);

enum class ResampleMode { kReuse, kFresh };

/// Inputs of the sample-size formulas.
struct SamplingParams {
  double epsilon = 0.3;
  double ell = 1.0;
  double L1 = 1.0;
  double L2 = 1.0;
  double alpha = 0.5;
  ResampleMode mode = ResampleMode::kReuse;
  std::uint64_t theta_cap = 10'000'000;
  int workers = 0;
};

/// Number of doubling rounds: floor(log2(n + lambda k)) - 1, at least 0.
std::size_t sampling_rounds(std::size_t n, double lambda_k);
/// x_i = (n + lambda k) / 2^i.
double round_threshold(std::size_t n, double lambda_k, std::size_t i);
/// theta_i before rounding up.
double theta_round_real(std::size_t n, double lambda_k, double epsilon, double ell, double log_cover,
                        double xi);
double theta_one(std::size_t n, double epsilon, double ell, double alpha, double lb);
double theta_two(std::size_t n, double epsilon, double ell, double alpha, double lb, double log_cover);
/// ceil(v) as a count; ResourceError when it exceeds `cap`.
std::uint64_t checked_count(double v, std::uint64_t cap);

/// Result of one call of the inner gradient algorithm on (R, hat_g + s).
struct InnerResult {
  std::vector<double> x;
  double value = 0.0;  // (hat_g_R + s)(x)
  std::uint64_t iterations = 0;
  bool truncated = false;
};

/// A(R, hat_g_R + s, additive error).
using GradientAlgorithm = std::function<InnerResult(const RRCollection&, double)>;

struct SamplingOutput {
  RRCollection collection;
  double lb = 1.0;
  std::size_t loop_rounds = 0;
  bool lb_updated = false;
  std::vector<std::uint64_t> theta_history;
  double theta1 = 0.0;
  double theta2 = 0.0;
  std::uint64_t inner_iterations = 0;
  bool inner_truncated = false;
};

/// Doubling search for LB followed by a fresh final collection of
/// ceil(max(theta1, theta2)) sets. Round sets come from `round_streams`,
/// final sets from `final_streams`.
SamplingOutput sampling_procedure(const Graph& graph, const BudgetModel& budget, const SamplingParams& params,
                                  const GradientAlgorithm& algorithm, const StreamFamily& round_streams,
                                  const StreamFamily& final_streams);

}  // namespace cimbs
