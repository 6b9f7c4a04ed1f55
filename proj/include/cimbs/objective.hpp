#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cimbs/budget.hpp"
#include "cimbs/diffusion.hpp"
#include "cimbs/rrset.hpp"
#include "cimbs/strategy.hpp"

namespace cimbs {

enum class Estimator { kHat, kBar };

struct Decomposition {
  double g_part = 0.0;
  double s_part = 0.0;
  double total() const { return g_part + s_part; }
};

/// RR-set objectives for a fixed collection, strategy and budget.
///
/// Identical RR sets are merged into one entry with a multiplicity, and a
/// node -> entries index is kept. Every reduction runs over fixed-size chunks
/// combined in chunk order, so values do not depend on the worker count.
/// The strategy and budget must outlive the bundle; the collection is not
/// referenced after construction.
class ObjectiveBundle {
 public:
  ObjectiveBundle(const RRCollection& collection, const StrategyModel& strategy, const BudgetModel& budget,
                  int workers = 0);

  const StrategyModel& strategy() const { return *strategy_; }
  const BudgetModel& budget() const { return *budget_; }
  std::size_t num_nodes() const { return n_; }
  std::size_t dim() const { return budget_->dim(); }
  std::uint64_t theta() const { return theta_; }
  /// n / theta.
  double scale() const { return scale_; }
  double nu1() const { return nu1_; }
  double nu2() const { return nu2_; }
  double nu3() const { return nu3_; }

  std::size_t num_entries() const { return mult_.size(); }
  std::span<const NodeId> entry(std::size_t i) const {
    return {nodes_.data() + offsets_[i], nodes_.data() + offsets_[i + 1]};
  }
  std::uint64_t multiplicity(std::size_t i) const { return mult_[i]; }
  std::span<const std::uint32_t> entries_of(NodeId v) const {
    return {inv_.data() + inv_offsets_[v], inv_.data() + inv_offsets_[v + 1]};
  }

  double hat_g(std::span<const double> x) const;
  std::vector<double> grad_hat_g(std::span<const double> x) const;
  /// UnsupportedModelError unless the strategy is an independent activation.
  double bar_g(std::span<const double> x) const;
  std::vector<double> subgrad_bar_g(std::span<const double> x) const;

  /// (hat_g(x), grad hat_g(x)) in one pass over the sets.
  std::pair<double, std::vector<double>> hat_value_and_grad(std::span<const double> x) const;
  /// (bar_g(x), subgrad bar_g(x)) in one pass over the sets.
  std::pair<double, std::vector<double>> bar_value_and_subgrad(std::span<const double> x) const;

  double combined(std::span<const double> x, Estimator which) const;
  Decomposition decomposition(std::span<const double> x, Estimator which) const;

  /// hat_g from precomputed h values.
  double hat_g_from_h(std::span<const double> h) const;

  /// Smoothness of hat_g: nu1 n beta_h + nu2 n L_h^2.
  double smoothness() const;
  /// Lipschitz constant of hat_g: nu1 n L_h.
  double hat_lipschitz() const;
  /// Lipschitz constant of bar_g + s: nu1 n sqrt(d) L_q + lambda L_c.
  double bar_lipschitz() const;

  int workers() const { return workers_; }

 private:
  const IndependentActivation& independent() const;
  /// Per-entry product of nonzero factors (1 - h_v) and count of zero factors.
  void entry_products(std::span<const double> h, std::vector<double>& prod, std::vector<std::uint32_t>& zeros) const;

  const StrategyModel* strategy_;
  const BudgetModel* budget_;
  int workers_;
  std::size_t n_;
  std::uint64_t theta_;
  double scale_;
  double nu1_, nu2_, nu3_;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<NodeId> nodes_;
  std::vector<std::uint64_t> mult_;
  std::vector<std::uint64_t> inv_offsets_;
  std::vector<std::uint32_t> inv_;
};

double hat_g(const ObjectiveBundle& bundle, std::span<const double> x);
std::vector<double> grad_hat_g(const ObjectiveBundle& bundle, std::span<const double> x);
double bar_g(const ObjectiveBundle& bundle, std::span<const double> x);
std::vector<double> subgrad_bar_g(const ObjectiveBundle& bundle, std::span<const double> x);
double combined(const ObjectiveBundle& bundle, std::span<const double> x, Estimator which);

/// L1 = L2 for the proximal route: n^2 L_h + lambda L_c.
double proxgrad_lipschitz(std::size_t n, double lipschitz_h, double lambda, double lipschitz_c);
/// L1 = L2 for the upper-bound route: n^2 sqrt(d) L_q + lambda L_c.
double uppergrad_lipschitz(std::size_t n, std::size_t d, double lipschitz_q, double lambda, double lipschitz_c);

/// One draw of n * sigma_L(u' | S) * grad h_{u'}(x): u' uniform, S drawn
/// from h(x) on V \ {u'}, L a lazily sampled live-edge graph.
std::vector<double> stochastic_grad_g(const Graph& graph, const StrategyModel& strategy, std::span<const double> x,
                                      Rng& rng);

/// Reusable sampler for repeated draws at possibly different x.
class StochasticGradient {
 public:
  StochasticGradient(const Graph& graph, const StrategyModel& strategy);
  /// `h` must hold h_v(x) for every node. Writes a dense gradient into `out`.
  void draw(std::span<const double> x, std::span<const double> h, Rng& rng, std::vector<double>& out);

 private:
  const Graph* graph_;
  const StrategyModel* strategy_;
  BfsWorkspace ws_;
  std::vector<SparseEntry> partials_;
};

}  // namespace cimbs
