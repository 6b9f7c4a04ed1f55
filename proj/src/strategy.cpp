#include "cimbs/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cimbs/errors.hpp"
#include "cimbs/rng.hpp"

namespace cimbs {

double q_quadratic(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("q_quadratic: x outside [0,1]");
  return QuadraticQ().value(x);
}

double q_quadratic_derivative(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("q_quadratic: x outside [0,1]");
  return QuadraticQ().derivative(x);
}

QRegistry::QRegistry() { table_["quadratic"] = std::make_shared<QuadraticQ>(); }

void QRegistry::add(const std::string& id, std::shared_ptr<const QFunction> q) {
  if (!q) throw ConfigError("q function '" + id + "' is null");
  table_[id] = std::move(q);
}

std::shared_ptr<const QFunction> QRegistry::get(const std::string& id) const {
  auto it = table_.find(id);
  if (it == table_.end()) throw ConfigError("unknown q function '" + id + "'");
  return it->second;
}

IndependentActivation::IndependentActivation(std::size_t dim,
                                             std::vector<std::shared_ptr<const QFunction>> qs,
                                             const std::vector<std::vector<Term>>& terms)
    : dim_(dim), qs_(std::move(qs)) {
  upper_.assign(dim_, std::numeric_limits<double>::infinity());
  offsets_.reserve(terms.size() + 1);
  offsets_.push_back(0);
  double curvature = 0.0;
  for (const auto& node_terms : terms) {
    for (const Term& t : node_terms) {
      if (t.dim >= dim_) throw ConfigError("activation term refers to dimension >= d");
      if (t.q >= qs_.size() || !qs_[t.q]) throw ConfigError("activation term refers to unknown q");
      const QFunction& q = *qs_[t.q];
      upper_[t.dim] = std::min(upper_[t.dim], q.domain_upper());
      lipschitz_q_ = std::max(lipschitz_q_, q.lipschitz());
      curvature = std::max(curvature, q.curvature());
      terms_.push_back(t);
    }
    max_terms_ = std::max(max_terms_, node_terms.size());
    offsets_.push_back(terms_.size());
  }
  // Gradient entries are q'_j * prod(1 - q) <= L_q, at most max_terms of them.
  // Hessian: diagonal |q''| and off-diagonal q'_i q'_j, bounded row-wise.
  const double width = static_cast<double>(std::max<std::size_t>(max_terms_, 1));
  lipschitz_h_ = lipschitz_q_ * std::sqrt(width);
  smoothness_h_ = curvature + (width - 1.0) * lipschitz_q_ * lipschitz_q_;
}

double IndependentActivation::value(NodeId v, std::span<const double> x) const {
  double miss = 1.0;
  for (const Term& t : terms(v)) miss *= 1.0 - qs_[t.q]->value(x[t.dim]);
  return 1.0 - miss;
}

void IndependentActivation::gradient(NodeId v, std::span<const double> x,
                                     std::vector<SparseEntry>& out) const {
  const auto ts = terms(v);
  if (ts.size() == 1) {
    out.push_back({ts[0].dim, qs_[ts[0].q]->derivative(x[ts[0].dim])});
    return;
  }
  for (std::size_t a = 0; a < ts.size(); ++a) {
    double others = 1.0;
    for (std::size_t b = 0; b < ts.size(); ++b)
      if (b != a) others *= 1.0 - qs_[ts[b].q]->value(x[ts[b].dim]);
    out.push_back({ts[a].dim, qs_[ts[a].q]->derivative(x[ts[a].dim]) * others});
  }
}

double IndependentActivation::q_sum(NodeId v, std::span<const double> x) const {
  double sum = 0.0;
  for (const Term& t : terms(v)) sum += qs_[t.q]->value(x[t.dim]);
  return sum;
}

void IndependentActivation::q_sum_gradient(NodeId v, std::span<const double> x,
                                           std::vector<SparseEntry>& out) const {
  for (const Term& t : terms(v)) out.push_back({t.dim, qs_[t.q]->derivative(x[t.dim])});
}

void check_domain(const StrategyModel& model, std::span<const double> x) {
  if (x.size() != model.dim())
    throw DomainError("strategy mix has dimension " + std::to_string(x.size()) + ", expected " +
                      std::to_string(model.dim()));
  const auto& up = model.upper();
  for (std::size_t j = 0; j < x.size(); ++j)
    if (!(x[j] >= 0.0 && x[j] <= up[j]))
      throw DomainError("strategy mix component " + std::to_string(j) + " = " +
                        std::to_string(x[j]) + " outside its domain");
}

double h_value(const StrategyModel& model, NodeId v, std::span<const double> x) {
  check_domain(model, x);
  if (v >= model.num_nodes()) throw RangeError("node id out of range");
  return model.value(v, x);
}

std::vector<double> h_grad(const StrategyModel& model, NodeId v, std::span<const double> x) {
  check_domain(model, x);
  if (v >= model.num_nodes()) throw RangeError("node id out of range");
  std::vector<SparseEntry> sparse;
  model.gradient(v, x, sparse);
  std::vector<double> dense(model.dim(), 0.0);
  for (const auto& e : sparse) dense[e.dim] += e.value;
  return dense;
}

StrategyConstants constants(const StrategyModel& model) {
  StrategyConstants c{model.lipschitz(), model.smoothness(), std::nullopt};
  if (const auto* ind = model.as_independent()) c.lipschitz_q = ind->lipschitz_q();
  return c;
}

BuiltScenario build_scenario(const Graph& graph, ScenarioKind kind, std::size_t d, SizeBounds bounds,
                             std::uint64_t seed, std::size_t max_attempts,
                             std::shared_ptr<const QFunction> q) {
  if (!q) q = std::make_shared<QuadraticQ>();
  const std::size_t n = graph.num_nodes();
  using Term = IndependentActivation::Term;
  std::vector<std::vector<Term>> terms(n);
  BuiltScenario out;
  out.scenario.kind = kind;
  if (kind == ScenarioKind::kPersonalized) {
    out.scenario.d = n;
    for (NodeId v = 0; v < n; ++v) terms[v].push_back({v, 0});
  } else {
    if (d == 0) throw ConfigError("segment scenario needs d >= 1");
    if (n < d) throw ConfigError("segment scenario needs n >= d");
    if (bounds.lo > bounds.hi) throw ConfigError("segment size bounds are inverted");
    Rng rng = StreamFamily(seed, StreamPurpose::kScenario).at(0);
    std::vector<std::uint32_t> seg(n);
    std::vector<std::size_t> sizes(d);
    bool ok = false;
    for (std::size_t attempt = 0; attempt < max_attempts && !ok; ++attempt) {
      std::fill(sizes.begin(), sizes.end(), 0);
      for (NodeId v = 0; v < n; ++v) {
        seg[v] = static_cast<std::uint32_t>(rng.below(d));
        ++sizes[seg[v]];
      }
      ok = std::all_of(sizes.begin(), sizes.end(),
                       [&](std::size_t s) { return s >= bounds.lo && s <= bounds.hi; });
    }
    if (!ok)
      throw ConfigError("no segment assignment with sizes in [" + std::to_string(bounds.lo) + "," +
                        std::to_string(bounds.hi) + "] after " + std::to_string(max_attempts) +
                        " attempts");
    out.scenario.d = d;
    out.scenario.segment_of = seg;
    for (NodeId v = 0; v < n; ++v) terms[v].push_back({seg[v], 0});
  }
  out.model = std::make_shared<IndependentActivation>(out.scenario.d,
                                                      std::vector{std::move(q)}, terms);
  return out;
}

}  // namespace cimbs
