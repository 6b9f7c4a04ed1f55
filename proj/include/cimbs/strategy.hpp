#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cimbs/graph.hpp"

namespace cimbs {

/// One nonzero of a sparse gradient.
struct SparseEntry {
  std::uint32_t dim;
  double value;
};

/// A concave, nondecreasing activation curve q with q(0) = 0, mapping its
/// domain into [0, 1].
class QFunction {
 public:
  virtual ~QFunction() = default;
  virtual double value(double x) const = 0;
  virtual double derivative(double x) const = 0;
  /// sup |q'| over the domain.
  virtual double lipschitz() const = 0;
  /// sup |q''| over the domain.
  virtual double curvature() const = 0;
  /// Right end of the domain [0, upper]; may be +infinity.
  virtual double domain_upper() const = 0;
};

/// q(x) = 2x - x^2 on [0, 1].
class QuadraticQ final : public QFunction {
 public:
  double value(double x) const override { return x * (2.0 - x); }
  double derivative(double x) const override { return 2.0 - 2.0 * x; }
  double lipschitz() const override { return 2.0; }
  double curvature() const override { return 2.0; }
  double domain_upper() const override { return 1.0; }
};

/// Checked evaluations of 2x - x^2; DomainError outside [0, 1].
double q_quadratic(double x);
double q_quadratic_derivative(double x);

/// Named q functions, so custom activation curves can be plugged into a
/// scenario by id. Starts with "quadratic".
class QRegistry {
 public:
  QRegistry();
  void add(const std::string& id, std::shared_ptr<const QFunction> q);
  std::shared_ptr<const QFunction> get(const std::string& id) const;

 private:
  std::map<std::string, std::shared_ptr<const QFunction>> table_;
};

class IndependentActivation;

/// Per-node seed activation probabilities h_v(x) over a d-dimensional
/// strategy mix. Implementations must keep h_v in [0, 1], monotone and
/// DR-submodular on the domain 0 <= x <= upper.
///
/// `value` and `gradient` do not validate x; use h_value / h_grad for
/// checked access.
class StrategyModel {
 public:
  virtual ~StrategyModel() = default;

  virtual std::size_t num_nodes() const = 0;
  virtual std::size_t dim() const = 0;
  virtual double value(NodeId v, std::span<const double> x) const = 0;
  /// Appends the nonzero partial derivatives of h_v at x to `out`.
  virtual void gradient(NodeId v, std::span<const double> x, std::vector<SparseEntry>& out) const = 0;
  virtual double lipschitz() const = 0;   // L_h
  virtual double smoothness() const = 0;  // beta_h
  virtual const std::vector<double>& upper() const = 0;

  virtual const IndependentActivation* as_independent() const { return nullptr; }
};

/// h_v(x) = 1 - prod_j (1 - q_{v,j}(x_j)) over the dimensions listed for v.
class IndependentActivation final : public StrategyModel {
 public:
  struct Term {
    std::uint32_t dim;
    std::uint32_t q;  // index into the q table
  };

  /// `terms[v]` lists the dimensions that act on node v.
  IndependentActivation(std::size_t dim, std::vector<std::shared_ptr<const QFunction>> qs,
                        const std::vector<std::vector<Term>>& terms);

  std::size_t num_nodes() const override { return offsets_.size() - 1; }
  std::size_t dim() const override { return dim_; }
  double value(NodeId v, std::span<const double> x) const override;
  void gradient(NodeId v, std::span<const double> x, std::vector<SparseEntry>& out) const override;
  double lipschitz() const override { return lipschitz_h_; }
  double smoothness() const override { return smoothness_h_; }
  const std::vector<double>& upper() const override { return upper_; }
  const IndependentActivation* as_independent() const override { return this; }

  std::span<const Term> terms(NodeId v) const {
    return {terms_.data() + offsets_[v], terms_.data() + offsets_[v + 1]};
  }
  const QFunction& q(std::uint32_t index) const { return *qs_[index]; }

  /// sum_j q_{v,j}(x_j), the node's contribution to the concave upper bound.
  double q_sum(NodeId v, std::span<const double> x) const;
  /// Appends (j, q'_{v,j}(x_j)) for every term of v.
  void q_sum_gradient(NodeId v, std::span<const double> x, std::vector<SparseEntry>& out) const;

  double lipschitz_q() const { return lipschitz_q_; }
  std::size_t max_terms_per_node() const { return max_terms_; }

 private:
  std::size_t dim_;
  std::vector<std::shared_ptr<const QFunction>> qs_;
  std::vector<std::size_t> offsets_;
  std::vector<Term> terms_;
  std::vector<double> upper_;
  std::size_t max_terms_ = 0;
  double lipschitz_q_ = 0.0;
  double lipschitz_h_ = 0.0;
  double smoothness_h_ = 0.0;
};

/// A general activation model given by callbacks. Used for models outside
/// the independent family; the caller vouches for monotonicity,
/// DR-submodularity and the stated constants.
class CallbackActivation final : public StrategyModel {
 public:
  using ValueFn = std::function<double(NodeId, std::span<const double>)>;
  using GradientFn = std::function<void(NodeId, std::span<const double>, std::vector<SparseEntry>&)>;

  CallbackActivation(std::size_t num_nodes, std::vector<double> upper, ValueFn value,
                     GradientFn gradient, double lipschitz, double smoothness)
      : n_(num_nodes),
        upper_(std::move(upper)),
        value_(std::move(value)),
        gradient_(std::move(gradient)),
        lipschitz_(lipschitz),
        smoothness_(smoothness) {}

  std::size_t num_nodes() const override { return n_; }
  std::size_t dim() const override { return upper_.size(); }
  double value(NodeId v, std::span<const double> x) const override { return value_(v, x); }
  void gradient(NodeId v, std::span<const double> x, std::vector<SparseEntry>& out) const override {
    gradient_(v, x, out);
  }
  double lipschitz() const override { return lipschitz_; }
  double smoothness() const override { return smoothness_; }
  const std::vector<double>& upper() const override { return upper_; }

 private:
  std::size_t n_;
  std::vector<double> upper_;
  ValueFn value_;
  GradientFn gradient_;
  double lipschitz_;
  double smoothness_;
};

/// Throws DomainError unless x has the model's dimension and 0 <= x <= upper.
void check_domain(const StrategyModel& model, std::span<const double> x);

double h_value(const StrategyModel& model, NodeId v, std::span<const double> x);
/// Dense gradient of h_v at x.
std::vector<double> h_grad(const StrategyModel& model, NodeId v, std::span<const double> x);

struct StrategyConstants {
  double lipschitz_h;
  double smoothness_h;
  std::optional<double> lipschitz_q;  // independent models only
};

StrategyConstants constants(const StrategyModel& model);

enum class ScenarioKind { kPersonalized, kSegment };

struct Scenario {
  ScenarioKind kind = ScenarioKind::kPersonalized;
  std::size_t d = 0;
  /// Node -> dimension, for segment scenarios.
  std::vector<std::uint32_t> segment_of;
};

struct SizeBounds {
  std::size_t lo = 0;
  std::size_t hi = static_cast<std::size_t>(-1);
};

struct BuiltScenario {
  std::shared_ptr<const IndependentActivation> model;
  Scenario scenario;
};

/// Personalized: d = n and node v is driven by x_v alone. Segment: every node
/// gets one of d segments uniformly at random, redrawing the whole assignment
/// until each segment size lies in `bounds` (ConfigError after
/// `max_attempts`). Both use `q` (default 2x - x^2) with domain [0, 1].
BuiltScenario build_scenario(const Graph& graph, ScenarioKind kind, std::size_t d, SizeBounds bounds,
                             std::uint64_t seed, std::size_t max_attempts = 1000,
                             std::shared_ptr<const QFunction> q = nullptr);

}  // namespace cimbs
