#pragma once

#include <span>
#include <vector>

namespace cimbs {

enum class CostKind { kOneNorm, kTwoNorm };

inline constexpr double kFeasibilityTol = 1e-9;

/// Cost c (1-norm or 2-norm), budget k, balance lambda and the per-dimension
/// caps of the strategy domain. The feasible region is
///   P = { x : 0 <= x <= upper, c(x) <= k }.
class BudgetModel {
 public:
  /// `upper` entries may be +infinity. Requires k > 0, lambda >= 0, d >= 1.
  BudgetModel(CostKind kind, double k, double lambda, std::vector<double> upper);

  CostKind kind() const { return kind_; }
  double budget() const { return k_; }
  double lambda() const { return lambda_; }
  std::size_t dim() const { return upper_.size(); }
  const std::vector<double>& upper() const { return upper_; }
  bool has_finite_caps() const { return finite_caps_; }

  /// 2-norm Lipschitz constant of c: sqrt(d) for the 1-norm, 1 for the 2-norm.
  double lipschitz_cost() const;

  double cost(std::span<const double> x) const;
  /// s(x) = lambda * (k - c(x)).
  double saving(std::span<const double> x) const { return lambda_ * (k_ - cost(x)); }
  bool is_feasible(std::span<const double> x, double tol = kFeasibilityTol) const;

  /// A subgradient of c at x >= 0 (0 at the origin for the 2-norm).
  std::vector<double> cost_subgradient(std::span<const double> x) const;

  /// argmin_{y in P} eta*lambda*c(y) + 1/2 ||z - y||^2, for this model's cost.
  std::vector<double> prox(std::span<const double> z, double eta) const;
  /// Euclidean projection onto P.
  std::vector<double> project(std::span<const double> z) const;

  /// Upper bound on the 2-norm diameter of P: min(sqrt(2) k, ||upper||_2).
  double diameter() const;

 private:
  CostKind kind_;
  double k_;
  double lambda_;
  std::vector<double> upper_;
  bool finite_caps_ = false;
};

double cost(const BudgetModel& model, std::span<const double> x);
double s_value(const BudgetModel& model, std::span<const double> x);
bool is_feasible(const BudgetModel& model, std::span<const double> x, double tol = kFeasibilityTol);

/// Prox of -eta*s over the 1-norm region: soft-threshold by eta*lambda, then,
/// if the budget is exceeded, a water-filling shift mu > 0 with
///   sum_i clamp(z_i - eta*lambda - mu, 0, upper_i) = k,
/// found by sorting breakpoints. O(d log d).
std::vector<double> prox_one_norm(const BudgetModel& model, std::span<const double> z, double eta);

/// Prox of -eta*s over the 2-norm region. Without caps the minimizer lies on
/// the ray through max(z, 0) and has norm min(k, max(0, ||z+|| - eta*lambda)).
/// With caps it lies on the curve t -> min(upper, t*z+), and t solves a
/// monotone scalar equation.
std::vector<double> prox_two_norm(const BudgetModel& model, std::span<const double> z, double eta);

std::vector<double> project(const BudgetModel& model, std::span<const double> z);
double diameter(const BudgetModel& model);

}  // namespace cimbs
