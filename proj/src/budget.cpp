#include "cimbs/budget.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "cimbs/errors.hpp"

namespace cimbs {

namespace {

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

/// y_i = clamp(w_i - mu, 0, u_i) with the smallest mu >= 0 giving sum y <= k.
std::vector<double> capped_water_fill(std::span<const double> w, const std::vector<double>& u,
                                      double k) {
  const std::size_t d = w.size();
  std::vector<double> y(d);
  double total = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    y[i] = std::clamp(w[i], 0.0, u[i]);
    total += y[i];
  }
  if (total <= k) return y;

  // phi(mu) = sum_i clamp(w_i - mu, 0, u_i) is piecewise linear. Component i
  // decreases with slope -1 on [w_i - u_i, w_i].
  std::vector<std::pair<double, int>> events;
  events.reserve(2 * d);
  double slope = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    if (!(w[i] > 0.0)) continue;
    const double start = w[i] - u[i];
    if (start > 0.0) {
      events.emplace_back(start, -1);
    } else {
      slope -= 1.0;
    }
    events.emplace_back(w[i], +1);
  }
  std::sort(events.begin(), events.end());

  double mu = 0.0;
  double value = total;
  double mu_star = 0.0;
  bool found = false;
  for (const auto& [at, delta] : events) {
    const double next_value = value + slope * (at - mu);
    if (next_value <= k) {
      mu_star = mu + (value - k) / (-slope);
      found = true;
      break;
    }
    mu = at;
    value = next_value;
    slope += delta;
  }
  if (!found) mu_star = events.empty() ? 0.0 : events.back().first;
  total = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    y[i] = std::clamp(w[i] - mu_star, 0.0, u[i]);
    total += y[i];
  }
  // Rounding can leave the sum a few ulps above k.
  if (total > k && total > 0.0) {
    const double scale = k / total;
    for (double& v : y) v *= scale;
  }
  return y;
}

/// Bisection for the root of an increasing function on [lo, hi] with
/// f(lo) < 0 <= f(hi).
template <class F>
double bisect_increasing(F&& f, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

/// argmin over {0 <= y <= u, ||y||_2 <= k} of a*||y||_2 + 1/2 ||z - y||^2.
std::vector<double> two_norm_core(std::span<const double> z, const std::vector<double>& u, double k,
                                  double a, bool finite_caps) {
  const std::size_t d = z.size();
  std::vector<double> zp(d);
  for (std::size_t i = 0; i < d; ++i) zp[i] = std::max(z[i], 0.0);
  const double zn = norm2(zp);
  std::vector<double> y(d, 0.0);
  if (zn == 0.0) return y;

  if (!finite_caps) {
    const double t = std::min(k, std::max(0.0, zn - a));
    const double scale = t / zn;
    for (std::size_t i = 0; i < d; ++i) y[i] = zp[i] * scale;
    return y;
  }

  // Stationarity gives y = min(u, t*z+) for a scalar t in (0, 1].
  auto curve_norm = [&](double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double c = std::min(u[i], t * zp[i]);
      s += c * c;
    }
    return std::sqrt(s);
  };
  double t = 1.0;
  if (a > 0.0) {
    if (a >= zn) return y;
    // t * (1 + a / r(t)) = 1, left side strictly increasing in t.
    t = bisect_increasing([&](double s) { return s * (1.0 + a / curve_norm(s)) - 1.0; }, 0.0, 1.0);
  }
  if (curve_norm(t) > k) {
    t = bisect_increasing([&](double s) { return curve_norm(s) - k; }, 0.0, t);
  }
  for (std::size_t i = 0; i < d; ++i) y[i] = std::min(u[i], t * zp[i]);
  const double yn = norm2(y);
  if (yn > k) {
    const double scale = k / yn;
    for (double& v : y) v *= scale;
  }
  return y;
}

void require_dim(const BudgetModel& model, std::span<const double> z) {
  if (z.size() != model.dim())
    throw DomainError("vector has dimension " + std::to_string(z.size()) + ", expected " +
                      std::to_string(model.dim()));
}

}  // namespace

BudgetModel::BudgetModel(CostKind kind, double k, double lambda, std::vector<double> upper)
    : kind_(kind), k_(k), lambda_(lambda), upper_(std::move(upper)) {
  if (!(k_ > 0.0) || !std::isfinite(k_)) throw ConfigError("budget k must be positive and finite");
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw ConfigError("lambda must be >= 0");
  if (upper_.empty()) throw ConfigError("budget model needs d >= 1");
  for (double u : upper_) {
    if (!(u > 0.0)) throw ConfigError("domain caps must be positive");
    if (std::isfinite(u)) finite_caps_ = true;
  }
}

double BudgetModel::lipschitz_cost() const {
  return kind_ == CostKind::kOneNorm ? std::sqrt(static_cast<double>(dim())) : 1.0;
}

double BudgetModel::cost(std::span<const double> x) const {
  if (kind_ == CostKind::kOneNorm) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return s;
  }
  return norm2(x);
}

bool BudgetModel::is_feasible(std::span<const double> x, double tol) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || x[i] < -tol || x[i] > upper_[i] + tol) return false;
  }
  return cost(x) <= k_ + tol;
}

std::vector<double> BudgetModel::cost_subgradient(std::span<const double> x) const {
  std::vector<double> g(x.size(), 0.0);
  if (kind_ == CostKind::kOneNorm) {
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] < 0.0 ? -1.0 : 1.0;
    return g;
  }
  const double n = norm2(x);
  if (n > 0.0)
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] / n;
  return g;
}

std::vector<double> BudgetModel::prox(std::span<const double> z, double eta) const {
  return kind_ == CostKind::kOneNorm ? prox_one_norm(*this, z, eta) : prox_two_norm(*this, z, eta);
}

std::vector<double> BudgetModel::project(std::span<const double> z) const {
  require_dim(*this, z);
  if (kind_ == CostKind::kOneNorm) return capped_water_fill(z, upper_, k_);
  return two_norm_core(z, upper_, k_, 0.0, finite_caps_);
}

double BudgetModel::diameter() const {
  double cap = 0.0;
  for (double u : upper_) cap += u * u;
  return std::min(std::sqrt(2.0) * k_, std::sqrt(cap));
}

double cost(const BudgetModel& model, std::span<const double> x) { return model.cost(x); }
double s_value(const BudgetModel& model, std::span<const double> x) { return model.saving(x); }
bool is_feasible(const BudgetModel& model, std::span<const double> x, double tol) {
  return model.is_feasible(x, tol);
}

std::vector<double> prox_one_norm(const BudgetModel& model, std::span<const double> z, double eta) {
  require_dim(model, z);
  if (model.kind() != CostKind::kOneNorm) throw ConfigError("prox_one_norm on a 2-norm model");
  if (!(eta > 0.0)) throw ConfigError("prox step must be positive");
  const double shift = eta * model.lambda();
  std::vector<double> w(z.begin(), z.end());
  for (double& v : w) v -= shift;
  return capped_water_fill(w, model.upper(), model.budget());
}

std::vector<double> prox_two_norm(const BudgetModel& model, std::span<const double> z, double eta) {
  require_dim(model, z);
  if (model.kind() != CostKind::kTwoNorm) throw ConfigError("prox_two_norm on a 1-norm model");
  if (!(eta > 0.0)) throw ConfigError("prox step must be positive");
  return two_norm_core(z, model.upper(), model.budget(), eta * model.lambda(),
                       model.has_finite_caps());
}

std::vector<double> project(const BudgetModel& model, std::span<const double> z) {
  return model.project(z);
}

double diameter(const BudgetModel& model) { return model.diameter(); }

}  // namespace cimbs
