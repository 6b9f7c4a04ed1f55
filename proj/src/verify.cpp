#include "cimbs/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "cimbs/diffusion.hpp"
#include "cimbs/errors.hpp"
#include "cimbs/objective.hpp"
#include "cimbs/optimize.hpp"
#include "cimbs/rrset.hpp"

namespace cimbs::verify {

namespace {

void project_cost_set(const BudgetModel& budget, std::vector<double>& y) {
  const double k = budget.budget();
  if (budget.kind() == CostKind::kOneNorm) {
    double s = 0.0;
    for (double v : y) s += v;
    if (s > k) {
      const double shift = (s - k) / static_cast<double>(y.size());
      for (double& v : y) v -= shift;
    }
  } else {
    double s = 0.0;
    for (double v : y) s += v * v;
    const double norm = std::sqrt(s);
    if (norm > k)
      for (double& v : y) v *= k / norm;
  }
}

double norm_inf_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double dist_sq(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

std::vector<double> dykstra_project(const BudgetModel& budget, std::span<const double> z,
                                    std::uint64_t max_iterations, double tol) {
  const std::size_t d = z.size();
  const auto& u = budget.upper();
  std::vector<double> y(z.begin(), z.end());
  std::vector<double> p(d, 0.0), q(d, 0.0), a(d), b(d);
  for (std::uint64_t it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < d; ++i) {
      a[i] = std::clamp(y[i] + p[i], 0.0, u[i]);
      p[i] = y[i] + p[i] - a[i];
    }
    for (std::size_t i = 0; i < d; ++i) b[i] = a[i] + q[i];
    project_cost_set(budget, b);
    for (std::size_t i = 0; i < d; ++i) q[i] = a[i] + q[i] - b[i];
    const double moved = norm_inf_diff(b, y);
    y = b;
    if (moved <= tol && norm_inf_diff(a, b) <= 1e-13) break;
  }
  for (std::size_t i = 0; i < d; ++i) y[i] = std::clamp(y[i], 0.0, u[i]);
  return y;
}

std::vector<double> qp_prox_one_norm(const BudgetModel& budget, std::span<const double> z, double eta,
                                     std::uint64_t max_iterations) {
  const double a = eta * budget.lambda();
  std::vector<double> y = dykstra_project(budget, z);
  std::vector<double> w(z.size());
  for (std::uint64_t it = 0; it < max_iterations; ++it) {
    // Gradient of a * sum(y) + 1/2 ||z - y||^2 is a - (z - y).
    for (std::size_t i = 0; i < z.size(); ++i) w[i] = y[i] - 0.5 * (a - (z[i] - y[i]));
    std::vector<double> next = dykstra_project(budget, w);
    const double moved = norm_inf_diff(next, y);
    y = std::move(next);
    if (moved <= 1e-14) break;
  }
  return y;
}

std::vector<double> radius_prox_two_norm(const BudgetModel& budget, std::span<const double> z, double eta) {
  const double a = eta * budget.lambda();
  const auto& u = budget.upper();
  double r_hi = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double c = std::clamp(z[i], 0.0, u[i]);
    r_hi += c * c;
  }
  r_hi = std::min(budget.budget(), std::sqrt(r_hi));
  auto point = [&](double r) {
    if (r <= 0.0) return std::vector<double>(z.size(), 0.0);
    const BudgetModel ball(CostKind::kTwoNorm, r, 0.0, u);
    return dykstra_project(ball, z);
  };
  // d/dr of a*r + 1/2 dist^2(z, P cap B(r)) is a - nu(r)*r, nondecreasing in r.
  // (z_i - p_i) / p_i equals the ball multiplier nu on coordinates inside the
  // box and is at least nu on coordinates at their upper bound.
  auto slope = [&](double r) {
    const auto p = point(r);
    double nu = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] > 1e-9) nu = std::min(nu, (z[i] - p[i]) / p[i]);
    return std::isfinite(nu) ? a - std::max(0.0, nu) * r : a;
  };
  if (r_hi <= 0.0) return point(0.0);
  if (slope(r_hi) <= 0.0) return point(r_hi);
  double lo = 0.0, hi = r_hi;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * r_hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return point(0.5 * (lo + hi));
}

GridOptimum grid_max(const BudgetModel& budget, double resolution,
                     const std::function<double(std::span<const double>)>& f) {
  const std::size_t d = budget.dim();
  if (d > 3) throw EnumerationLimitError("grid search supports d <= 3");
  if (!(resolution > 0.0)) throw ConfigError("grid resolution must be positive");
  std::vector<std::size_t> steps(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double extent = std::min(budget.upper()[j], budget.budget());
    steps[j] = static_cast<std::size_t>(std::floor(extent / resolution + 1e-9));
  }
  GridOptimum best{-std::numeric_limits<double>::infinity(), std::vector<double>(d, 0.0)};
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d, 0.0);
  while (true) {
    for (std::size_t j = 0; j < d; ++j) x[j] = std::min(budget.upper()[j], idx[j] * resolution);
    if (budget.is_feasible(x, 1e-12)) {
      const double v = f(x);
      if (v > best.value) {
        best.value = v;
        best.x = x;
      }
    }
    std::size_t j = 0;
    while (j < d && idx[j] == steps[j]) idx[j++] = 0;
    if (j == d) break;
    ++idx[j];
  }
  return best;
}

GridOptimum grid_opt(const Graph& graph, const StrategyModel& strategy, const BudgetModel& budget,
                     double resolution) {
  const ExactInfluence exact(graph);
  return grid_max(budget, resolution, [&](std::span<const double> x) {
    return exact.g_from_h(activation_vector(strategy, x)) + budget.saving(x);
  });
}

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double step) {
  std::vector<double> out(x.size());
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t j = 0; j < x.size(); ++j) {
    y[j] = x[j] + step;
    const double up = f(y);
    y[j] = x[j] - step;
    const double down = f(y);
    y[j] = x[j];
    out[j] = (up - down) / (2.0 * step);
  }
  return out;
}

double max_relative_error(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  return m;
}

double max_abs_error(std::span<const double> a, std::span<const double> b) { return norm_inf_diff(a, b); }

namespace {

using Clock = std::chrono::steady_clock;

Graph small_graph() {
  return Graph(5, {{0, 1, 0.5}, {1, 2, 0.4}, {0, 2, 0.3}, {2, 3, 0.7}, {3, 4, 0.6}, {4, 0, 0.2}});
}

template <class Body>
OracleOutcome timed(const std::string& name, double tolerance, Body&& body) {
  OracleOutcome out;
  out.name = name;
  out.tolerance = tolerance;
  const auto start = Clock::now();
  try {
    body(out);
    out.passed = out.passed && out.max_error <= tolerance;
  } catch (const std::exception& e) {
    out.passed = false;
    out.detail = std::string("exception: ") + e.what();
  }
  out.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

}  // namespace

std::vector<OracleOutcome> run_oracle_suite(const OracleOptions& opt) {
  std::vector<OracleOutcome> results;
  const Graph graph = small_graph();
  const BuiltScenario personal = build_scenario(graph, ScenarioKind::kPersonalized, 0, {}, opt.seed);
  const StrategyModel& model = *personal.model;

  // exact_g against Monte Carlo; error measured in standard errors.
  results.push_back(timed("exact_g_vs_monte_carlo", 4.0, [&](OracleOutcome& o) {
    const ExactInfluence exact(graph);
    Rng rng(opt.seed);
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> x(5);
      for (double& v : x) v = rng.uniform();
      const SpreadEstimate est =
          estimate_g(graph, model, x, 200000, StreamFamily(opt.seed + trial, StreamPurpose::kOracle), opt.workers);
      const double z = std::abs(est.mean - exact.g(model, x)) / std::max(est.std_error, 1e-12);
      if (z > o.max_error) {
        o.max_error = z;
        o.detail = "trial " + std::to_string(trial);
      }
    }
    o.passed = true;
  }));

  results.push_back(timed("exact_grad_vs_finite_difference", 1e-6, [&](OracleOutcome& o) {
    const ExactInfluence exact(graph);
    const ExactSpread spread(graph);
    Rng rng(opt.seed + 1);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> x(5);
      for (double& v : x) v = 0.05 + 0.9 * rng.uniform();
      const auto fd = central_difference([&](std::span<const double> y) { return exact.g(model, y); }, x, 1e-5);
      const double err = max_relative_error(spread.grad(model, x), fd);
      if (err > o.max_error) {
        o.max_error = err;
        o.detail = "trial " + std::to_string(trial);
      }
    }
    o.passed = true;
  }));

  results.push_back(timed("hat_grad_vs_finite_difference", 1e-5, [&](OracleOutcome& o) {
    const Graph g = generate_synthetic(SyntheticKind::kErdosRenyi, 30, 0.1, opt.seed);
    const BuiltScenario sc = build_scenario(g, ScenarioKind::kPersonalized, 0, {}, opt.seed);
    const BudgetModel budget(CostKind::kOneNorm, 5.0, 1.0, sc.model->upper());
    const RRCollection rr = generate(g, 50, StreamFamily(opt.seed, StreamPurpose::kOracle), opt.workers);
    const ObjectiveBundle bundle(rr, *sc.model, budget, opt.workers);
    Rng rng(opt.seed + 2);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> x(30);
      for (double& v : x) v = 0.05 + 0.9 * rng.uniform();
      const auto fd = central_difference([&](std::span<const double> y) { return bundle.hat_g(y); }, x, 1e-5);
      const double err = max_relative_error(bundle.grad_hat_g(x), fd);
      if (err > o.max_error) {
        o.max_error = err;
        o.detail = "trial " + std::to_string(trial);
      }
    }
    o.passed = true;
  }));

  results.push_back(timed("prox_and_projection_vs_qp", 1e-6, [&](OracleOutcome& o) {
    Rng rng(opt.seed + 3);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t d = 1 + rng.below(10);
      std::vector<double> upper(d);
      for (double& u : upper) u = rng.uniform() < 0.3 ? std::numeric_limits<double>::infinity() : 0.2 + rng.uniform();
      const double k = 0.2 + 2.0 * rng.uniform();
      const double lambda = 2.0 * rng.uniform();
      const double eta = 0.05 + rng.uniform();
      std::vector<double> z(d);
      for (double& v : z) v = 3.0 * rng.uniform() - 1.0;
      for (CostKind kind : {CostKind::kOneNorm, CostKind::kTwoNorm}) {
        const BudgetModel budget(kind, k, lambda, upper);
        auto prox = budget.prox(z, eta);
        auto proj = budget.project(z);
        for (double& v : prox) v += opt.prox_shift;
        for (double& v : proj) v += opt.prox_shift;
        const auto prox_ref = kind == CostKind::kOneNorm ? qp_prox_one_norm(budget, z, eta)
                                                         : radius_prox_two_norm(budget, z, eta);
        const auto proj_ref = dykstra_project(budget, z);
        const double err = std::max(max_abs_error(prox, prox_ref), max_abs_error(proj, proj_ref));
        if (err > o.max_error) {
          o.max_error = err;
          std::ostringstream s;
          s << "trial " << trial << ", " << (kind == CostKind::kOneNorm ? "one_norm" : "two_norm") << ", d=" << d;
          o.detail = s.str();
        }
      }
    }
    o.passed = true;
  }));

  // Proximal gradient on one RR set {0} with n = 4 against a 1-D grid:
  // 4 (2x - x^2) + 2 (1 - x) peaks at x = 0.75.
  results.push_back(timed("proxgrad_vs_grid_opt", 2e-4, [&](OracleOutcome& o) {
    const Graph g(4, {});
    const BuiltScenario sc = build_scenario(g, ScenarioKind::kSegment, 1, {}, opt.seed);
    const BudgetModel budget(CostKind::kOneNorm, 1.0, 2.0, sc.model->upper());
    RRCollection rr(4);
    const NodeId root = 0;
    rr.add(std::span<const NodeId>(&root, 1));
    const ObjectiveBundle bundle(rr, *sc.model, budget);
    OptimizerSpec spec;
    spec.iterations_override = 2000;
    const std::vector<double> x0(1, 0.0);
    const OptimizerResult res = proximal_gradient(bundle, x0, 1e-6, spec);
    const GridOptimum grid =
        grid_max(budget, 1e-4, [&](std::span<const double> x) { return bundle.combined(x, Estimator::kHat); });
    o.max_error = std::abs(res.x[0] - grid.x[0]);
    o.detail = "x = " + std::to_string(res.x[0]) + ", grid x = " + std::to_string(grid.x[0]);
    o.passed = true;
  }));

  return results;
}

}  // namespace cimbs::verify
