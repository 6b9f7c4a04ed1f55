#include <cmath>

#include "cimbs/diffusion.hpp"
#include "cimbs/errors.hpp"
#include "cimbs/objective.hpp"
#include "cimbs/verify.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace cimbs;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

RRCollection collection_of(std::size_t n, std::initializer_list<std::vector<NodeId>> sets) {
  RRCollection c(n);
  for (const auto& s : sets) c.add(s);
  return c;
}

// ĝ straight from the definition, without merging or leave-one-out tricks.
double naive_hat(const RRCollection& c, const StrategyModel& m, std::span<const double> x) {
  double total = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double prod = 1.0;
    for (NodeId v : c.set(i)) prod *= 1.0 - m.value(v, x);
    total += 1.0 - prod;
  }
  return total * static_cast<double>(c.num_nodes()) / static_cast<double>(c.size());
}

struct Fixture {
  Graph graph;
  BuiltScenario scenario;
  BudgetModel budget;
  RRCollection rr;
};

Fixture make_fixture(ScenarioKind kind, std::size_t d, std::uint64_t seed) {
  Graph g = generate_synthetic(SyntheticKind::kScaleFreeLike, 30, 2, seed);
  BuiltScenario sc = build_scenario(g, kind, d, {}, seed);
  BudgetModel b(CostKind::kOneNorm, 2.0, 1.5, sc.model->upper());
  RRCollection rr = generate(g, 50, StreamFamily(seed, StreamPurpose::kRoundSets));
  return {std::move(g), std::move(sc), std::move(b), std::move(rr)};
}

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("hat_g examples") {
  const auto zero_h = fixtures::constant_h(4, 1, 0.0);
  const BudgetModel b(CostKind::kOneNorm, 1.0, 0.0, {1.0});
  const RRCollection one = collection_of(4, {{2}});
  CHECK(ObjectiveBundle(one, *zero_h, b).hat_g(std::vector<double>{0.5}) == 0.0);
  const auto half_h = fixtures::constant_h(4, 1, 0.5);
  CHECK(ObjectiveBundle(one, *half_h, b).hat_g(std::vector<double>{0.5}) == 2.0);
}

TEST_CASE("hat_g agrees with the direct definition and stays in [0, n]") {
  for (ScenarioKind kind : {ScenarioKind::kPersonalized, ScenarioKind::kSegment}) {
    const Fixture f = make_fixture(kind, 3, 7);
    const ObjectiveBundle bundle(f.rr, *f.scenario.model, f.budget);
    CHECK(bundle.theta() == 50);
    Rng rng(2);
    for (int t = 0; t < 30; ++t) {
      const auto x = fixtures::random_point(rng, bundle.dim());
      const double v = bundle.hat_g(x);
      CHECK(v == doctest::Approx(naive_hat(f.rr, *f.scenario.model, x)).epsilon(1e-12));
      CHECK(v >= 0.0);
      CHECK(v <= 30.0);
    }
  }
}

TEST_CASE("grad_hat_g examples") {
  const Graph g(3, {});
  const BuiltScenario sc = build_scenario(g, ScenarioKind::kPersonalized, 0, {}, 1);
  const BudgetModel b(CostKind::kOneNorm, 3.0, 0.0, sc.model->upper());
  const RRCollection c = collection_of(3, {{0, 1}, {1}, {1, 2}});
  const ObjectiveBundle bundle(c, *sc.model, b);
  // All factors are 1 at x = 0: component v = (n/theta) * count(v) * q'(0).
  const auto g0 = bundle.grad_hat_g(std::vector<double>{0.0, 0.0, 0.0});
  CHECK(g0[0] == doctest::Approx(1.0 * 1 * 2.0));
  CHECK(g0[1] == doctest::Approx(1.0 * 3 * 2.0));
  CHECK(g0[2] == doctest::Approx(1.0 * 1 * 2.0));

  // h_1 = 1 zeroes every leave-one-out product except node 1's own, and q'(1) = 0.
  const auto g1 = bundle.grad_hat_g(std::vector<double>{0.3, 1.0, 0.6});
  CHECK(g1 == std::vector<double>{0.0, 0.0, 0.0});
  // Two zero factors in {0, 1} leave only the singleton and {1, 2} terms.
  const auto g2 = bundle.grad_hat_g(std::vector<double>{1.0, 0.5, 0.2});
  CHECK(g2[0] == 0.0);
  CHECK(g2[1] == doctest::Approx(q_quadratic_derivative(0.5) * (1.0 + (1.0 - q_quadratic(0.2)))));
  CHECK(g2[2] == doctest::Approx(q_quadratic_derivative(0.2) * (1.0 - q_quadratic(0.5))));
}

TEST_CASE("grad_hat_g matches finite differences") {
  for (ScenarioKind kind : {ScenarioKind::kPersonalized, ScenarioKind::kSegment}) {
    const Fixture f = make_fixture(kind, 4, 3);
    const ObjectiveBundle bundle(f.rr, *f.scenario.model, f.budget);
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
      const auto x = fixtures::random_point(rng, bundle.dim(), 0.01, 0.99);
      const auto fd = verify::central_difference([&](std::span<const double> y) { return bundle.hat_g(y); }, x, 1e-5);
      const auto grad = bundle.grad_hat_g(x);
      CHECK(verify::max_relative_error(grad, fd) <= 1e-6);
      for (double gj : grad) CHECK(gj >= 0.0);
      const auto [value, g2] = bundle.hat_value_and_grad(x);
      CHECK(value == bundle.hat_g(x));
      CHECK(verify::max_abs_error(g2, grad) <= 1e-12);
    }
  }
}

TEST_CASE("hat_g is monotone, DR-submodular and Lipschitz") {
  const Fixture f = make_fixture(ScenarioKind::kSegment, 5, 9);
  const ObjectiveBundle bundle(f.rr, *f.scenario.model, f.budget);
  Rng rng(6);
  for (int t = 0; t < 200; ++t) {
    const auto x = fixtures::random_point(rng, 5, 0.0, 0.5);
    auto y = x;
    for (double& v : y) v = std::min(1.0, v + 0.5 * rng.uniform());
    const std::size_t j = rng.below(5);
    const double delta = (1.0 - y[j]) * rng.uniform();
    auto xd = x, yd = y;
    xd[j] += delta;
    yd[j] += delta;
    CHECK(bundle.hat_g(x) <= bundle.hat_g(y) + 1e-12);
    CHECK(bundle.hat_g(xd) - bundle.hat_g(x) >= bundle.hat_g(yd) - bundle.hat_g(y) - 1e-9);
    const auto a = fixtures::random_point(rng, 5), b = fixtures::random_point(rng, 5);
    CHECK(std::abs(bundle.hat_g(a) - bundle.hat_g(b)) / dist(a, b) <= bundle.hat_lipschitz() + 1e-6);
  }
}

TEST_CASE("bar_g and its subgradient") {
  const Graph g(3, {});
  const BuiltScenario sc = build_scenario(g, ScenarioKind::kPersonalized, 0, {}, 1);
  const BudgetModel b(CostKind::kOneNorm, 3.0, 0.0, sc.model->upper());
  const RRCollection c = collection_of(3, {{0, 1}, {1}, {1, 2}});
  const ObjectiveBundle bundle(c, *sc.model, b);
  const std::vector<double> zero(3, 0.0);
  CHECK(bundle.bar_g(zero) == 0.0);
  const auto sg = bundle.subgrad_bar_g(zero);
  CHECK(sg == std::vector<double>{2.0, 6.0, 2.0});
  const std::vector<double> full{1.0, 1.0, 1.0};
  CHECK(bundle.bar_g(full) == 3.0);
  CHECK(bundle.subgrad_bar_g(full) == std::vector<double>{0.0, 0.0, 0.0});

  const auto cb = fixtures::constant_h(3, 3, 0.2);
  const ObjectiveBundle general(c, *cb, b);
  CHECK_THROWS_AS(general.bar_g(zero), UnsupportedModelError);
  CHECK_THROWS_AS(general.subgrad_bar_g(zero), UnsupportedModelError);
}

TEST_CASE("sandwich and concavity of the upper bound") {
  for (ScenarioKind kind : {ScenarioKind::kPersonalized, ScenarioKind::kSegment}) {
    const Fixture f = make_fixture(kind, 3, 12);
    const ObjectiveBundle bundle(f.rr, *f.scenario.model, f.budget);
    Rng rng(13);
    for (int t = 0; t < 100; ++t) {
      const auto x = fixtures::random_point(rng, bundle.dim());
      const auto y = fixtures::random_point(rng, bundle.dim());
      const double hat = bundle.hat_g(x), bar = bundle.bar_g(x);
      CHECK((1.0 - std::exp(-1.0)) * bar <= hat + 1e-9);
      CHECK(hat <= bar + 1e-9);
      std::vector<double> mid(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) mid[i] = 0.5 * (x[i] + y[i]);
      CHECK(bundle.bar_g(mid) >= 0.5 * (bundle.bar_g(x) + bundle.bar_g(y)) - 1e-9);
      const auto sg = bundle.subgrad_bar_g(x);
      double lin = bundle.bar_g(x);
      for (std::size_t i = 0; i < x.size(); ++i) lin += sg[i] * (y[i] - x[i]);
      CHECK(bundle.bar_g(y) <= lin + 1e-9);
      const auto [value, sg2] = bundle.bar_value_and_subgrad(x);
      CHECK(value == bar);
      CHECK(verify::max_abs_error(sg, sg2) <= 1e-12);
    }
  }
}

TEST_CASE("combined and decomposition") {
  const Fixture f = make_fixture(ScenarioKind::kSegment, 2, 5);
  const ObjectiveBundle bundle(f.rr, *f.scenario.model, f.budget);
  const std::vector<double> zero(2, 0.0);
  CHECK(bundle.combined(zero, Estimator::kHat) == doctest::Approx(1.5 * 2.0));
  CHECK(bundle.combined(zero, Estimator::kBar) == doctest::Approx(1.5 * 2.0));
  const std::vector<double> x{0.4, 0.7};
  const Decomposition d = bundle.decomposition(x, Estimator::kHat);
  CHECK(d.g_part == bundle.hat_g(x));
  CHECK(d.s_part == doctest::Approx(f.budget.saving(x)));
  CHECK(d.total() == doctest::Approx(bundle.combined(x, Estimator::kHat)));

  const BudgetModel no_lambda(CostKind::kOneNorm, 2.0, 0.0, f.scenario.model->upper());
  const ObjectiveBundle pure(f.rr, *f.scenario.model, no_lambda);
  CHECK(pure.combined(x, Estimator::kHat) == pure.hat_g(x));
}

TEST_CASE("values do not depend on the worker count") {
  const Graph g = generate_synthetic(SyntheticKind::kScaleFreeLike, 400, 2, 1);
  const BuiltScenario sc = build_scenario(g, ScenarioKind::kPersonalized, 0, {}, 1);
  const BudgetModel b(CostKind::kOneNorm, 5.0, 1.0, sc.model->upper());
  const RRCollection rr = generate(g, 30000, StreamFamily(3, StreamPurpose::kFinalSets));
  const ObjectiveBundle one(rr, *sc.model, b, 1), many(rr, *sc.model, b, 6);
  Rng rng(1);
  const auto x = fixtures::random_point(rng, 400, 0.0, 0.02);
  CHECK(one.hat_g(x) == many.hat_g(x));
  CHECK(one.grad_hat_g(x) == many.grad_hat_g(x));
  CHECK(one.bar_g(x) == many.bar_g(x));
  CHECK(one.subgrad_bar_g(x) == many.subgrad_bar_g(x));
}

TEST_CASE("constants") {
  const Fixture f = make_fixture(ScenarioKind::kSegment, 4, 2);
  const ObjectiveBundle bundle(f.rr, *f.scenario.model, f.budget);
  CHECK(bundle.smoothness() == doctest::Approx(f.rr.nu1() * 30 * 2.0 + f.rr.nu2() * 30 * 4.0));
  CHECK(bundle.hat_lipschitz() == doctest::Approx(f.rr.nu1() * 30 * 2.0));
  CHECK(bundle.bar_lipschitz() == doctest::Approx(f.rr.nu1() * 30 * 2.0 * 2.0 + 1.5 * 2.0));
  CHECK(proxgrad_lipschitz(10, 2.0, 3.0, 1.0) == 203.0);
  CHECK(uppergrad_lipschitz(10, 4, 2.0, 3.0, 1.0) == 403.0);
}

TEST_CASE("stochastic gradient") {
  const Graph g = fixtures::tiny_cycle();
  const BuiltScenario sc = build_scenario(g, ScenarioKind::kPersonalized, 0, {}, 1);
  const double lh = sc.model->lipschitz();
  const std::size_t n = 5;

  // At x = 0, S is always empty and v = n * sigma_L(u') * grad h_u'(0).
  Rng rng(3);
  const std::vector<double> zero(n, 0.0);
  for (int t = 0; t < 1000; ++t) {
    const auto v = stochastic_grad_g(g, *sc.model, zero, rng);
    std::size_t nonzero = 0;
    for (double c : v) {
      if (c == 0.0) continue;
      ++nonzero;
      const double reach = c / (5.0 * 2.0);
      CHECK(reach == std::round(reach));
      CHECK(reach >= 1.0);
      CHECK(reach <= 5.0);
    }
    CHECK(nonzero == 1);
  }

  const std::vector<double> x{0.2, 0.4, 0.1, 0.6, 0.3};
  const auto exact = exact_grad_g(g, *sc.model, x);
  StochasticGradient sampler(g, *sc.model);
  const auto h = activation_vector(*sc.model, x);
  const std::size_t draws = 100000;
  std::vector<double> sum(n, 0.0), sum_sq(n, 0.0), out;
  for (std::size_t t = 0; t < draws; ++t) {
    sampler.draw(x, h, rng, out);
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sum[j] += out[j];
      sum_sq[j] += out[j] * out[j];
      norm_sq += out[j] * out[j];
    }
    CHECK(std::sqrt(norm_sq) <= static_cast<double>(n * n) * lh + 1e-12);
  }
  double total_var = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double mean = sum[j] / draws;
    const double var = (sum_sq[j] - draws * mean * mean) / (draws - 1);
    total_var += var;
    CHECK(std::abs(mean - exact[j]) <= 4.0 * std::sqrt(var / draws));
  }
  CHECK(total_var <= 4.0 * lh * lh * std::pow(static_cast<double>(n), 4));
}
