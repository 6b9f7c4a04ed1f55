#include <cmath>
#include <numeric>

#include "cimbs/diffusion.hpp"
#include "cimbs/errors.hpp"
#include "cimbs/verify.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace cimbs;

namespace {

std::vector<NodeId> all_nodes(std::size_t n) {
  std::vector<NodeId> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// |observed - p| within 3 binomial standard deviations.
bool within_binomial(std::uint64_t hits, std::uint64_t trials, double p) {
  const double f = static_cast<double>(hits) / static_cast<double>(trials);
  return std::abs(f - p) <= 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

}  // namespace

TEST_CASE("sample_live_edge") {
  Rng rng(1);
  const Graph ones = fixtures::path3(1.0);
  CHECK(sample_live_edge(ones, rng).alive == std::vector<std::uint8_t>{1, 1});
  const Graph zeros = fixtures::path3(0.0);
  CHECK(sample_live_edge(zeros, rng).alive == std::vector<std::uint8_t>{0, 0});
  const Graph half = fixtures::path3(0.5);
  std::uint64_t hits[2] = {0, 0};
  const std::uint64_t trials = 100000;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto live = sample_live_edge(half, rng);
    REQUIRE(live.alive.size() == 2);
    hits[0] += live.alive[0];
    hits[1] += live.alive[1];
  }
  CHECK(within_binomial(hits[0], trials, 0.5));
  CHECK(within_binomial(hits[1], trials, 0.5));
}

TEST_CASE("spread_on and marginal_gain_on") {
  const Graph g = fixtures::path3(1.0);
  const LiveEdgeGraph live{&g, {1, 1}};
  CHECK(spread_on(live, std::vector<NodeId>{}) == 0);
  CHECK(spread_on(live, all_nodes(3)) == 3);
  CHECK(spread_on(live, std::vector<NodeId>{0}) == 3);
  CHECK(marginal_gain_on(live, 0, std::vector<NodeId>{}) == 3);
  CHECK(marginal_gain_on(live, 0, std::vector<NodeId>{2}) == 2);
  CHECK(marginal_gain_on(live, 1, std::vector<NodeId>{1}) == 0);

  const Graph cyc(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}});
  const LiveEdgeGraph cyc_live{&cyc, {1, 1, 1}};
  CHECK(marginal_gain_on(cyc_live, 0, std::vector<NodeId>{1, 2}) == 0);
}

TEST_CASE("spread monotone and marginal identity on random live graphs") {
  const Graph g = generate_synthetic(SyntheticKind::kErdosRenyi, 25, 0.12, 4);
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto live = sample_live_edge(g, rng);
    std::vector<NodeId> small, large;
    for (NodeId v = 0; v < 25; ++v) {
      const double r = rng.uniform();
      if (r < 0.1) small.push_back(v);
      if (r < 0.25) large.push_back(v);
    }
    CHECK(spread_on(live, small) <= spread_on(live, large));
    const auto u = static_cast<NodeId>(rng.below(25));
    std::vector<NodeId> with_u(small);
    if (std::find(small.begin(), small.end(), u) == small.end()) with_u.push_back(u);
    CHECK(marginal_gain_on(live, u, small) == spread_on(live, with_u) - spread_on(live, small));
  }
}

TEST_CASE("estimate_sigma") {
  const StreamFamily streams(7, StreamPurpose::kGeneric);
  const Graph edgeless(5, {});
  const auto e = estimate_sigma(edgeless, std::vector<NodeId>{0, 2, 4}, 1000, streams);
  CHECK(e.mean == 3.0);
  CHECK(e.std_error == 0.0);
  CHECK(estimate_sigma(edgeless, std::vector<NodeId>{}, 100, streams).mean == 0.0);

  const Graph pair(2, {{0, 1, 0.5}});
  const auto s = estimate_sigma(pair, std::vector<NodeId>{0}, 100000, streams);
  CHECK(s.num_sims == 100000);
  CHECK(std::abs(s.mean - 1.5) <= 3.0 * s.std_error);

  const auto one = estimate_sigma(pair, std::vector<NodeId>{0}, 1, streams);
  CHECK(one.std_error == 0.0);
}

TEST_CASE("make_estimate uses the unbiased variance") {
  // Samples {1, 3}: mean 2, variance 2, std error 1.
  const auto e = make_estimate(2, 4, 10);
  CHECK(e.mean == 2.0);
  CHECK(e.std_error == doctest::Approx(1.0));
}

TEST_CASE("sample_seed_set") {
  Rng rng(5);
  const std::vector<double> x{0.5};
  CHECK(sample_seed_set(*fixtures::constant_h(6, 1, 0.0), x, rng).empty());
  CHECK(sample_seed_set(*fixtures::constant_h(6, 1, 1.0), x, rng) == all_nodes(6));
  const auto h = fixtures::constant_h(4, 1, 0.3);
  std::vector<std::uint64_t> hits(4, 0);
  const std::uint64_t trials = 100000;
  for (std::uint64_t t = 0; t < trials; ++t)
    for (NodeId v : sample_seed_set(*h, x, rng)) ++hits[v];
  for (auto c : hits) CHECK(within_binomial(c, trials, 0.3));
}

TEST_CASE("estimate_g") {
  const StreamFamily streams(11, StreamPurpose::kGeneric);
  const std::vector<double> x{0.5};
  CHECK(estimate_g(fixtures::tiny_cycle(), *fixtures::constant_h(5, 1, 0.0), x, 1000, streams).mean == 0.0);
  const Graph edgeless(4, {});
  const auto e = estimate_g(edgeless, *fixtures::constant_h(4, 1, 0.5), x, 100000, streams);
  CHECK(std::abs(e.mean - 2.0) <= 3.0 * e.std_error);

  const Graph g = fixtures::tiny_cycle();
  const BuiltScenario sc = build_scenario(g, ScenarioKind::kPersonalized, 0, {}, 1);
  const std::vector<double> xp{0.2, 0.5, 0.1, 0.7, 0.3};
  const auto mc = estimate_g(g, *sc.model, xp, 200000, streams);
  CHECK(std::abs(mc.mean - exact_g(g, *sc.model, xp)) <= 4.0 * mc.std_error);
}

TEST_CASE("estimate_g does not depend on the worker count") {
  const Graph g = generate_synthetic(SyntheticKind::kScaleFreeLike, 200, 2, 8);
  const BuiltScenario sc = build_scenario(g, ScenarioKind::kSegment, 3, {}, 2);
  const std::vector<double> x{0.3, 0.1, 0.6};
  const StreamFamily streams(99, StreamPurpose::kEvaluation);
  const auto a = estimate_g(g, *sc.model, x, 10000, streams, 1);
  const auto b = estimate_g(g, *sc.model, x, 10000, streams, 4);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("exact_g examples") {
  const Graph edgeless(3, {});
  const BuiltScenario sc = build_scenario(edgeless, ScenarioKind::kPersonalized, 0, {}, 1);
  const std::vector<double> x{0.1, 0.4, 0.9};
  double expected = 0.0;
  for (double v : x) expected += q_quadratic(v);
  CHECK(exact_g(edgeless, *sc.model, x) == doctest::Approx(expected).epsilon(1e-14));

  const Graph pair(2, {{0, 1, 1.0}});
  const BuiltScenario ps = build_scenario(pair, ScenarioKind::kPersonalized, 0, {}, 1);
  // q(x0) = 0.5 at x0 = 1 - sqrt(0.5).
  const std::vector<double> x2{1.0 - std::sqrt(0.5), 0.0};
  CHECK(exact_g(pair, *ps.model, x2) == doctest::Approx(1.0).epsilon(1e-12));

  const Graph big = generate_synthetic(SyntheticKind::kErdosRenyi, 12, 0.5, 1);
  REQUIRE(big.num_edges() > kExactMaxEdges);
  const BuiltScenario bs = build_scenario(big, ScenarioKind::kPersonalized, 0, {}, 1);
  CHECK_THROWS_AS(exact_g(big, *bs.model, std::vector<double>(12, 0.1)), EnumerationLimitError);
}

TEST_CASE("exact_grad_g") {
  const Graph g = fixtures::tiny_cycle();
  const BuiltScenario sc = build_scenario(g, ScenarioKind::kPersonalized, 0, {}, 1);
  const ExactSpread spread(g);

  // At x = 0 only S = {} contributes.
  const std::vector<double> zero(5, 0.0);
  const auto g0 = exact_grad_g(g, *sc.model, zero);
  for (NodeId v = 0; v < 5; ++v) CHECK(g0[v] == doctest::Approx(2.0 * spread.sigma(1u << v)));

  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = fixtures::random_point(rng, 5, 0.01, 0.99);
    const auto fd = verify::central_difference([&](std::span<const double> y) { return exact_g(g, *sc.model, y); }, x,
                                               1e-5);
    CHECK(verify::max_relative_error(exact_grad_g(g, *sc.model, x), fd) <= 1e-6);
  }

  const Graph edgeless(4, {});
  const BuiltScenario es = build_scenario(edgeless, ScenarioKind::kPersonalized, 0, {}, 1);
  const std::vector<double> x{0.1, 0.3, 0.5, 0.9};
  const auto grad = exact_grad_g(edgeless, *es.model, x);
  for (NodeId v = 0; v < 4; ++v) CHECK(grad[v] == doctest::Approx(q_quadratic_derivative(x[v])));

  const Graph eleven(11, {});
  const BuiltScenario e11 = build_scenario(eleven, ScenarioKind::kSegment, 1, {}, 1);
  CHECK_THROWS_AS(exact_grad_g(eleven, *e11.model, std::vector<double>{0.5}), EnumerationLimitError);
}

TEST_CASE("spread identity between the two exact oracles") {
  const Graph g = fixtures::tiny_cycle();
  const ExactInfluence inf(g);
  const ExactSpread spread(g);
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = fixtures::random_point(rng, 5);
    CHECK(inf.g_from_h(h) == doctest::Approx(spread.g_from_h(h)).epsilon(1e-12));
  }
}
