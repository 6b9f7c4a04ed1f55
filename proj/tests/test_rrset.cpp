#include <cmath>

#include "cimbs/diffusion.hpp"
#include "cimbs/errors.hpp"
#include "cimbs/rrset.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace cimbs;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("sample_rr examples") {
  Rng rng(1);
  const Graph edgeless(4, {});
  for (int t = 0; t < 100; ++t) CHECK(sample_rr(edgeless, rng).size() == 1);

  const Graph pair(2, {{0, 1, 1.0}});
  for (int t = 0; t < 100; ++t) {
    const auto r = sample_rr(pair, rng);
    if (r[0] == 1)
      CHECK(r.size() == 2);
    else
      CHECK(r == std::vector<NodeId>{0});
  }

  const Graph half(2, {{0, 1, 0.5}});
  const std::uint64_t trials = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const double s = static_cast<double>(sample_rr(half, rng).size());
    sum += s;
    sum_sq += s * s;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt((sum_sq / trials - mean * mean) / trials);
  CHECK(std::abs(mean - 1.25) <= 3.0 * sd);
}

TEST_CASE("root uniform and RR sets reverse-closed under live edges") {
  const Graph g = generate_synthetic(SyntheticKind::kErdosRenyi, 10, 0.2, 3);
  Rng rng(4);
  std::vector<std::uint64_t> roots(10, 0);
  const std::uint64_t trials = 50000;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto r = sample_rr(g, rng);
    ++roots[r[0]];
    std::vector<bool> seen(10, false);
    for (NodeId v : r) {
      CHECK_FALSE(seen[v]);
      seen[v] = true;
    }
  }
  for (auto c : roots) CHECK(std::abs(static_cast<double>(c) / trials - 0.1) <= 3.0 * std::sqrt(0.09 / trials));
}

TEST_CASE("RIS identity on a tiny graph") {
  const Graph g = fixtures::tiny_cycle();
  const BuiltScenario sc = build_scenario(g, ScenarioKind::kPersonalized, 0, {}, 1);
  const std::vector<double> x{0.3, 0.1, 0.0, 0.6, 0.2};
  const auto h = activation_vector(*sc.model, x);
  Rng rng(8);
  std::vector<double> samples;
  for (int t = 0; t < 100000; ++t) {
    double prod = 1.0;
    for (NodeId u : sample_rr(g, rng)) prod *= 1.0 - h[u];
    samples.push_back(5.0 * (1.0 - prod));
  }
  const double m = mean_of(samples);
  double var = 0.0;
  for (double s : samples) var += (s - m) * (s - m);
  const double se = std::sqrt(var / (samples.size() - 1) / samples.size());
  CHECK(std::abs(m - exact_g(g, *sc.model, x)) <= 4.0 * se);
}

TEST_CASE("collections and moments") {
  const StreamFamily streams(3, StreamPurpose::kRoundSets);
  const Graph edgeless(6, {});
  const RRCollection one = generate(edgeless, 1, streams);
  const Moments m1 = moments_report(one);
  CHECK(m1.nu1 == 1.0);
  CHECK(m1.nu2 == 1.0);
  CHECK(m1.nu3 == 1.0);

  RRCollection manual(4);
  manual.add(std::vector<NodeId>{0});
  manual.add(std::vector<NodeId>{1, 2, 3});
  const Moments m = moments_report(manual);
  CHECK(m.nu1 == 2.0);
  CHECK(m.nu2 == 5.0);
  CHECK(m.nu3 == 14.0);
  CHECK_THROWS_AS(moments_report(RRCollection(3)), ConfigError);

  const Graph g = generate_synthetic(SyntheticKind::kScaleFreeLike, 300, 2, 5);
  const RRCollection a = generate(g, 20000, streams, 1);
  const RRCollection b = generate(g, 20000, streams, 8);
  REQUIRE(a.size() == b.size());
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) same = same && std::ranges::equal(a.set(i), b.set(i));
  CHECK(same);
  CHECK(a.nu1() * a.nu1() <= a.nu2());
  CHECK(a.nu1() * a.nu2() <= a.nu3());

  RRCollection c = generate(g, 5000, streams, 3);
  extend(c, g, 20000, streams, 2);
  bool prefix = c.size() == a.size();
  for (std::size_t i = 0; prefix && i < a.size(); ++i) prefix = std::ranges::equal(a.set(i), c.set(i));
  CHECK(prefix);
}

TEST_CASE("covering_log") {
  const BudgetModel b(CostKind::kOneNorm, 1.0, 0.0, {1.0, 1.0});
  CHECK(covering_log(b, 3.0) == 0.0);
  CHECK(covering_log(b, 10.0) == 0.0);
  CHECK(covering_log(b, 0.3) == doctest::Approx(2.0 * std::log(10.0)));
  const BudgetModel b4(CostKind::kOneNorm, 1.0, 0.0, {1.0, 1.0, 1.0, 1.0});
  CHECK(covering_log(b4, 0.3) == doctest::Approx(2.0 * covering_log(b, 0.3)));
}

TEST_CASE("sample-size formulas") {
  CHECK(sampling_rounds(100, 28.0) == 6);
  CHECK(sampling_rounds(1, 0.0) == 0);
  CHECK(round_threshold(100, 28.0, 3) == 16.0);

  const double expected1 = 8.0 * 16.0 * std::log(64.0) / (1.0 * (0.5 - 0.1) * (0.5 - 0.1) * 0.09 / 9.0);
  CHECK(theta_one(16, 0.3, 1.0, 0.5, 1.0) == doctest::Approx(expected1).epsilon(1e-14));

  // eps' = sqrt(2) eps / 3, the round size with a zero covering term.
  const double eps = 0.3, ep = std::sqrt(2.0) * eps / 3.0;
  const double xi = round_threshold(100, 28.0, 2);
  const double expected_round = 100.0 * (2.0 + 2.0 * ep / 3.0) *
                                (std::log(100.0) + std::log(2.0) + std::log(std::log2(128.0))) / (ep * ep * xi);
  CHECK(theta_round_real(100, 28.0, eps, 1.0, 0.0, xi) == doctest::Approx(expected_round).epsilon(1e-14));

  CHECK(checked_count(2.1, 10) == 3);
  CHECK(checked_count(0.0, 10) == 1);
  try {
    checked_count(11.5, 10);
    FAIL("expected a resource error");
  } catch (const ResourceError& e) {
    CHECK(e.required() == 12);
    CHECK(e.cap() == 10);
  }
}

TEST_CASE("sampling procedure with a zero objective keeps LB at 1") {
  const Graph g = generate_synthetic(SyntheticKind::kScaleFreeLike, 64, 2, 1);
  const BudgetModel b(CostKind::kOneNorm, 2.0, 0.0, {1.0, 1.0});
  SamplingParams p;
  p.epsilon = 0.5;
  p.ell = 1.0;
  std::size_t calls = 0;
  const GradientAlgorithm zero = [&](const RRCollection&, double) {
    ++calls;
    return InnerResult{{0.0, 0.0}, 0.0, 1, false};
  };
  const StreamFamily rounds(4, StreamPurpose::kRoundSets), finals(4, StreamPurpose::kFinalSets);
  const SamplingOutput out = sampling_procedure(g, b, p, zero, rounds, finals);
  CHECK(out.lb == 1.0);
  CHECK_FALSE(out.lb_updated);
  CHECK(out.loop_rounds == sampling_rounds(64, 0.0));
  CHECK(calls == out.loop_rounds);
  CHECK(out.collection.size() == static_cast<std::size_t>(std::ceil(std::max(out.theta1, out.theta2))));
  for (std::size_t i = 1; i < out.theta_history.size(); ++i) CHECK(out.theta_history[i] >= out.theta_history[i - 1]);

  const SamplingOutput again = sampling_procedure(g, b, p, zero, rounds, finals);
  CHECK(again.collection.size() == out.collection.size());
  CHECK(again.collection.total_size() == out.collection.total_size());

  p.theta_cap = 10;
  CHECK_THROWS_AS(sampling_procedure(g, b, p, zero, rounds, finals), ResourceError);
}

TEST_CASE("sampling procedure breaks when the value clears the threshold") {
  const Graph g(64, {});
  const BudgetModel b(CostKind::kOneNorm, 2.0, 0.0, {1.0, 1.0});
  SamplingParams p;
  p.epsilon = 0.5;
  const double factor = 1.0 + std::sqrt(2.0) * 0.5 / 3.0 + 0.5 / 3.0;
  const GradientAlgorithm big = [&](const RRCollection&, double) {
    return InnerResult{{0.0, 0.0}, 40.0, 1, false};
  };
  const SamplingOutput out =
      sampling_procedure(g, b, p, big, StreamFamily(1, StreamPurpose::kRoundSets), StreamFamily(1, StreamPurpose::kFinalSets));
  // x_1 = 32 is above 40 / factor, x_2 = 16 is below.
  CHECK(out.loop_rounds == 2);
  CHECK(out.lb_updated);
  CHECK(out.lb == doctest::Approx(40.0 / factor));
}
