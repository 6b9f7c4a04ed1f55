#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "cimbs/graph.hpp"
#include "cimbs/rng.hpp"
#include "cimbs/strategy.hpp"

namespace fixtures {

using namespace cimbs;

inline Graph path3(double p = 1.0) { return Graph(3, {{0, 1, p}, {1, 2, p}}); }

inline Graph tiny_cycle() {
  return Graph(5, {{0, 1, 0.5}, {1, 2, 0.4}, {0, 2, 0.3}, {2, 3, 0.7}, {3, 4, 0.6}, {4, 0, 0.2}});
}

/// A strategy with h_v(x) = c for every node, independent of x.
inline std::shared_ptr<CallbackActivation> constant_h(std::size_t n, std::size_t d, double c) {
  return std::make_shared<CallbackActivation>(
      n, std::vector<double>(d, 1.0), [c](NodeId, std::span<const double>) { return c; },
      [](NodeId, std::span<const double>, std::vector<SparseEntry>&) {}, 0.0, 0.0);
}

inline std::vector<double> random_point(Rng& rng, std::size_t d, double lo = 0.0, double hi = 1.0) {
  std::vector<double> x(d);
  for (double& v : x) v = lo + (hi - lo) * rng.uniform();
  return x;
}

/// Random point of {0 <= x <= 1, ||x||_1 <= k}.
inline std::vector<double> random_feasible_one_norm(Rng& rng, std::size_t d, double k, double margin = 0.0) {
  std::vector<double> x = random_point(rng, d, margin, 1.0 - margin);
  double s = 0.0;
  for (double v : x) s += v;
  const double target = k * rng.uniform();
  if (s > target && s > 0.0)
    for (double& v : x) v = std::max(margin, v * target / s);
  return x;
}

}  // namespace fixtures
