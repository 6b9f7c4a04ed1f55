#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cimbs/budget.hpp"
#include "cimbs/graph.hpp"
#include "cimbs/optimize.hpp"
#include "cimbs/rrset.hpp"
#include "cimbs/strategy.hpp"

namespace cimbs::app {

/// One algorithm column of a run: its display name and optimizer settings.
struct AlgorithmChoice {
  std::string name;
  OptimizerSpec spec;
};

/// Parsed run configuration. Defaults follow the usual experiment settings.
struct RunConfig {
  std::optional<std::string> graph_path;
  SyntheticKind synthetic_kind = SyntheticKind::kScaleFreeLike;
  std::size_t synthetic_n = 0;
  double synthetic_param = 2.0;
  WeightMode weights = WeightMode::kWeightedCascade;

  ScenarioKind scenario = ScenarioKind::kPersonalized;
  std::size_t scenario_d = 0;
  SizeBounds size_bounds;

  CostKind cost = CostKind::kOneNorm;
  double k = 5.0;
  double lambda = 0.0;

  std::vector<AlgorithmChoice> algorithms;
  double epsilon = 0.3;
  double ell = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t eval_sims = 1000;
  std::uint64_t eval_runs = 5;
  std::vector<double> sweep_k;
  std::vector<double> sweep_lambda;
  ResampleMode resample = ResampleMode::kReuse;
  std::uint64_t theta_cap = 10'000'000;
  std::uint64_t iteration_cap = kDefaultIterationCap;
  std::size_t segment_attempts = 1000;
  std::uint64_t org_iterations = 10'000;
  std::uint64_t checkpoint_sims = 200;
  bool timing = true;
};

/// Reads flat `key = value` text; '#' starts a comment line. Unknown keys,
/// malformed values and repeated keys raise ConfigError (ParseError for
/// lines without '=').
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Builds the graph the configuration describes.
Graph build_graph(const RunConfig& config);
BuiltScenario build_strategy(const RunConfig& config, const Graph& graph);

/// Per-(algorithm, k, lambda) aggregate over eval.runs independent solves.
struct ResultRow {
  std::string algorithm;
  double k = 0.0;
  double lambda = 0.0;
  double mean_value = 0.0;
  double std_value = 0.0;
  double g_part = 0.0;
  double s_part = 0.0;
  double runtime_seconds = 0.0;
  std::uint64_t rr_sets = 0;
  std::uint64_t iterations = 0;
  bool truncated = false;
  /// Standard error of mean_value over the runs (not written to the CSV).
  double std_error = 0.0;
};

/// Sweep points: (k_i, lambda) for each sweep.k entry, then (k, lambda_j) for
/// each sweep.lambda entry, duplicates dropped; the single point (k, lambda)
/// without sweeps.
std::vector<std::pair<double, double>> sweep_points(const RunConfig& config);

std::vector<ResultRow> run_solves(const RunConfig& config, int workers, std::ostream* log = nullptr);

inline constexpr const char* kCsvHeader =
    "algorithm,k,lambda,mean_value,std_value,g_part,s_part,runtime_seconds,rr_sets,iterations,truncated_flag";
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
/// value_vs_k.csv, value_vs_lambda.csv and decomposition_vs_lambda.csv.
void write_plot_data(const std::string& dir, const RunConfig& config, const std::vector<ResultRow>& rows);

/// Shortest round-trip text for a double ("nan" for NaN).
std::string format_number(double v);

struct MomentsRow {
  std::uint64_t count;
  std::size_t n;
  double nu1, nu2, nu3;
  double n_over_nu1, n2_over_nu2, nu1n_over_nu2, nu1n2_over_nu3;
};
MomentsRow run_moments(const RunConfig& config, std::uint64_t count, int workers);

/// Command entry points. They return the process exit code: 0 on success,
/// 2 on configuration errors, 1 on other failures.
int cmd_solve(const std::string& config_path, const std::optional<std::string>& out_path,
              const std::optional<std::string>& plot_dir, int workers, std::optional<std::uint64_t> seed,
              std::ostream& out, std::ostream& err);
int cmd_moments(const std::string& config_path, std::uint64_t count, const std::optional<std::string>& out_path,
                int workers, std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err);
int cmd_oracle(const std::optional<std::string>& config_path, int workers, std::optional<std::uint64_t> seed,
               std::ostream& out, std::ostream& err);
int cmd_gen_graph(const std::string& config_path, const std::optional<std::string>& out_path,
                  std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err);

}  // namespace cimbs::app
