#include "cimbs/app.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "cimbs/errors.hpp"
#include "cimbs/pipeline.hpp"
#include "cimbs/verify.hpp"

namespace cimbs::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

AlgorithmChoice parse_algorithm(const std::string& name) {
  AlgorithmChoice c;
  c.name = name;
  std::string base = name;
  bool heu = false;
  const std::string suffix = "_heu";
  if (base.size() > suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
    base = base.substr(0, base.size() - suffix.size());
    heu = true;
  }
  if (base == "proxgrad_ris") {
    c.spec.kind = OptimizerKind::kProxGradRis;
  } else if (base == "uppergrad_ris") {
    c.spec.kind = OptimizerKind::kUpperGradRis;
  } else if (base == "proxgrad_org") {
    c.spec.kind = OptimizerKind::kProxGradOrg;
  } else if (base == "greedy_ris" && !heu) {
    c.spec.kind = OptimizerKind::kGreedyRis;
  } else {
    throw ConfigError("unknown algorithm '" + name + "'");
  }
  if (heu) c.spec.termination = Termination::kHeuristic;
  return c;
}

std::uint64_t derive(std::uint64_t seed, StreamPurpose purpose, std::uint64_t index) {
  return StreamFamily(seed, purpose).at(index).next();
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig c;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  std::vector<std::string> algo_names{"proxgrad_ris"};
  std::optional<Termination> termination;
  double heu_threshold = 0.3;
  double greedy_step = 0.1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string v = trim(t.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(line_no) + ": repeated key " + key);
    if (key == "graph.path") {
      c.graph_path = v;
    } else if (key == "graph.synthetic.kind") {
      if (v == "erdos_renyi") {
        c.synthetic_kind = SyntheticKind::kErdosRenyi;
      } else if (v == "scale_free_like") {
        c.synthetic_kind = SyntheticKind::kScaleFreeLike;
      } else {
        throw ConfigError(key + ": unknown kind '" + v + "'");
      }
    } else if (key == "graph.synthetic.n") {
      c.synthetic_n = to_count(key, v);
    } else if (key == "graph.synthetic.param") {
      c.synthetic_param = to_double(key, v);
    } else if (key == "graph.weights") {
      if (v == "explicit") {
        c.weights = WeightMode::kExplicit;
      } else if (v == "weighted_cascade") {
        c.weights = WeightMode::kWeightedCascade;
      } else {
        throw ConfigError(key + ": expected explicit or weighted_cascade");
      }
    } else if (key == "scenario.kind") {
      if (v == "personalized") {
        c.scenario = ScenarioKind::kPersonalized;
      } else if (v == "segment") {
        c.scenario = ScenarioKind::kSegment;
      } else {
        throw ConfigError(key + ": expected personalized or segment");
      }
    } else if (key == "scenario.d") {
      c.scenario_d = to_count(key, v);
    } else if (key == "scenario.size_bounds") {
      const auto parts = split_list(v);
      if (parts.size() != 2) throw ConfigError(key + ": expected lo,hi");
      c.size_bounds = {to_count(key, parts[0]), to_count(key, parts[1])};
    } else if (key == "cost.kind") {
      if (v == "one_norm") {
        c.cost = CostKind::kOneNorm;
      } else if (v == "two_norm") {
        c.cost = CostKind::kTwoNorm;
      } else {
        throw ConfigError(key + ": expected one_norm or two_norm");
      }
    } else if (key == "budget.k") {
      c.k = to_double(key, v);
    } else if (key == "budget.lambda") {
      c.lambda = to_double(key, v);
    } else if (key == "algo.kind") {
      algo_names = split_list(v);
      if (algo_names.empty()) throw ConfigError(key + ": empty list");
    } else if (key == "algo.termination") {
      if (v == "theory") {
        termination = Termination::kTheory;
      } else if (v == "heuristic") {
        termination = Termination::kHeuristic;
      } else {
        throw ConfigError(key + ": expected theory or heuristic");
      }
    } else if (key == "algo.heu_threshold") {
      heu_threshold = to_double(key, v);
      if (!(heu_threshold > 0.0)) throw ConfigError(key + " must be positive");
    } else if (key == "algo.greedy_step") {
      greedy_step = to_double(key, v);
      if (!(greedy_step > 0.0)) throw ConfigError(key + " must be positive");
    } else if (key == "algo.org_iterations") {
      c.org_iterations = to_count(key, v);
    } else if (key == "algo.checkpoint_sims") {
      c.checkpoint_sims = to_count(key, v);
    } else if (key == "epsilon") {
      c.epsilon = to_double(key, v);
    } else if (key == "ell") {
      c.ell = to_double(key, v);
    } else if (key == "seed") {
      c.seed = to_count(key, v);
    } else if (key == "eval.sims") {
      c.eval_sims = to_count(key, v);
    } else if (key == "eval.runs") {
      c.eval_runs = to_count(key, v);
    } else if (key == "sweep.k") {
      for (const auto& item : split_list(v)) c.sweep_k.push_back(to_double(key, item));
    } else if (key == "sweep.lambda") {
      for (const auto& item : split_list(v)) c.sweep_lambda.push_back(to_double(key, item));
    } else if (key == "sampling.resample") {
      if (v == "reuse") {
        c.resample = ResampleMode::kReuse;
      } else if (v == "fresh") {
        c.resample = ResampleMode::kFresh;
      } else {
        throw ConfigError(key + ": expected reuse or fresh");
      }
    } else if (key == "caps.theta") {
      c.theta_cap = to_count(key, v);
    } else if (key == "caps.iterations") {
      c.iteration_cap = to_count(key, v);
    } else if (key == "caps.segment_attempts") {
      c.segment_attempts = to_count(key, v);
    } else if (key == "output.timing") {
      c.timing = to_bool(key, v);
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key " + key);
    }
  }
  for (const auto& name : algo_names) {
    AlgorithmChoice a = parse_algorithm(name);
    if (termination && a.name.find("_heu") == std::string::npos) a.spec.termination = *termination;
    a.spec.heu_threshold = heu_threshold;
    a.spec.greedy_step = greedy_step;
    a.spec.iteration_cap = c.iteration_cap;
    a.spec.checkpoint_sims = c.checkpoint_sims;
    c.algorithms.push_back(a);
  }
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(c.ell > 0.0)) throw ConfigError("ell must be positive");
  if (c.eval_sims == 0 || c.eval_runs == 0) throw ConfigError("eval.sims and eval.runs must be >= 1");
  if (!c.graph_path && c.synthetic_n == 0) throw ConfigError("set graph.path or graph.synthetic.n");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in);
}

Graph build_graph(const RunConfig& c) {
  if (c.graph_path) return load_edge_list_file(*c.graph_path, c.weights);
  return generate_synthetic(c.synthetic_kind, c.synthetic_n, c.synthetic_param,
                            derive(c.seed, StreamPurpose::kSynthetic, 0));
}

BuiltScenario build_strategy(const RunConfig& c, const Graph& graph) {
  return build_scenario(graph, c.scenario, c.scenario_d, c.size_bounds, derive(c.seed, StreamPurpose::kScenario, 0),
                        c.segment_attempts);
}

std::vector<std::pair<double, double>> sweep_points(const RunConfig& c) {
  std::vector<std::pair<double, double>> pts;
  auto add = [&](double k, double l) {
    if (std::find(pts.begin(), pts.end(), std::make_pair(k, l)) == pts.end()) pts.emplace_back(k, l);
  };
  for (double k : c.sweep_k) add(k, c.lambda);
  for (double l : c.sweep_lambda) add(c.k, l);
  if (pts.empty()) add(c.k, c.lambda);
  return pts;
}

std::vector<ResultRow> run_solves(const RunConfig& c, int workers, std::ostream* log) {
  const Graph graph = build_graph(c);
  const BuiltScenario scenario = build_strategy(c, graph);
  std::vector<ResultRow> rows;
  for (const AlgorithmChoice& algo : c.algorithms) {
    for (const auto& [k, lambda] : sweep_points(c)) {
      const BudgetModel budget(c.cost, k, lambda, scenario.model->upper());
      ResultRow row;
      row.algorithm = algo.name;
      row.k = k;
      row.lambda = lambda;
      std::vector<double> values;
      double g_sum = 0.0, s_sum = 0.0, seconds = 0.0, rr = 0.0, iters = 0.0;
      try {
        for (std::uint64_t r = 0; r < c.eval_runs; ++r) {
          SolveConfig sc;
          sc.graph = &graph;
          sc.strategy = scenario.model.get();
          sc.budget = &budget;
          sc.optimizer = algo.spec;
          sc.epsilon = c.epsilon;
          sc.ell = c.ell;
          sc.resample = c.resample;
          sc.seed = derive(c.seed, StreamPurpose::kGeneric, r);
          sc.eval_sims = c.eval_sims;
          sc.eval_runs = 1;
          sc.theta_cap = c.theta_cap;
          sc.org_iterations = c.org_iterations;
          sc.workers = workers;
          const auto start = std::chrono::steady_clock::now();
          const Solution sol = solve(sc);
          seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          values.push_back(sol.evaluation.mean);
          g_sum += sol.evaluation.parts.g_part;
          s_sum += sol.evaluation.parts.s_part;
          rr += static_cast<double>(sol.report.rr_sets);
          iters += static_cast<double>(sol.report.iterations);
          row.truncated = row.truncated || sol.report.truncated;
        }
      } catch (const ResourceError& e) {
        if (log) *log << algo.name << " at k=" << k << ", lambda=" << lambda << ": " << e.what() << "\n";
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.mean_value = row.std_value = row.g_part = row.s_part = row.std_error = nan;
        row.runtime_seconds = 0.0;
        row.rr_sets = e.required();
        row.truncated = true;
        rows.push_back(row);
        continue;
      }
      const double runs = static_cast<double>(c.eval_runs);
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= runs;
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      row.mean_value = mean;
      row.std_value = values.size() > 1 ? std::sqrt(ss / (runs - 1.0)) : 0.0;
      row.std_error = row.std_value / std::sqrt(runs);
      row.g_part = g_sum / runs;
      row.s_part = s_sum / runs;
      row.runtime_seconds = c.timing ? seconds / runs : 0.0;
      row.rr_sets = static_cast<std::uint64_t>(std::llround(rr / runs));
      row.iterations = static_cast<std::uint64_t>(std::llround(iters / runs));
      if (log)
        *log << algo.name << " k=" << k << " lambda=" << lambda << " value=" << format_number(mean) << "\n";
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvHeader << '\n';
  for (const ResultRow& r : rows) {
    out << r.algorithm << ',' << format_number(r.k) << ',' << format_number(r.lambda) << ','
        << format_number(r.mean_value) << ',' << format_number(r.std_value) << ',' << format_number(r.g_part)
        << ',' << format_number(r.s_part) << ',' << format_number(r.runtime_seconds) << ',' << r.rr_sets << ','
        << r.iterations << ',' << (r.truncated ? 1 : 0) << '\n';
  }
}

void write_plot_data(const std::string& dir, const RunConfig& c, const std::vector<ResultRow>& rows) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  std::ofstream vk(base / "value_vs_k.csv");
  std::ofstream vl(base / "value_vs_lambda.csv");
  std::ofstream dl(base / "decomposition_vs_lambda.csv");
  if (!vk || !vl || !dl) throw Error("cannot write plot data under " + dir);
  vk << "algorithm,k,mean_value,std_value\n";
  vl << "algorithm,lambda,mean_value,std_value\n";
  dl << "algorithm,lambda,g_part,s_part\n";
  for (const ResultRow& r : rows) {
    const bool on_k = std::find(c.sweep_k.begin(), c.sweep_k.end(), r.k) != c.sweep_k.end() && r.lambda == c.lambda;
    const bool on_lambda =
        std::find(c.sweep_lambda.begin(), c.sweep_lambda.end(), r.lambda) != c.sweep_lambda.end() && r.k == c.k;
    if (on_k)
      vk << r.algorithm << ',' << format_number(r.k) << ',' << format_number(r.mean_value) << ','
         << format_number(r.std_value) << '\n';
    if (on_lambda) {
      vl << r.algorithm << ',' << format_number(r.lambda) << ',' << format_number(r.mean_value) << ','
         << format_number(r.std_value) << '\n';
      dl << r.algorithm << ',' << format_number(r.lambda) << ',' << format_number(r.g_part) << ','
         << format_number(r.s_part) << '\n';
    }
  }
}

MomentsRow run_moments(const RunConfig& c, std::uint64_t count, int workers) {
  if (count == 0) throw ConfigError("count must be >= 1");
  const Graph graph = build_graph(c);
  const RRCollection rr = generate(graph, count, StreamFamily(c.seed, StreamPurpose::kGeneric), workers);
  const Moments m = moments_report(rr);
  const double n = static_cast<double>(graph.num_nodes());
  return {count, graph.num_nodes(), m.nu1, m.nu2, m.nu3, n / m.nu1, n * n / m.nu2, m.nu1 * n / m.nu2,
          m.nu1 * n * n / m.nu3};
}

namespace {

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  return f;
}

}  // namespace

int cmd_solve(const std::string& config_path, const std::optional<std::string>& out_path,
              const std::optional<std::string>& plot_dir, int workers, std::optional<std::uint64_t> seed,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig c = load_config(config_path);
    if (seed) c.seed = *seed;
    const std::vector<ResultRow> rows = run_solves(c, workers, &err);
    if (out_path) {
      std::ofstream f = open_out(*out_path);
      write_csv(f, rows);
    } else {
      write_csv(out, rows);
    }
    if (plot_dir) write_plot_data(*plot_dir, c, rows);
    return 0;
  });
}

int cmd_moments(const std::string& config_path, std::uint64_t count, const std::optional<std::string>& out_path,
                int workers, std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig c = load_config(config_path);
    if (seed) c.seed = *seed;
    const MomentsRow m = run_moments(c, count, workers);
    out << "nu1 = " << format_number(m.nu1) << "\nnu2 = " << format_number(m.nu2)
        << "\nnu3 = " << format_number(m.nu3) << "\nn/nu1 = " << format_number(m.n_over_nu1)
        << "\nn^2/nu2 = " << format_number(m.n2_over_nu2) << "\nnu1*n/nu2 = " << format_number(m.nu1n_over_nu2)
        << "\nnu1*n^2/nu3 = " << format_number(m.nu1n2_over_nu3) << '\n';
    if (out_path) {
      std::ofstream f = open_out(*out_path);
      f << "count,n,nu1,nu2,nu3,n_over_nu1,n2_over_nu2,nu1_n_over_nu2,nu1_n2_over_nu3\n"
        << m.count << ',' << m.n << ',' << format_number(m.nu1) << ',' << format_number(m.nu2) << ','
        << format_number(m.nu3) << ',' << format_number(m.n_over_nu1) << ',' << format_number(m.n2_over_nu2)
        << ',' << format_number(m.nu1n_over_nu2) << ',' << format_number(m.nu1n2_over_nu3) << '\n';
    }
    return 0;
  });
}

int cmd_oracle(const std::optional<std::string>& config_path, int workers, std::optional<std::uint64_t> seed,
               std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    verify::OracleOptions opt;
    if (config_path) opt.seed = load_config(*config_path).seed;
    if (seed) opt.seed = *seed;
    opt.workers = workers;
    bool ok = true;
    for (const auto& r : verify::run_oracle_suite(opt)) {
      ok = ok && r.passed;
      out << (r.passed ? "PASS " : "FAIL ") << r.name << "  max_error=" << format_number(r.max_error)
          << " tol=" << format_number(r.tolerance) << " seconds=" << format_number(r.seconds);
      if (!r.detail.empty()) out << "  [" << r.detail << "]";
      out << '\n';
    }
    return ok ? 0 : 1;
  });
}

int cmd_gen_graph(const std::string& config_path, const std::optional<std::string>& out_path,
                  std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig c = load_config(config_path);
    if (seed) c.seed = *seed;
    const Graph g = build_graph(c);
    if (out_path) {
      std::ofstream f = open_out(*out_path);
      write_edge_list(f, g);
    } else {
      write_edge_list(out, g);
    }
    return 0;
  });
}

}  // namespace cimbs::app
