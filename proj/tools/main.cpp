#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cimbs/app.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Continuous influence maximization with budget saving"};
  cli.require_subcommand(1);

  std::string config;
  std::string out;
  std::string plot_dir;
  int workers = 0;
  std::uint64_t seed = 0;
  std::uint64_t count = 10000;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("--config", config, "run configuration file");
    if (need_config) opt->required();
    sub->add_option("--workers", workers, "worker threads (0 = hardware parallelism)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", seed, "override the seed key");
  };

  auto* solve = cli.add_subcommand("solve", "run the configured solves and write result rows");
  add_common(solve, true);
  solve->add_option("--out", out, "CSV output path (default: stdout)");
  solve->add_option("--plot-dir", plot_dir, "directory for per-figure CSV data");

  auto* moments = cli.add_subcommand("moments", "RR-set size moments and relaxation factors");
  add_common(moments, true);
  moments->add_option("--out", out, "CSV output path");
  moments->add_option("--count", count, "number of RR sets")->check(CLI::PositiveNumber);

  auto* oracle = cli.add_subcommand("oracle", "run the reference oracles");
  add_common(oracle, false);

  auto* gen = cli.add_subcommand("gen-graph", "write the configured synthetic graph as an edge list");
  add_common(gen, true);
  gen->add_option("--out", out, "edge-list output path (default: stdout)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto opt_string = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); };
  const std::optional<std::uint64_t> seed_override =
      (solve->count("--seed") + moments->count("--seed") + oracle->count("--seed") + gen->count("--seed")) > 0
          ? std::optional<std::uint64_t>(seed)
          : std::nullopt;

  if (*solve)
    return cimbs::app::cmd_solve(config, opt_string(out), opt_string(plot_dir), workers, seed_override, std::cout,
                                 std::cerr);
  if (*moments)
    return cimbs::app::cmd_moments(config, count, opt_string(out), workers, seed_override, std::cout, std::cerr);
  if (*oracle) return cimbs::app::cmd_oracle(opt_string(config), workers, seed_override, std::cout, std::cerr);
  return cimbs::app::cmd_gen_graph(config, opt_string(out), seed_override, std::cout, std::cerr);
}
