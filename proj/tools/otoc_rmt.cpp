#include <iostream>

#include <CLI11.hpp>

#include "otoc/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"OTOC simulator and analytic engine for a locally-GOE banded random-matrix ensemble"};
  app.require_subcommand(1);

  std::string out_dir;
  std::uint64_t seed = 0;
  app.add_option("--out-dir", out_dir, "Directory for output files (overrides [output] dir)");
  app.add_option("--seed", seed, "Override the ensemble seed");
  app.footer("Worker threads: [run] workers, else OTOC_RMT_WORKERS, else hardware concurrency.");

  std::string config;
  auto* run = app.add_subcommand("run", "Monte Carlo OTOC series against the analytic prediction");
  run->add_option("config", config, "Config file")->required();
  auto* moments = app.add_subcommand("validate-moments", "Analytic moments against the contraction oracle and MC");
  moments->add_option("config", config, "Config file")->required();
  auto* variance = app.add_subcommand("variance-report", "N-doubling variance study and oracle decomposition");
  variance->add_option("config", config, "Config file")->required();
  for (auto* sub : {run, moments, variance}) {
    sub->add_option("--out-dir", out_dir, "Directory for output files");
    sub->add_option("--seed", seed, "Override the ensemble seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  otoc::Overrides ov;
  if (!out_dir.empty()) ov.out_dir = out_dir;
  if (app.count("--seed") || run->count("--seed") || moments->count("--seed") || variance->count("--seed"))
    ov.seed = seed;

  if (*run) return otoc::cmd_run(config, ov, std::cerr);
  if (*moments) return otoc::cmd_validate_moments(config, ov, std::cerr);
  return otoc::cmd_variance_report(config, ov, std::cerr);
}
