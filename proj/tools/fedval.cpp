// Command-line front end: run one experiment, sweep a defense x attack
// grid, or report the communication ledger of a run.

#include <CLI11.hpp>

#include "fedval/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"federated learning simulator with cross-client validation"};
  app.require_subcommand(1);

  fedval::CliOptions opts;
  uint64_t seed_value = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", opts.config_path, "experiment config (JSON)")
        ->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", seed_value, "override the master seed")
        ->each([&](const std::string&) { seed_set = true; });
  };

  CLI::App* run = app.add_subcommand("run", "run one experiment");
  add_common(run);
  run->add_flag("--debug-scores", opts.debug_scores,
                "dump per-round score matrices");

  CLI::App* sweep =
      app.add_subcommand("sweep", "run a defense x attack grid");
  add_common(sweep);

  CLI::App* bench =
      app.add_subcommand("bench", "run and report the byte ledger");
  add_common(bench);

  CLI11_PARSE(app, argc, argv);
  if (seed_set) opts.seed = seed_value;

  if (run->parsed()) return fedval::cmd_run(opts);
  if (sweep->parsed()) return fedval::cmd_sweep(opts);
  if (bench->parsed()) return fedval::cmd_bench(opts);
  return 1;
}
