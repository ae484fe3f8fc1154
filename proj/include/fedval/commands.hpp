#pragma once
// Command implementations behind the CLI: run one experiment, sweep a
// defense x attack grid, or report the communication ledger. Kept as a
// library so tests can drive them directly.

#include <cstdint>
#include <optional>
#include <string>

#include "fedval/config.hpp"

namespace fedval {

struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<uint64_t> seed;
  bool debug_scores = false;
};

// Derives the config for one sweep cell; a standalone run with this config
// reproduces the cell. Changing the defense kind resets lambda to the
// kind's default unless the base already uses that kind.
ExperimentConfig sweep_cell_config(const SweepConfig& sweep, DefenseKind d,
                                   AttackKind a, uint64_t seed);

int cmd_run(const CliOptions& opts);    // writes metrics.csv
int cmd_sweep(const CliOptions& opts);  // writes sweep.csv
int cmd_bench(const CliOptions& opts);  // writes ledger.csv

}  // namespace fedval
