#include "fedval/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "fedval/federation.hpp"

namespace fedval {

namespace {

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

ExperimentConfig sweep_cell_config(const SweepConfig& sweep, DefenseKind d,
                                   AttackKind a, uint64_t seed) {
  ExperimentConfig cfg = sweep.base;
  if (d != sweep.base.defense.kind) {
    cfg.defense.kind = d;
    cfg.defense.lambda = defense_default_lambda(d);
  }
  cfg.attack.kind = a;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

int cmd_run(const CliOptions& opts) {
  try {
    ExperimentConfig cfg = load_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;

    std::ofstream scores;
    RoundObserver observer;
    if (opts.debug_scores) {
      scores = open_out(opts.out_dir, "scores.csv");
      scores << "round,client,validator_slot,score,norm_bit,topk_bit,"
                "accepted\n";
      observer = [&scores](int round, const CheckOutcome& o) {
        for (std::size_t i = 0; i < o.score_matrix.size(); ++i) {
          for (std::size_t c = 0; c < o.score_matrix[i].size(); ++c) {
            scores << round << ',' << i << ',' << c << ','
                   << fmt(o.score_matrix[i][c]) << ','
                   << int(o.norm_bits[i]) << ',' << int(o.topk_bits[i]) << ','
                   << int(o.accepted[i]) << '\n';
          }
        }
      };
    }

    const ExperimentResult result = run_experiment(cfg, observer);

    std::ofstream out = open_out(opts.out_dir, "metrics.csv");
    out << metrics_csv_header() << '\n';
    for (const RoundMetrics& m : result.rounds) {
      out << metrics_csv_row(m) << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return 1;
  }
}

int cmd_sweep(const CliOptions& opts) {
  try {
    SweepConfig sweep = load_sweep(opts.config_path);
    if (opts.seed) sweep.seeds = {*opts.seed};

    // rows: defenses; columns: attacks; cells: mean final accuracy
    std::map<DefenseKind, std::map<AttackKind, double>> grid;
    for (DefenseKind d : sweep.defenses) {
      for (AttackKind a : sweep.attacks) {
        double sum = 0.0;
        for (uint64_t seed : sweep.seeds) {
          const ExperimentConfig cfg = sweep_cell_config(sweep, d, a, seed);
          sum += run_experiment(cfg).final_accuracy;
        }
        grid[d][a] = sum / static_cast<double>(sweep.seeds.size());
      }
    }

    std::ofstream out = open_out(opts.out_dir, "sweep.csv");
    out << "defense";
    for (AttackKind a : sweep.attacks) out << ',' << attack_name(a);
    out << ",min_across_attacks\n";
    for (DefenseKind d : sweep.defenses) {
      out << defense_name(d);
      double worst = 1.0;
      for (AttackKind a : sweep.attacks) {
        const double acc = grid[d][a];
        worst = std::min(worst, acc);
        out << ',' << fmt(acc);
      }
      out << ',' << fmt(worst) << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "sweep failed: " << e.what() << '\n';
    return 1;
  }
}

int cmd_bench(const CliOptions& opts) {
  try {
    ExperimentConfig cfg = load_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    const ExperimentResult result = run_experiment(cfg);
    std::ofstream out = open_out(opts.out_dir, "ledger.csv");
    out << result.ledger.to_csv();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "bench failed: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fedval
