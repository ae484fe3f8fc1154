#pragma once
// Experiment driver: synthetic data generation, Dirichlet non-IID
// partitioning, and the round loop wiring clients -> attacks -> defense ->
// global update, with distribution-shift schedules and metric collection.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fedval/check.hpp"
#include "fedval/config.hpp"
#include "fedval/model.hpp"
#include "fedval/sharing.hpp"

namespace fedval {

// Class c of distribution `dist_id` is a Gaussian blob around this mean.
std::vector<double> class_mean(int dist_id, int c, const SyntheticSpec& spec);

Dataset gen_synthetic(int dist_id, std::size_t n, int L,
                      const SyntheticSpec& spec, std::mt19937_64& rng);

// Per-class client proportions drawn from Dir(alpha); degenerate draws that
// leave a client empty are resampled.
std::vector<Dataset> dirichlet_partition(const Dataset& d, std::size_t m,
                                         double alpha, std::mt19937_64& rng);

struct ClientState {
  Dataset data;
  bool malicious = false;
  int dist_id = 0;
};

struct Population {
  std::vector<ClientState> clients;
  int m_c = 0;

  std::size_t size() const { return clients.size(); }
  std::vector<uint8_t> malicious_flags() const;
};

struct RoundMetrics {
  int round = 0;
  double accuracy = 0.0;
  std::size_t accepted_count = 0;
  std::string accepted_bits;
  std::string attack;
  std::string defense;
  uint64_t bytes_total = 0;
};

struct ShiftLogEntry {
  int round = 0;
  std::string kind;
  std::vector<int> clients;
};

struct ExperimentResult {
  std::vector<RoundMetrics> rounds;
  double final_accuracy = 0.0;
  CommLedger ledger;
  std::vector<ShiftLogEntry> shifts;
};

// Observer for per-round check diagnostics (the --debug-scores dump).
using RoundObserver =
    std::function<void(int round, const CheckOutcome& outcome)>;

class Experiment {
 public:
  explicit Experiment(const ExperimentConfig& cfg);

  // Applies due shift events, then executes one communication round.
  RoundMetrics run_round();
  ExperimentResult run(const RoundObserver& observer = {});

  const MlpModel& global_model() const { return global_; }
  const Population& population() const { return pop_; }
  const Dataset& test_set() const { return test_union_; }
  const Committees& committees() const { return committees_; }
  const CommLedger* ledger() const;

 private:
  void apply_shift(const ShiftEvent& event);
  void rebuild_test_union();
  void resample_committees();
  Dataset validation_subset(std::size_t client, int round);
  std::vector<double> train_pubval_update(int round);
  std::vector<std::vector<double>> collect_updates(
      int round, std::vector<std::vector<double>>& clean_updates);
  void craft_adaptive(std::vector<std::vector<double>>& submissions,
                      const std::vector<std::vector<double>>& clean_updates,
                      int round, const std::optional<double>& tau,
                      const std::vector<double>& u_pubval);

  ExperimentConfig cfg_;
  Population pop_;
  MlpModel global_;
  Dataset pubval_;
  Dataset test_union_;
  std::map<int, Dataset> test_by_dist_;
  std::vector<double> prev_norms_;       // previous round's update norms
  std::vector<double> u_prev_global_;    // previous aggregated update
  std::optional<Engine> engine_;
  Committees committees_;
  std::vector<std::vector<std::size_t>> frozen_val_idx_;
  std::vector<ShiftEvent> pending_shifts_;
  std::vector<ShiftLogEntry> shift_log_;
  int next_round_ = 0;
  Dataset adversary_pool_;  // malicious clients' clean data, pooled
  RoundObserver observer_;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const RoundObserver& observer = {});

std::string metrics_csv_header();
std::string metrics_csv_row(const RoundMetrics& m);

}  // namespace fedval
