#pragma once
// Declarative experiment configuration: JSON in, validated struct out,
// canonical JSON back. Unknown keys are rejected so typos fail loudly.

#include <cstdint>
#include <string>
#include <vector>

#include "fedval/attacks.hpp"
#include "fedval/defenses.hpp"
#include "fedval/fixed.hpp"
#include "fedval/model.hpp"

namespace fedval {

struct SyntheticSpec {
  int dim = 2;
  int classes = 2;
  double class_sep = 4.0;
  double noise_std = 1.0;
  // distribution id k rotates the class-mean layout by k * shift_angle_deg
  // and translates it by k * shift_translation along the first axis
  double shift_angle_deg = 90.0;
  double shift_translation = 0.0;
};

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" | "idx"
  SyntheticSpec synthetic;
  int train_per_client = 30;
  int test_per_dist = 400;
  int pubval_size = 60;
  std::string idx_images;  // idx source only
  std::string idx_labels;
  std::string idx_test_images;
  std::string idx_test_labels;
};

struct ShiftEvent {
  int round = 0;
  std::string kind;  // "evolve" | "join"
  int count = 0;
  int dist_id = 1;
};

struct ExperimentConfig {
  int m = 10;
  int m_c = 1;
  int rounds = 10;
  double alpha = 0.5;
  int val_size = 10;
  uint64_t seed = 40;

  DefenseConfig defense;
  AttackConfig attack;
  FixedParams fixed_point;
  DataConfig data;
  TrainOptions train;
  std::vector<int> hidden_dims;  // empty = logistic regression
  std::vector<ShiftEvent> shift_schedule;

  bool resample_committees_each_round = false;
  bool freeze_validation = false;
  bool new_clients_honest = true;

  void validate() const;
  std::vector<int> layer_dims() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);  // canonical form

// Sweep description: a base config plus grid axes.
struct SweepConfig {
  ExperimentConfig base;
  std::vector<DefenseKind> defenses;
  std::vector<AttackKind> attacks;
  std::vector<uint64_t> seeds;
};

SweepConfig parse_sweep(const std::string& json_text);
SweepConfig load_sweep(const std::string& path);

}  // namespace fedval
