#pragma once
// Model poisoning attacks: the common baselines plus a per-defense adaptive
// attack that searches the largest deviation along the negated update
// direction still accepted by the targeted check, and the extreme
// check-score manipulation used to lower-bound cross-check robustness.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fedval/check.hpp"
#include "fedval/defenses.hpp"
#include "fedval/model.hpp"

namespace fedval {

enum class AttackKind { none, additive_noise, sign_flip, label_flip, adaptive };

const char* attack_name(AttackKind k);
AttackKind attack_from_name(const std::string& name);

struct LambdaGrid {
  double min = 1e-5;
  double max = 1e-1;
  int points = 20;
  std::vector<double> values() const;  // geometric, ascending
};

struct AttackConfig {
  AttackKind kind = AttackKind::none;
  double noise_sigma = 0.1;
  LambdaGrid grid;
  bool extreme_manipulation = true;  // adaptive attack on cross-check
};

// What colluding malicious clients know: their own clean data and updates,
// the public global model, the defense and any broadcast thresholds. No
// honest-client data or updates.
struct AdversaryView {
  std::vector<std::vector<double>> clean_updates;  // per malicious client
  const Dataset* clean_data = nullptr;             // pooled D'
  std::vector<double> global_model;                // w^(t-1), public
  std::vector<int> layer_dims;
  DefenseKind defense = DefenseKind::fedavg_plain;
  double tau = 0.0;                       // broadcast threshold, if any
  std::vector<double> u_pubval;           // public reference update, if any
  std::vector<double> u_prev_global;      // previous global update
};

std::vector<double> additive_noise(const std::vector<double>& u, double sigma,
                                   std::mt19937_64& rng);
std::vector<double> sign_flip(const std::vector<double>& u);
Dataset label_flip(const Dataset& d);

// s = sign of the mean of the malicious clients' clean updates.
std::vector<double> estimate_direction(const AdversaryView& view);

// Closed forms: the crafted update passes the targeted check by
// construction (epsilon = 1e-6 keeps the inequality strict).
std::vector<double> adaptive_normbound(const AdversaryView& view, double tau);
std::vector<double> adaptive_normball(const AdversaryView& view,
                                      const std::vector<double>& u_pubval,
                                      double tau);

// Largest grid lambda whose poisoned update still meets the adversary's
// estimate of the cosine threshold.
std::vector<double> adaptive_cosine(const AdversaryView& view, double tau,
                                    const LambdaGrid& grid);

// Grid search against the cross-client check: accept lambda when the
// poisoned model's accuracy on D' ranks in the top half of the clean
// models' accuracies; largest accepted wins, smallest grid value as
// fallback. All malicious clients submit the same update.
std::vector<double> adaptive_crosscheck(const AdversaryView& view,
                                        const LambdaGrid& grid);

// Extreme manipulation: every malicious validator scores malicious clients
// at the top of the score range and benign clients at the bottom.
ScoreOverride make_extreme_override(const std::vector<uint8_t>& malicious,
                                    ScoreVariant variant, int num_classes);

// Plaintext version for property tests: overrides columns of a committee
// score matrix in place.
void apply_extreme_manipulation(std::vector<std::vector<double>>& scores,
                                const Committees& com,
                                const std::vector<uint8_t>& malicious,
                                ScoreVariant variant, int num_classes);

}  // namespace fedval
