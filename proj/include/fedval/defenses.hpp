#pragma once
// Plaintext baseline aggregation checks operating on clear updates. These
// reproduce the classic comparison defenses; they are reference
// implementations, not secure protocols.

#include <cstdint>
#include <string>
#include <vector>

namespace fedval {

enum class DefenseKind {
  fedavg_plain,
  norm_bound_adaptive,
  norm_bound_public,
  norm_ball,
  cosine_sim,
  crosscheck_acc,   // cross-client check, accuracy-difference score
  crosscheck_prob,  // cross-client check, max-softmax score
};

const char* defense_name(DefenseKind k);
DefenseKind defense_from_name(const std::string& name);
bool defense_is_crosscheck(DefenseKind k);
bool defense_needs_pubval(DefenseKind k);
double defense_default_lambda(DefenseKind k);

struct DefenseConfig {
  DefenseKind kind = DefenseKind::fedavg_plain;
  double lambda = 1.0;
  bool norm_check = true;  // cross-client variants only
};

double l2_norm(const std::vector<double>& v);
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// tau = lambda * median of the previous round's update norms; first round
// bootstraps with the current round's norms. Accept iff ||u|| < tau.
std::vector<uint8_t> norm_bound_adaptive(
    const std::vector<std::vector<double>>& updates,
    const std::vector<double>& prev_norms, double lambda);

// tau = ||u_pubval||. Accept iff ||u|| < tau.
std::vector<uint8_t> norm_bound_public(
    const std::vector<std::vector<double>>& updates,
    const std::vector<double>& u_pubval);

// Accept iff ||u - u_pubval|| < lambda * ||u_pubval||.
std::vector<uint8_t> norm_ball(
    const std::vector<std::vector<double>>& updates,
    const std::vector<double>& u_pubval, double lambda);

// Accept iff cos(u, u_prev_global) >= lambda * cos(u_pubval, u_prev_global).
std::vector<uint8_t> cosine_sim(
    const std::vector<std::vector<double>>& updates,
    const std::vector<double>& u_prev_global,
    const std::vector<double>& u_pubval, double lambda);

}  // namespace fedval
