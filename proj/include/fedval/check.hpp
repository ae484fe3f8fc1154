#pragma once
// Cross-client validation pipeline: per-client check committees score each
// update on committee members' validation data, a trimmed mean condenses
// the scores, a median norm bound and top-k filtering pick the accepted
// set, and only the aggregate (plus the accepted count) is ever revealed.
// A plaintext re-implementation of the whole pipeline backs the
// share-vs-clear equivalence tests.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "fedval/fixed.hpp"
#include "fedval/sharing.hpp"

namespace fedval {

struct Committees {
  int m_c = 0;
  std::vector<std::vector<int>> members;  // per client, size 2*m_c+1
};

// Uniform committees without replacement, owner excluded, deterministic in
// the common key. Requires 2*m_c+1 <= m-1.
Committees sample_committees(std::size_t m, int m_c, uint64_t kappa);

enum class ScoreVariant { acc, prob };

struct CheckConfig {
  ScoreVariant variant = ScoreVariant::acc;
  int m_c = 0;
  double k_frac = 1.0;      // keep round(k_frac * m) updates
  bool norm_check = true;
  double lambda = 1.5;      // norm bound multiplier on the median
  std::vector<int> layer_dims;
};

// Attack hook: may force the score of client i as judged by validator j.
using ScoreOverride = std::function<std::optional<double>(int i, int j)>;

struct CheckOutcome {
  // simulation diagnostics, decoded inside the sealed boundary
  std::vector<std::vector<double>> score_matrix;  // m x (2*m_c+1)
  std::vector<double> scr;                        // trimmed means
  std::vector<uint8_t> norm_bits;
  std::vector<uint8_t> topk_bits;
  std::vector<uint8_t> accepted;                  // b_i
  std::size_t accepted_count = 0;
  // shared final bits, consumed by secure_aggregate
  std::vector<ShareVec> b_shares;
};

CheckOutcome run_check(Engine& eng, const std::vector<ShareVec>& updates,
                       const std::vector<ShareVec>& val_sets,
                       const FixedVec& prev_model, const Committees& com,
                       const CheckConfig& cfg,
                       const ScoreOverride& override_hook = {});

struct AggregateResult {
  FixedVec sum;                     // reconstructed masked sum
  std::size_t accepted_count = 0;
  std::vector<double> mean_update;  // sum / count; empty when count == 0
};

// Masks every update with its acceptance bit, sums, and reconstructs only
// the sum and the accepted count.
AggregateResult secure_aggregate(Engine& eng,
                                 const std::vector<ShareVec>& updates,
                                 const CheckOutcome& outcome);

// --- plaintext oracle -------------------------------------------------------

struct PlainRound {
  std::vector<FixedVec> updates;
  std::vector<FixedVec> val_sets;
  FixedVec prev_model;
};

struct PlainOutcome {
  std::vector<std::vector<double>> score_matrix;
  std::vector<double> scr;
  std::vector<uint8_t> norm_bits;
  std::vector<uint8_t> topk_bits;
  std::vector<uint8_t> accepted;
  std::size_t accepted_count = 0;
  FixedVec sum;
  std::vector<double> mean_update;
};

PlainOutcome plaintext_oracle(const PlainRound& round, const Committees& com,
                              const CheckConfig& cfg,
                              const ScoreOverride& override_hook = {});

// shared plaintext kernels (also used by property tests)
u128 trimmed_mean_raw(std::vector<u128> scores, int m_c,
                      const FixedParams& p);
std::vector<uint8_t> top_k_bits_raw(const std::vector<u128>& scores,
                                    double k_frac, const FixedParams& p);
std::size_t top_k_keep_count(double k_frac, std::size_t m);

}  // namespace fedval
