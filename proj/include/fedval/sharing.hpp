#pragma once
// Simulated 3-party replicated secret sharing over Z_{2^K}. A secret vector
// x is split into additive shares s_0 + s_1 + s_2 = x mod 2^K and party i
// holds the pair (s_i, s_{i+1}). Share/Recon/lin/Mult run at share level;
// the remaining subprotocols (Comp, Sqrt, Sort, Zero-One, Sec-Inf, Max-Soft)
// are sealed functionalities that reconstruct internally, compute the
// plaintext kernel, and reshare — the hybrid-model semantics. Every
// subprotocol charges a per-message byte ledger.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedval/fixed.hpp"

namespace fedval {

class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& what)
      : std::runtime_error(what) {}
};

struct CommLedger {
  struct Entry {
    uint64_t invocations = 0;
    uint64_t bytes = 0;
    uint64_t messages = 0;
    uint64_t rounds = 0;
  };
  std::map<std::string, Entry> entries;

  void charge(const std::string& name, uint64_t bytes, uint64_t messages,
              uint64_t rounds);
  uint64_t total_bytes() const;
  std::string to_csv() const;  // subprotocol,invocations,bytes,rounds
};

struct ShareVec {
  struct PartyShare {
    std::vector<u128> lo;  // s_i
    std::vector<u128> hi;  // s_{i+1 mod 3}
  };
  std::array<PartyShare, 3> party;
  FixedParams params;

  std::size_t size() const { return party[0].lo.size(); }
};

enum class MultMode { protocol, ideal };

class Engine {
 public:
  Engine(FixedParams params, uint64_t seed,
         MultMode mode = MultMode::protocol);

  const FixedParams& params() const { return params_; }
  CommLedger& ledger() { return ledger_; }
  const CommLedger& ledger() const { return ledger_; }
  void set_mult_mode(MultMode m) { mult_mode_ = m; }

  // Client-side sharing with caller randomness.
  ShareVec share(const FixedVec& secret, std::mt19937_64& rng);

  // Public reconstruction; checks replica consistency and records the label
  // so callers can assert what a protocol run revealed.
  FixedVec recon(const ShareVec& s, std::string_view label);
  // Reconstruction from two parties' components only.
  FixedVec recon_from(const ShareVec& s, int pa, int pb,
                      std::string_view label);

  // Local linear combination of shares with public integer scalars.
  static ShareVec lin(long long a, const ShareVec& x, long long b,
                      const ShareVec& y);
  static ShareVec add_public(const ShareVec& x, const FixedVec& c);
  static ShareVec sum_elements(const ShareVec& x);  // scalar share

  // Fixed-point product (truncated) and raw ring product (for bit masks).
  // Scalar operands broadcast over vector operands.
  ShareVec mult(const ShareVec& x, const ShareVec& y);
  ShareVec mult_raw(const ShareVec& x, const ShareVec& y);

  // x * encode(c) with truncation, for a public real multiplier.
  ShareVec scale_public(const ShareVec& x, double c);
  // Floor division by a public positive integer.
  ShareVec div_public(const ShareVec& x, long long q);

  ShareVec comp_less(const ShareVec& x, const ShareVec& y);  // scalar -> bit
  ShareVec sqrt_shared(const ShareVec& x);                   // scalar

  // Stable ascending sort of scalar shares by their signed ring value; the
  // public payload ids travel with the keys.
  std::vector<std::pair<ShareVec, int>> sort_shared(
      const std::vector<ShareVec>& keys, const std::vector<int>& ids);

  // k shared ones followed by m-k shared zeros (raw ring bits).
  std::vector<ShareVec> zero_one(std::size_t k, std::size_t m);

  // Common pseudorandom value derived from the shared key; identical on all
  // parties, independent streams per tag.
  uint64_t rand_common(std::string_view tag);

  // Secure inference: accuracy of a shared model on a shared packed dataset.
  ShareVec sec_inf(const ShareVec& model, const std::vector<int>& layer_dims,
                   const ShareVec& data);
  ShareVec sec_inf_public_model(const FixedVec& model,
                                const std::vector<int>& layer_dims,
                                const ShareVec& data);
  // Mean maximum softmax probability variant.
  ShareVec max_soft(const ShareVec& model, const std::vector<int>& layer_dims,
                    const ShareVec& data);

  const std::vector<std::string>& recon_log() const { return recon_log_; }
  void clear_recon_log() { recon_log_.clear(); }

  // Functionality-internal reconstruction (sealed boundary; not logged).
  // Also used to lift simulation diagnostics out of a round.
  FixedVec unseal(const ShareVec& s) const;
  // Deterministic resharing from the engine's internal key stream.
  ShareVec reshare(const FixedVec& v);

  // Raw constant as a degenerate sharing (party 0 holds the value).
  ShareVec constant_raw(u128 v) const;

 private:
  u128 draw_ring(uint64_t& state);
  void check_replicas(const ShareVec& s) const;
  uint64_t elem_bytes() const {
    return static_cast<uint64_t>((params_.ring_bits + 7) / 8);
  }
  void charge_ideal(const std::string& name, std::size_t in_elems,
                    std::size_t out_elems);

  FixedParams params_;
  MultMode mult_mode_;
  uint64_t kappa_;                    // common key
  std::array<uint64_t, 3> pair_key_;  // pairwise keys kappa_{i,i+1}
  uint64_t reshare_state_;
  std::map<std::string, uint64_t, std::less<>> tag_counters_;
  CommLedger ledger_;
  std::vector<std::string> recon_log_;
};

}  // namespace fedval
