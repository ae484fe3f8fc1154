#include "fedval/check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fedval/model.hpp"
#include "fedval/rng.hpp"

namespace fedval {

Committees sample_committees(std::size_t m, int m_c, uint64_t kappa) {
  const std::size_t size = 2 * static_cast<std::size_t>(m_c) + 1;
  if (m_c < 0 || size > m - 1) {
    throw std::invalid_argument(
        "population too small for committee size 2*m_c+1");
  }
  Committees com;
  com.m_c = m_c;
  com.members.resize(m);
  uint64_t state = kappa ^ fnv1a("committees");
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<int> pool;
    pool.reserve(m - 1);
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) pool.push_back(static_cast<int>(j));
    }
    // partial Fisher-Yates over the owner-excluded pool
    for (std::size_t k = 0; k < size; ++k) {
      const std::size_t r = k + splitmix64(state) % (pool.size() - k);
      std::swap(pool[k], pool[r]);
    }
    com.members[i].assign(pool.begin(), pool.begin() + size);
  }
  return com;
}

std::size_t top_k_keep_count(double k_frac, std::size_t m) {
  const long long keep = std::llround(k_frac * static_cast<double>(m));
  return static_cast<std::size_t>(
      std::clamp<long long>(keep, 0, static_cast<long long>(m)));
}

u128 trimmed_mean_raw(std::vector<u128> scores, int m_c,
                      const FixedParams& p) {
  if (scores.size() != 2 * static_cast<std::size_t>(m_c) + 1) {
    throw std::invalid_argument("trimmed mean needs 2*m_c+1 scores");
  }
  std::stable_sort(scores.begin(), scores.end(),
                   [&](u128 a, u128 b) {
                     return to_signed(a, p) < to_signed(b, p);
                   });
  const std::size_t trim = static_cast<std::size_t>(m_c) / 2;
  const std::size_t kept = scores.size() - 2 * trim;
  u128 sum = 0;
  for (std::size_t k = trim; k < scores.size() - trim; ++k) {
    sum = ring_add(sum, scores[k], p);
  }
  return div_floor_public(sum, static_cast<long long>(kept), p);
}

std::vector<uint8_t> top_k_bits_raw(const std::vector<u128>& scores,
                                    double k_frac, const FixedParams& p) {
  const std::size_t m = scores.size();
  const std::size_t keep = top_k_keep_count(k_frac, m);
  // ascending stable sort on the negated score = descending on the score
  // with ties broken by lower client index
  std::vector<std::pair<s128, std::size_t>> order(m);
  for (std::size_t i = 0; i < m; ++i) {
    order[i] = {to_signed(ring_neg(scores[i], p), p), i};
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) {
                     return a.first < b.first;
                   });
  std::vector<uint8_t> bits(m, 0);
  for (std::size_t k = 0; k < keep; ++k) bits[order[k].second] = 1;
  return bits;
}

namespace {

u128 median_raw(std::vector<u128> values, const FixedParams& p) {
  std::stable_sort(values.begin(), values.end(),
                   [&](u128 a, u128 b) {
                     return to_signed(a, p) < to_signed(b, p);
                   });
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  const u128 sum = ring_add(values[n / 2 - 1], values[n / 2], p);
  return div_floor_public(sum, 2, p);
}

u128 norm_raw(const FixedVec& u) {
  u128 sum2 = 0;
  for (u128 e : u.data) {
    sum2 = ring_add(sum2, mul_fixed(e, e, u.params), u.params);
  }
  return sqrt_fixed(sum2, u.params);
}

}  // namespace

CheckOutcome run_check(Engine& eng, const std::vector<ShareVec>& updates,
                       const std::vector<ShareVec>& val_sets,
                       const FixedVec& prev_model, const Committees& com,
                       const CheckConfig& cfg,
                       const ScoreOverride& override_hook) {
  const std::size_t m = updates.size();
  if (val_sets.size() != m || com.members.size() != m) {
    throw std::invalid_argument("run_check input sizes disagree");
  }
  const FixedParams& p = eng.params();
  const std::size_t committee = 2 * static_cast<std::size_t>(cfg.m_c) + 1;
  CheckOutcome out;

  // --- norm check ---
  std::vector<ShareVec> norm_shares;
  if (cfg.norm_check) {
    norm_shares.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      ShareVec sq = eng.mult(updates[i], updates[i]);
      norm_shares.push_back(eng.sqrt_shared(Engine::sum_elements(sq)));
    }
    std::vector<int> ids(m);
    for (std::size_t i = 0; i < m; ++i) ids[i] = static_cast<int>(i);
    auto sorted = eng.sort_shared(norm_shares, ids);
    ShareVec median;
    if (m % 2 == 1) {
      median = sorted[m / 2].first;
    } else {
      median = eng.div_public(
          Engine::lin(1, sorted[m / 2 - 1].first, 1, sorted[m / 2].first), 2);
    }
    ShareVec bound = eng.scale_public(median, cfg.lambda);
    out.norm_bits.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      ShareVec bit = eng.comp_less(norm_shares[i], bound);
      out.norm_bits[i] =
          static_cast<uint8_t>(eng.unseal(bit).data[0] & 1);
      norm_shares[i] = std::move(bit);
    }
  } else {
    out.norm_bits.assign(m, 1);
  }

  // --- cross-client scores ---
  out.score_matrix.assign(m, std::vector<double>(committee, 0.0));
  std::vector<ShareVec> scr_shares;
  scr_shares.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    ShareVec model_i = Engine::add_public(updates[i], prev_model);
    std::vector<ShareVec> row;
    row.reserve(committee);
    for (std::size_t c = 0; c < committee; ++c) {
      const int j = com.members[i][c];
      ShareVec score;
      if (cfg.variant == ScoreVariant::acc) {
        ShareVec acc_new = eng.sec_inf(model_i, cfg.layer_dims, val_sets[j]);
        ShareVec acc_prev =
            eng.sec_inf_public_model(prev_model, cfg.layer_dims, val_sets[j]);
        score = Engine::lin(1, acc_new, -1, acc_prev);
      } else {
        score = eng.max_soft(model_i, cfg.layer_dims, val_sets[j]);
      }
      if (override_hook) {
        if (auto forced = override_hook(static_cast<int>(i), j)) {
          FixedVec fv(1, p);
          fv.data[0] = encode_fixed(*forced, p);
          score = eng.reshare(fv);
        }
      }
      out.score_matrix[i][c] = decode_fixed(eng.unseal(score).data[0], p);
      row.push_back(std::move(score));
    }
    // trimmed mean: sort, drop floor(m_c/2) from both ends, average
    std::vector<int> pos(committee);
    for (std::size_t c = 0; c < committee; ++c) pos[c] = static_cast<int>(c);
    auto sorted = eng.sort_shared(row, pos);
    const std::size_t trim = static_cast<std::size_t>(cfg.m_c) / 2;
    const std::size_t kept = committee - 2 * trim;
    ShareVec sum = sorted[trim].first;
    for (std::size_t k = trim + 1; k < committee - trim; ++k) {
      sum = Engine::lin(1, sum, 1, sorted[k].first);
    }
    scr_shares.push_back(eng.div_public(sum, static_cast<long long>(kept)));
  }
  out.scr.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.scr[i] = decode_fixed(eng.unseal(scr_shares[i]).data[0], p);
  }

  // --- select top-k ---
  const std::size_t keep = top_k_keep_count(cfg.k_frac, m);
  std::vector<ShareVec> neg(m, ShareVec{});
  std::vector<int> client_ids(m);
  for (std::size_t i = 0; i < m; ++i) {
    neg[i] = Engine::lin(-1, scr_shares[i], 0, scr_shares[i]);
    client_ids[i] = static_cast<int>(i);
  }
  auto by_score = eng.sort_shared(neg, client_ids);
  auto ones = eng.zero_one(keep, m);
  // second sort restores client-index order for the assigned bits
  std::vector<ShareVec> id_keys;
  id_keys.reserve(m);
  std::vector<int> positions(m);
  for (std::size_t pos = 0; pos < m; ++pos) {
    FixedVec idv(1, p);
    idv.data[0] = encode_fixed(static_cast<double>(by_score[pos].second), p);
    id_keys.push_back(eng.reshare(idv));
    positions[pos] = static_cast<int>(pos);
  }
  auto by_id = eng.sort_shared(id_keys, positions);
  std::vector<ShareVec> topk(m, ShareVec{});
  for (std::size_t i = 0; i < m; ++i) {
    topk[i] = std::move(ones[by_id[i].second]);
  }
  out.topk_bits.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.topk_bits[i] = static_cast<uint8_t>(eng.unseal(topk[i]).data[0] & 1);
  }

  // --- final bit: top-k AND norm ---
  out.accepted.resize(m);
  out.b_shares.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    ShareVec b = cfg.norm_check ? eng.mult_raw(topk[i], norm_shares[i])
                                : std::move(topk[i]);
    out.accepted[i] = static_cast<uint8_t>(eng.unseal(b).data[0] & 1);
    out.accepted_count += out.accepted[i];
    out.b_shares.push_back(std::move(b));
  }
  return out;
}

AggregateResult secure_aggregate(Engine& eng,
                                 const std::vector<ShareVec>& updates,
                                 const CheckOutcome& outcome) {
  const std::size_t m = updates.size();
  if (outcome.b_shares.size() != m) {
    throw std::invalid_argument("aggregate needs one bit per update");
  }
  ShareVec sum;
  ShareVec count;
  for (std::size_t i = 0; i < m; ++i) {
    ShareVec masked = eng.mult_raw(updates[i], outcome.b_shares[i]);
    sum = i == 0 ? std::move(masked) : Engine::lin(1, sum, 1, masked);
    count = i == 0 ? outcome.b_shares[i]
                   : Engine::lin(1, count, 1, outcome.b_shares[i]);
  }
  AggregateResult res;
  const FixedVec count_clear = eng.recon(count, "accepted_count");
  res.accepted_count = static_cast<std::size_t>(
      to_signed(count_clear.data[0], eng.params()));
  if (res.accepted_count == 0) {
    res.sum = FixedVec(updates[0].size(), eng.params());
    return res;  // keep the previous global model
  }
  res.sum = eng.recon(sum, "aggregate");
  res.mean_update.resize(res.sum.size());
  for (std::size_t k = 0; k < res.sum.size(); ++k) {
    res.mean_update[k] = decode_fixed(res.sum.data[k], eng.params()) /
                         static_cast<double>(res.accepted_count);
  }
  return res;
}

PlainOutcome plaintext_oracle(const PlainRound& round, const Committees& com,
                              const CheckConfig& cfg,
                              const ScoreOverride& override_hook) {
  const std::size_t m = round.updates.size();
  const FixedParams p = round.prev_model.params;
  const std::size_t committee = 2 * static_cast<std::size_t>(cfg.m_c) + 1;
  PlainOutcome out;

  // norm check
  if (cfg.norm_check) {
    std::vector<u128> norms(m);
    for (std::size_t i = 0; i < m; ++i) norms[i] = norm_raw(round.updates[i]);
    const u128 med = median_raw(norms, p);
    const u128 bound = mul_fixed(med, encode_fixed(cfg.lambda, p), p);
    out.norm_bits.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      out.norm_bits[i] = to_signed(norms[i], p) < to_signed(bound, p);
    }
  } else {
    out.norm_bits.assign(m, 1);
  }

  // scores and trimmed means
  out.score_matrix.assign(m, std::vector<double>(committee, 0.0));
  std::vector<u128> scr(m);
  for (std::size_t i = 0; i < m; ++i) {
    FixedVec model_i(round.updates[i].size(), p);
    for (std::size_t k = 0; k < model_i.size(); ++k) {
      model_i.data[k] =
          ring_add(round.updates[i].data[k], round.prev_model.data[k], p);
    }
    std::vector<u128> row(committee);
    for (std::size_t c = 0; c < committee; ++c) {
      const int j = com.members[i][c];
      u128 score;
      if (cfg.variant == ScoreVariant::acc) {
        const u128 acc_new = fixed_accuracy(model_i.data, cfg.layer_dims,
                                            round.val_sets[j].data, p);
        const u128 acc_prev = fixed_accuracy(round.prev_model.data,
                                             cfg.layer_dims,
                                             round.val_sets[j].data, p);
        score = ring_sub(acc_new, acc_prev, p);
      } else {
        score = fixed_max_softmax(model_i.data, cfg.layer_dims,
                                  round.val_sets[j].data, p);
      }
      if (override_hook) {
        if (auto forced = override_hook(static_cast<int>(i), j)) {
          score = encode_fixed(*forced, p);
        }
      }
      out.score_matrix[i][c] = decode_fixed(score, p);
      row[c] = score;
    }
    scr[i] = trimmed_mean_raw(std::move(row), cfg.m_c, p);
  }
  out.scr.resize(m);
  for (std::size_t i = 0; i < m; ++i) out.scr[i] = decode_fixed(scr[i], p);

  // top-k and final bits
  out.topk_bits = top_k_bits_raw(scr, cfg.k_frac, p);
  out.accepted.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.accepted[i] = out.topk_bits[i] & out.norm_bits[i];
    out.accepted_count += out.accepted[i];
  }

  // masked aggregate
  out.sum = FixedVec(round.updates[0].size(), p);
  for (std::size_t i = 0; i < m; ++i) {
    if (!out.accepted[i]) continue;
    for (std::size_t k = 0; k < out.sum.size(); ++k) {
      out.sum.data[k] =
          ring_add(out.sum.data[k], round.updates[i].data[k], p);
    }
  }
  if (out.accepted_count > 0) {
    out.mean_update.resize(out.sum.size());
    for (std::size_t k = 0; k < out.sum.size(); ++k) {
      out.mean_update[k] = decode_fixed(out.sum.data[k], p) /
                           static_cast<double>(out.accepted_count);
    }
  }
  return out;
}

}  // namespace fedval
