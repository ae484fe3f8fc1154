#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fedval/check.hpp"
#include "fedval/model.hpp"
#include "fedval/rng.hpp"

using namespace fedval;

namespace {

const FixedParams kP{64, 16};

Dataset random_dataset(std::size_t rows, std::size_t dim, std::size_t classes,
                       std::mt19937_64& rng) {
  Dataset d;
  d.dim = dim;
  d.num_classes = classes;
  std::uniform_real_distribution<double> feat(-2.0, 2.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < dim; ++c) d.x.push_back(feat(rng));
    d.y.push_back(static_cast<int>(rng() % classes));
  }
  return d;
}

struct RoundFixture {
  std::vector<ShareVec> upd_shares;
  std::vector<ShareVec> val_shares;
  PlainRound plain;
  CheckConfig cfg;
  Committees com;
};

RoundFixture make_round(Engine& eng, std::size_t m, int m_c,
                        std::size_t val_rows, const std::vector<int>& dims,
                        std::mt19937_64& rng, bool norm_check = true) {
  RoundFixture f;
  f.cfg.variant = ScoreVariant::acc;
  f.cfg.m_c = m_c;
  f.cfg.k_frac = 1.0 - static_cast<double>(m_c) / static_cast<double>(m);
  f.cfg.norm_check = norm_check;
  f.cfg.lambda = 1.5;
  f.cfg.layer_dims = dims;
  f.com = sample_committees(m, m_c, rng());

  const std::size_t nparams = MlpModel::param_count(dims);
  std::uniform_real_distribution<double> w(-0.5, 0.5);
  std::vector<double> prev(nparams);
  for (double& v : prev) v = w(rng);
  f.plain.prev_model = FixedVec::from_reals(prev, kP);

  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> u(nparams);
    for (double& v : u) v = w(rng);
    const FixedVec ue = FixedVec::from_reals(u, kP);
    f.plain.updates.push_back(ue);
    f.upd_shares.push_back(eng.share(ue, rng));
    const Dataset d =
        random_dataset(val_rows, dims.front(), dims.back(), rng);
    const FixedVec packed = pack_dataset(d, kP);
    f.plain.val_sets.push_back(packed);
    f.val_shares.push_back(eng.share(packed, rng));
  }
  return f;
}

}  // namespace

TEST_CASE("committee sampling") {
  CHECK_THROWS(sample_committees(3, 1, 7));  // 2*1+1 > 3-1
  const Committees com = sample_committees(10, 1, 7);
  REQUIRE(com.members.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    REQUIRE(com.members[i].size() == 3);
    std::set<int> uniq(com.members[i].begin(), com.members[i].end());
    CHECK(uniq.size() == 3);  // distinct
    CHECK(!uniq.contains(static_cast<int>(i)));  // owner excluded
  }
  const Committees again = sample_committees(10, 1, 7);
  CHECK(again.members == com.members);  // same key, same committees
  const Committees other = sample_committees(10, 1, 8);
  CHECK(other.members != com.members);
}

TEST_CASE("trimmed mean kernel") {
  auto enc = [](std::initializer_list<double> vals) {
    std::vector<u128> out;
    for (double v : vals) out.push_back(encode_fixed(v, kP));
    return out;
  };
  // constant list collapses to the constant
  CHECK(decode_fixed(trimmed_mean_raw(enc({0.25, 0.25, 0.25}), 1, kP), kP) ==
        doctest::Approx(0.25).epsilon(1e-9));
  // m_c=2: sort (-1,0,0,0,1), trim one from each end, average (0,0,0)
  CHECK(decode_fixed(trimmed_mean_raw(enc({-1, 0, 0, 0, 1}), 2, kP), kP) ==
        0.0);
  CHECK_THROWS(trimmed_mean_raw(enc({1, 2}), 2, kP));

  // odd m_c trims floor(m_c/2) and averages the remainder
  CHECK(decode_fixed(
            trimmed_mean_raw(enc({-1, 0.2, 0.2, 0.2, 0.2, 0.2, 1}), 3, kP),
            kP) == doctest::Approx(0.2).epsilon(1e-4));

  // 500 random lists against an independently coded sort-trim-mean
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int m_c = 1 + static_cast<int>(rng() % 4);
    const std::size_t n = 2 * m_c + 1;
    std::vector<double> vals(n);
    for (double& v : vals) v = dist(rng);
    std::vector<u128> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = encode_fixed(vals[i], kP);

    const double got = decode_fixed(trimmed_mean_raw(raw, m_c, kP), kP);

    std::vector<double> sorted = vals;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t trim = m_c / 2;
    double sum = 0.0;
    for (std::size_t k = trim; k < n - trim; ++k) sum += sorted[k];
    const double want = sum / static_cast<double>(n - 2 * trim);
    CHECK(std::abs(got - want) <= std::exp2(-14));  // encode + floor-div slack
  }
}

TEST_CASE("top-k selection kernel") {
  auto enc = [](const std::vector<double>& vals) {
    std::vector<u128> out;
    for (double v : vals) out.push_back(encode_fixed(v, kP));
    return out;
  };
  // the keep count mirrors k = 1 - m_c/m
  CHECK(top_k_keep_count(1.0 - 10.0 / 100.0, 100) == 90);

  // all-equal scores select the lowest client indices
  const auto tie_bits = top_k_bits_raw(enc({0.5, 0.5, 0.5, 0.5}), 0.5, kP);
  CHECK(tie_bits == std::vector<uint8_t>{1, 1, 0, 0});

  // random scores match a brute-force oracle
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 3 + rng() % 10;
    std::vector<double> vals(m);
    for (double& v : vals) v = dist(rng);
    const double k_frac = 0.5 + 0.4 * dist(rng);  // in [0.1, 0.9]
    const auto bits = top_k_bits_raw(enc(vals), k_frac, kP);

    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       const u128 ea = encode_fixed(vals[a], kP);
                       const u128 eb = encode_fixed(vals[b], kP);
                       if (ea != eb) {
                         return to_signed(ea, kP) > to_signed(eb, kP);
                       }
                       return a < b;
                     });
    std::vector<uint8_t> want(m, 0);
    for (std::size_t k = 0; k < top_k_keep_count(k_frac, m); ++k) {
      want[order[k]] = 1;
    }
    CHECK(bits == want);
  }
}

TEST_CASE("identical updates fail the strict median norm bound") {
  Engine eng(kP, 77);
  std::mt19937_64 rng(23);
  const std::vector<int> dims{2, 2};
  RoundFixture f = make_round(eng, 6, 1, 4, dims, rng);
  // overwrite updates with one identical vector
  const FixedVec u = FixedVec::from_reals({0.3, -0.2, 0.1, 0.0, 0.5, -0.5}, kP);
  for (std::size_t i = 0; i < 6; ++i) {
    f.plain.updates[i] = u;
    f.upd_shares[i] = eng.share(u, rng);
  }
  f.cfg.lambda = 1.0;  // bound equals the common norm; strict less fails
  const CheckOutcome out = run_check(eng, f.upd_shares, f.val_shares,
                                     f.plain.prev_model, f.com, f.cfg);
  for (uint8_t b : out.norm_bits) CHECK(b == 0);
  CHECK(out.accepted_count == 0);

  AggregateResult agg = secure_aggregate(eng, f.upd_shares, out);
  CHECK(agg.accepted_count == 0);
  CHECK(agg.mean_update.empty());  // round falls back to the previous model
}

TEST_CASE("a generous bound accepts bounded updates") {
  Engine eng(kP, 78);
  std::mt19937_64 rng(24);
  RoundFixture f = make_round(eng, 6, 1, 4, {2, 2}, rng);
  f.cfg.lambda = 10.0;
  const CheckOutcome out = run_check(eng, f.upd_shares, f.val_shares,
                                     f.plain.prev_model, f.com, f.cfg);
  for (uint8_t b : out.norm_bits) CHECK(b == 1);
}

TEST_CASE("a destructive update scores lowest") {
  // separable two-cluster data; one client submits the sign-flipped mean
  std::mt19937_64 rng(25);
  std::normal_distribution<double> noise(0.0, 0.5);
  const std::vector<int> dims{2, 2};
  const std::size_t m = 10;

  auto cluster_data = [&](std::size_t rows) {
    Dataset d;
    d.dim = 2;
    d.num_classes = 2;
    for (std::size_t i = 0; i < rows; ++i) {
      const int c = static_cast<int>(i % 2);
      d.append(std::vector<double>{(c == 0 ? -2.0 : 2.0) + noise(rng),
                                   noise(rng)},
               c);
    }
    return d;
  };

  MlpModel base(dims);
  TrainOptions opts;
  opts.epochs = 2;
  opts.lr = 0.3;
  {
    // a couple of steps so the previous model is mid-training
    const Dataset warm = cluster_data(20);
    auto r = std::mt19937_64(1);
    local_train(base, warm, opts, r);
  }

  Engine eng(kP, 79);
  std::vector<ShareVec> upd_shares, val_shares;
  std::vector<std::vector<double>> updates(m);
  for (std::size_t i = 0; i < m; ++i) {
    MlpModel local = base;
    auto r = std::mt19937_64(100 + i);
    const Dataset d = cluster_data(24);
    updates[i] = local_train(local, d, opts, r);
  }
  // client 3 submits the sign-flipped model: w + u = -w
  for (std::size_t k = 0; k < base.params.size(); ++k) {
    updates[3][k] = -2.0 * base.params[k];
  }
  for (std::size_t i = 0; i < m; ++i) {
    upd_shares.push_back(eng.share(FixedVec::from_reals(updates[i], kP), rng));
    val_shares.push_back(eng.share(pack_dataset(cluster_data(10), kP), rng));
  }

  CheckConfig cfg;
  cfg.variant = ScoreVariant::acc;
  cfg.m_c = 1;
  cfg.k_frac = 0.9;
  cfg.norm_check = false;
  cfg.layer_dims = dims;
  const Committees com = sample_committees(m, 1, 4242);
  const CheckOutcome out =
      run_check(eng, upd_shares, val_shares,
                FixedVec::from_reals(base.params, kP), com, cfg);
  const auto worst = std::min_element(out.scr.begin(), out.scr.end());
  CHECK(static_cast<std::size_t>(worst - out.scr.begin()) == 3);
  CHECK(out.accepted[3] == 0);
}

TEST_CASE("share pipeline equals the plaintext oracle, 50 random rounds") {
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 50; ++trial) {
    Engine eng(kP, 1000 + trial);
    const std::size_t m = 6 + rng() % 5;
    const int m_c = 1 + static_cast<int>(rng() % 2);
    if (2 * m_c + 1 > static_cast<int>(m) - 1) continue;
    const std::vector<int> dims{2, 2};
    const bool norm_check = trial % 3 != 0;
    RoundFixture f = make_round(eng, m, m_c, 4, dims, rng, norm_check);
    if (trial % 2 == 0) f.cfg.variant = ScoreVariant::prob;

    eng.clear_recon_log();
    const CheckOutcome out = run_check(eng, f.upd_shares, f.val_shares,
                                       f.plain.prev_model, f.com, f.cfg);
    CHECK(eng.recon_log().empty());  // nothing revealed during the check
    const AggregateResult agg = secure_aggregate(eng, f.upd_shares, out);

    const PlainOutcome want = plaintext_oracle(f.plain, f.com, f.cfg);
    CHECK(out.norm_bits == want.norm_bits);
    CHECK(out.topk_bits == want.topk_bits);
    CHECK(out.accepted == want.accepted);
    CHECK(out.accepted_count == want.accepted_count);
    CHECK(out.score_matrix == want.score_matrix);
    CHECK(out.scr == want.scr);
    CHECK(agg.accepted_count == want.accepted_count);
    if (want.accepted_count > 0) {
      REQUIRE(agg.sum.data == want.sum.data);  // exact masked sum
      for (std::size_t k = 0; k < agg.mean_update.size(); ++k) {
        CHECK(agg.mean_update[k] == want.mean_update[k]);
      }
    }

    // privacy boundary: only the aggregate and the count were reconstructed
    const auto& log = eng.recon_log();
    if (want.accepted_count > 0) {
      REQUIRE(log.size() == 2);
      CHECK(log[0] == "accepted_count");
      CHECK(log[1] == "aggregate");
    } else {
      REQUIRE(log.size() == 1);
      CHECK(log[0] == "accepted_count");
    }
  }
}

TEST_CASE("secure_aggregate averages exactly the accepted updates") {
  Engine eng(kP, 80);
  std::mt19937_64 rng(27);
  const std::size_t m = 5, dim = 4;
  std::vector<ShareVec> upd;
  std::vector<FixedVec> clear;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> u(dim);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (double& v : u) v = d(rng);
    clear.push_back(FixedVec::from_reals(u, kP));
    upd.push_back(eng.share(clear.back(), rng));
  }

  CheckOutcome outcome;
  outcome.b_shares.reserve(m);
  std::vector<uint8_t> pattern{1, 0, 1, 1, 0};
  for (std::size_t i = 0; i < m; ++i) {
    outcome.b_shares.push_back(eng.constant_raw(pattern[i]));
  }
  const AggregateResult agg = secure_aggregate(eng, upd, outcome);
  CHECK(agg.accepted_count == 3);
  for (std::size_t k = 0; k < dim; ++k) {
    const double want = (decode_fixed(clear[0].data[k], kP) +
                         decode_fixed(clear[2].data[k], kP) +
                         decode_fixed(clear[3].data[k], kP)) /
                        3.0;
    CHECK(agg.mean_update[k] == doctest::Approx(want).epsilon(1e-12));
  }

  // single accepted update comes back unchanged
  CheckOutcome one;
  for (std::size_t i = 0; i < m; ++i) {
    one.b_shares.push_back(eng.constant_raw(i == 2 ? 1 : 0));
  }
  const AggregateResult single = secure_aggregate(eng, upd, one);
  CHECK(single.accepted_count == 1);
  CHECK(single.sum.data == clear[2].data);
}

TEST_CASE("score override hook rewrites only targeted entries") {
  Engine eng(kP, 81);
  std::mt19937_64 rng(28);
  RoundFixture f = make_round(eng, 6, 1, 4, {2, 2}, rng, false);

  const CheckOutcome plain_out = run_check(eng, f.upd_shares, f.val_shares,
                                           f.plain.prev_model, f.com, f.cfg);
  ScoreOverride hook = [](int i, int j) -> std::optional<double> {
    if (j == 2) return i == 0 ? 1.0 : -1.0;
    return std::nullopt;
  };
  const CheckOutcome hooked = run_check(eng, f.upd_shares, f.val_shares,
                                        f.plain.prev_model, f.com, f.cfg,
                                        hook);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      if (f.com.members[i][c] == 2) {
        CHECK(hooked.score_matrix[i][c] == (i == 0 ? 1.0 : -1.0));
      } else {
        CHECK(hooked.score_matrix[i][c] == plain_out.score_matrix[i][c]);
      }
    }
  }
}

TEST_CASE("accuracy-difference scores hit their documented extremes") {
  Engine eng(kP, 90);
  std::mt19937_64 rng(29);
  const std::vector<int> dims{2, 2};

  // a validation set that a +x-vs-. . . sign model classifies perfectly
  Dataset d;
  d.dim = 2;
  d.num_classes = 2;
  for (int i = 0; i < 6; ++i) {
    d.append(std::vector<double>{i % 2 ? 2.0 : -2.0, 0.3 * i}, i % 2);
  }
  const ShareVec val = eng.share(pack_dataset(d, kP), rng);

  // identical models: the score is exactly zero
  std::vector<double> w(6, 0.0);
  w[0] = -1.0;
  w[2] = 1.0;  // class 1 weight on feature 0
  const FixedVec w_prev = FixedVec::from_reals(w, kP);
  const ShareVec zero_update = eng.share(FixedVec(6, kP), rng);
  const ShareVec model_same = Engine::add_public(zero_update, w_prev);
  const ShareVec same_new = eng.sec_inf(model_same, dims, val);
  const ShareVec same_prev = eng.sec_inf_public_model(w_prev, dims, val);
  CHECK(eng.unseal(Engine::lin(1, same_new, -1, same_prev)).data[0] == 0);

  // perfect new model against a fully wrong previous model: score +1
  std::vector<double> wrong(6, 0.0);
  wrong[0] = 1.0;
  wrong[2] = -1.0;  // inverted signs, 0 accuracy on d
  const FixedVec w_bad = FixedVec::from_reals(wrong, kP);
  const ShareVec perfect = eng.share(FixedVec::from_reals(w, kP), rng);
  const ShareVec acc_new = eng.sec_inf(perfect, dims, val);
  const ShareVec acc_bad = eng.sec_inf_public_model(w_bad, dims, val);
  const double score =
      decode_fixed(eng.unseal(Engine::lin(1, acc_new, -1, acc_bad)).data[0],
                   kP);
  CHECK(score == 1.0);

  // 100 random cases against the two-accuracy plaintext oracle
  for (int trial = 0; trial < 100; ++trial) {
    MlpModel mn(dims), mp(dims);
    mn.init_random(rng, 1.0);
    mp.init_random(rng, 1.0);
    Dataset rd;
    rd.dim = 2;
    rd.num_classes = 2;
    std::uniform_real_distribution<double> feat(-2.0, 2.0);
    for (int r = 0; r < 5; ++r) {
      rd.append(std::vector<double>{feat(rng), feat(rng)},
                static_cast<int>(rng() % 2));
    }
    const FixedVec packed = pack_dataset(rd, kP);
    const FixedVec wn = FixedVec::from_reals(mn.params, kP);
    const FixedVec wp = FixedVec::from_reals(mp.params, kP);
    const ShareVec sn = eng.share(wn, rng);
    const ShareVec sv = eng.share(packed, rng);
    const u128 got = eng.unseal(
        Engine::lin(1, eng.sec_inf(sn, dims, sv), -1,
                    eng.sec_inf_public_model(wp, dims, sv))).data[0];
    const u128 want = ring_sub(fixed_accuracy(wn.data, dims, packed.data, kP),
                               fixed_accuracy(wp.data, dims, packed.data, kP),
                               kP);
    CHECK(got == want);
  }
}

TEST_CASE("acceptance cardinality invariants hold on random rounds") {
  std::mt19937_64 rng(30);
  for (int trial = 0; trial < 20; ++trial) {
    Engine eng(kP, 2000 + trial);
    const std::size_t m = 6 + rng() % 5;
    const int m_c = 1;
    RoundFixture f = make_round(eng, m, m_c, 4, {2, 2}, rng, trial % 2 == 0);
    const CheckOutcome out = run_check(eng, f.upd_shares, f.val_shares,
                                       f.plain.prev_model, f.com, f.cfg);
    const std::size_t keep = top_k_keep_count(f.cfg.k_frac, m);
    std::size_t topk_total = 0, b_total = 0;
    for (std::size_t i = 0; i < m; ++i) {
      topk_total += out.topk_bits[i];
      b_total += out.accepted[i];
    }
    CHECK(topk_total == keep);  // exactly round(k*m) selected
    CHECK(b_total <= keep);     // the norm bits only remove
    // the score range of the accuracy variant stays within [-1, 1]
    for (const auto& row : out.score_matrix) {
      for (double s : row) {
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
      }
    }
  }
}

TEST_CASE("identical accepted updates aggregate to themselves") {
  Engine eng(kP, 91);
  std::mt19937_64 rng(31);
  const FixedVec u = FixedVec::from_reals({0.4, -0.7, 0.05, 1.2}, kP);
  std::vector<ShareVec> upd{eng.share(u, rng), eng.share(u, rng)};
  CheckOutcome outcome;
  outcome.b_shares.push_back(eng.constant_raw(1));
  outcome.b_shares.push_back(eng.constant_raw(1));
  const AggregateResult agg = secure_aggregate(eng, upd, outcome);
  CHECK(agg.accepted_count == 2);
  for (std::size_t k = 0; k < u.size(); ++k) {
    CHECK(agg.mean_update[k] ==
          doctest::Approx(decode_fixed(u.data[k], kP)).epsilon(1e-12));
  }
}
