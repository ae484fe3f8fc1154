#include "fedval/sharing.hpp"

#include <algorithm>
#include <sstream>

#include "fedval/model.hpp"
#include "fedval/rng.hpp"

namespace fedval {

void CommLedger::charge(const std::string& name, uint64_t bytes,
                        uint64_t messages, uint64_t rounds) {
  Entry& e = entries[name];
  e.invocations += 1;
  e.bytes += bytes;
  e.messages += messages;
  e.rounds += rounds;
}

uint64_t CommLedger::total_bytes() const {
  uint64_t total = 0;
  for (const auto& [name, e] : entries) total += e.bytes;
  return total;
}

std::string CommLedger::to_csv() const {
  std::ostringstream out;
  out << "subprotocol,invocations,bytes,rounds\n";
  for (const auto& [name, e] : entries) {
    out << name << ',' << e.invocations << ',' << e.bytes << ',' << e.rounds
        << '\n';
  }
  return out.str();
}

Engine::Engine(FixedParams params, uint64_t seed, MultMode mode)
    : params_(params), mult_mode_(mode) {
  params_.validate();
  kappa_ = substream(seed, "kappa");
  for (int i = 0; i < 3; ++i) {
    pair_key_[i] = substream(seed, "pair" + std::to_string(i));
  }
  reshare_state_ = substream(seed, "reshare");
}

u128 Engine::draw_ring(uint64_t& state) {
  u128 v = splitmix64(state);
  if (params_.ring_bits > 64) {
    v |= static_cast<u128>(splitmix64(state)) << 64;
  }
  return v & params_.mask();
}

ShareVec Engine::share(const FixedVec& secret, std::mt19937_64& rng) {
  ShareVec s;
  s.params = secret.params;
  const std::size_t n = secret.size();
  std::array<std::vector<u128>, 3> add;
  for (auto& v : add) v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    u128 s0 = static_cast<u128>(rng());
    u128 s1 = static_cast<u128>(rng());
    if (params_.ring_bits > 64) {
      s0 |= static_cast<u128>(rng()) << 64;
      s1 |= static_cast<u128>(rng()) << 64;
    }
    s0 &= params_.mask();
    s1 &= params_.mask();
    add[0][i] = s0;
    add[1][i] = s1;
    add[2][i] = ring_sub(ring_sub(secret.data[i], s0, params_), s1, params_);
  }
  for (int p = 0; p < 3; ++p) {
    s.party[p].lo = add[p];
    s.party[p].hi = add[(p + 1) % 3];
  }
  // dealer sends two components to each party
  ledger_.charge("share", 6 * n * elem_bytes(), 6, 1);
  return s;
}

void Engine::check_replicas(const ShareVec& s) const {
  for (int p = 0; p < 3; ++p) {
    if (s.party[p].hi != s.party[(p + 1) % 3].lo) {
      throw IntegrityError("inconsistent replicated shares");
    }
  }
}

FixedVec Engine::recon(const ShareVec& s, std::string_view label) {
  check_replicas(s);
  FixedVec out = unseal(s);
  ledger_.charge("recon", 3 * s.size() * elem_bytes(), 3, 1);
  recon_log_.emplace_back(label);
  return out;
}

FixedVec Engine::recon_from(const ShareVec& s, int pa, int pb,
                            std::string_view label) {
  if (pa == pb || pa < 0 || pb < 0 || pa > 2 || pb > 2) {
    throw std::invalid_argument("recon_from needs two distinct parties");
  }
  // order so that pb == pa+1 mod 3, giving components s_a, s_{a+1}, s_{a+2}
  if ((pa + 1) % 3 != pb) std::swap(pa, pb);
  if ((pa + 1) % 3 != pb) {
    throw std::invalid_argument("parties do not form an adjacent pair");
  }
  const auto& A = s.party[pa];
  const auto& B = s.party[pb];
  if (A.hi != B.lo) throw IntegrityError("replica mismatch between parties");
  FixedVec out(s.size(), s.params);
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.data[i] =
        ring_add(ring_add(A.lo[i], A.hi[i], params_), B.hi[i], params_);
  }
  ledger_.charge("recon", 2 * s.size() * elem_bytes(), 2, 1);
  recon_log_.emplace_back(label);
  return out;
}

FixedVec Engine::unseal(const ShareVec& s) const {
  FixedVec out(s.size(), s.params);
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.data[i] = ring_add(
        ring_add(s.party[0].lo[i], s.party[1].lo[i], params_),
        s.party[2].lo[i], params_);
  }
  return out;
}

ShareVec Engine::reshare(const FixedVec& v) {
  ShareVec s;
  s.params = v.params;
  const std::size_t n = v.size();
  std::array<std::vector<u128>, 3> add;
  for (auto& a : add) a.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const u128 s0 = draw_ring(reshare_state_);
    const u128 s1 = draw_ring(reshare_state_);
    add[0][i] = s0;
    add[1][i] = s1;
    add[2][i] = ring_sub(ring_sub(v.data[i], s0, params_), s1, params_);
  }
  for (int p = 0; p < 3; ++p) {
    s.party[p].lo = add[p];
    s.party[p].hi = add[(p + 1) % 3];
  }
  return s;
}

ShareVec Engine::constant_raw(u128 v) const {
  ShareVec s;
  s.params = params_;
  for (int p = 0; p < 3; ++p) {
    s.party[p].lo.assign(1, 0);
    s.party[p].hi.assign(1, 0);
  }
  s.party[0].lo[0] = v & params_.mask();
  s.party[2].hi[0] = s.party[0].lo[0];
  return s;
}

ShareVec Engine::lin(long long a, const ShareVec& x, long long b,
                     const ShareVec& y) {
  if (x.size() != y.size() || !(x.params == y.params)) {
    throw std::invalid_argument("lin operand mismatch");
  }
  const FixedParams& p = x.params;
  const u128 ua = from_signed(static_cast<s128>(a), p);
  const u128 ub = from_signed(static_cast<s128>(b), p);
  ShareVec z;
  z.params = p;
  for (int pi = 0; pi < 3; ++pi) {
    z.party[pi].lo.resize(x.size());
    z.party[pi].hi.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      z.party[pi].lo[i] =
          ring_add(ring_mul(ua, x.party[pi].lo[i], p),
                   ring_mul(ub, y.party[pi].lo[i], p), p);
      z.party[pi].hi[i] =
          ring_add(ring_mul(ua, x.party[pi].hi[i], p),
                   ring_mul(ub, y.party[pi].hi[i], p), p);
    }
  }
  return z;
}

ShareVec Engine::add_public(const ShareVec& x, const FixedVec& c) {
  if (x.size() != c.size() || !(x.params == c.params)) {
    throw std::invalid_argument("add_public operand mismatch");
  }
  const FixedParams& p = x.params;
  ShareVec z = x;
  // the constant is folded into additive component s_0 (held by parties 0, 2)
  for (std::size_t i = 0; i < x.size(); ++i) {
    z.party[0].lo[i] = ring_add(z.party[0].lo[i], c.data[i], p);
    z.party[2].hi[i] = ring_add(z.party[2].hi[i], c.data[i], p);
  }
  return z;
}

ShareVec Engine::sum_elements(const ShareVec& x) {
  const FixedParams& p = x.params;
  ShareVec z;
  z.params = p;
  for (int pi = 0; pi < 3; ++pi) {
    u128 lo = 0, hi = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      lo = ring_add(lo, x.party[pi].lo[i], p);
      hi = ring_add(hi, x.party[pi].hi[i], p);
    }
    z.party[pi].lo.assign(1, lo);
    z.party[pi].hi.assign(1, hi);
  }
  return z;
}

namespace {

// scalar operands broadcast over vectors
std::size_t broadcast_size(std::size_t a, std::size_t b) {
  if (a == b) return a;
  if (a == 1 || b == 1) return std::max(a, b);
  throw std::invalid_argument("mult operand size mismatch");
}

}  // namespace

ShareVec Engine::mult_raw(const ShareVec& x, const ShareVec& y) {
  if (!(x.params == y.params)) {
    throw std::invalid_argument("mult params mismatch");
  }
  const FixedParams& p = x.params;
  const std::size_t n = broadcast_size(x.size(), y.size());

  if (mult_mode_ == MultMode::ideal) {
    const FixedVec xv = unseal(x);
    const FixedVec yv = unseal(y);
    FixedVec z(n, p);
    for (std::size_t i = 0; i < n; ++i) {
      z.data[i] = ring_mul(xv.data[x.size() == 1 ? 0 : i],
                           yv.data[y.size() == 1 ? 0 : i], p);
    }
    charge_ideal("mult", x.size() + y.size(), n);
    return reshare(z);
  }

  // Local cross terms give an additive sharing of x*y:
  //   z_i = x_i*y_i + x_i*y_{i+1} + x_{i+1}*y_i.
  std::array<std::vector<u128>, 3> z;
  for (int pi = 0; pi < 3; ++pi) {
    z[pi].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t xi = x.size() == 1 ? 0 : i;
      const std::size_t yi = y.size() == 1 ? 0 : i;
      const u128 xl = x.party[pi].lo[xi], xh = x.party[pi].hi[xi];
      const u128 yl = y.party[pi].lo[yi], yh = y.party[pi].hi[yi];
      u128 v = ring_mul(xl, yl, p);
      v = ring_add(v, ring_mul(xl, yh, p), p);
      v = ring_add(v, ring_mul(xh, yl, p), p);
      z[pi][i] = v;
    }
  }
  // re-randomize with a pairwise zero sharing, then each party sends its
  // additive share to party i-1 to restore replication: one ring element
  // per party per product.
  std::array<uint64_t, 3> st = pair_key_;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<u128, 3> alpha;
    for (int pi = 0; pi < 3; ++pi) alpha[pi] = draw_ring(st[pi]);
    for (int pi = 0; pi < 3; ++pi) {
      z[pi][i] = ring_add(z[pi][i],
                          ring_sub(alpha[pi], alpha[(pi + 2) % 3], p), p);
    }
  }
  pair_key_ = st;
  ShareVec out;
  out.params = p;
  for (int pi = 0; pi < 3; ++pi) {
    out.party[pi].lo = z[pi];
    out.party[pi].hi = z[(pi + 1) % 3];
  }
  ledger_.charge("mult", 3 * n * elem_bytes(), 3, 1);
  return out;
}

ShareVec Engine::mult(const ShareVec& x, const ShareVec& y) {
  ShareVec raw = mult_raw(x, y);
  // deterministic truncation of the raw product, sealed, no extra bytes
  FixedVec v = unseal(raw);
  for (u128& e : v.data) e = trunc_shift(e, params_);
  return reshare(v);
}

void Engine::charge_ideal(const std::string& name, std::size_t in_elems,
                          std::size_t out_elems) {
  // documented synthetic cost of a sealed functionality: every party
  // contributes its input share and receives its output share
  ledger_.charge(name, 3 * (in_elems + out_elems) * elem_bytes(), 6, 1);
}

ShareVec Engine::scale_public(const ShareVec& x, double c) {
  FixedVec v = unseal(x);
  const u128 ec = encode_fixed(c, params_);
  for (u128& e : v.data) e = mul_fixed(e, ec, params_);
  charge_ideal("scale_pub", x.size(), x.size());
  return reshare(v);
}

ShareVec Engine::div_public(const ShareVec& x, long long q) {
  FixedVec v = unseal(x);
  for (u128& e : v.data) e = div_floor_public(e, q, params_);
  charge_ideal("div_pub", x.size(), x.size());
  return reshare(v);
}

ShareVec Engine::comp_less(const ShareVec& x, const ShareVec& y) {
  if (x.size() != 1 || y.size() != 1) {
    throw std::invalid_argument("comp_less takes scalar shares");
  }
  const u128 xa = unseal(x).data[0];
  const u128 ya = unseal(y).data[0];
  FixedVec bit(1, params_);
  bit.data[0] = to_signed(xa, params_) < to_signed(ya, params_) ? 1 : 0;
  charge_ideal("comp", 2, 1);
  return reshare(bit);
}

ShareVec Engine::sqrt_shared(const ShareVec& x) {
  if (x.size() != 1) {
    throw std::invalid_argument("sqrt_shared takes a scalar share");
  }
  FixedVec v = unseal(x);
  v.data[0] = sqrt_fixed(v.data[0], params_);
  charge_ideal("sqrt", 1, 1);
  return reshare(v);
}

std::vector<std::pair<ShareVec, int>> Engine::sort_shared(
    const std::vector<ShareVec>& keys, const std::vector<int>& ids) {
  if (keys.size() != ids.size()) {
    throw std::invalid_argument("sort_shared keys/ids mismatch");
  }
  std::vector<std::pair<s128, std::size_t>> order(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].size() != 1) {
      throw std::invalid_argument("sort_shared takes scalar shares");
    }
    order[i] = {to_signed(unseal(keys[i]).data[0], params_), i};
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) {
                     return a.first < b.first;
                   });
  std::vector<std::pair<ShareVec, int>> out;
  out.reserve(keys.size());
  for (const auto& [key, idx] : order) {
    FixedVec v(1, params_);
    v.data[0] = from_signed(key, params_);
    out.emplace_back(reshare(v), ids[idx]);
  }
  charge_ideal("sort", keys.size(), keys.size());
  return out;
}

std::vector<ShareVec> Engine::zero_one(std::size_t k, std::size_t m) {
  if (k > m) throw std::invalid_argument("zero_one needs k <= m");
  std::vector<ShareVec> bits;
  bits.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    FixedVec v(1, params_);
    v.data[0] = i < k ? 1 : 0;
    bits.push_back(reshare(v));
  }
  charge_ideal("zero_one", 0, m);
  return bits;
}

uint64_t Engine::rand_common(std::string_view tag) {
  uint64_t& counter = tag_counters_[std::string(tag)];
  uint64_t state = kappa_ ^ fnv1a(tag) ^ (0x9e3779b97f4a7c15ull * ++counter);
  splitmix64(state);
  return splitmix64(state);
}

ShareVec Engine::sec_inf(const ShareVec& model,
                         const std::vector<int>& layer_dims,
                         const ShareVec& data) {
  const FixedVec w = unseal(model);
  const FixedVec d = unseal(data);
  FixedVec acc(1, params_);
  acc.data[0] = fixed_accuracy(w.data, layer_dims, d.data, params_);
  charge_ideal("sec_inf", model.size() + data.size(), 1);
  return reshare(acc);
}

ShareVec Engine::sec_inf_public_model(const FixedVec& model,
                                      const std::vector<int>& layer_dims,
                                      const ShareVec& data) {
  const FixedVec d = unseal(data);
  FixedVec acc(1, params_);
  acc.data[0] = fixed_accuracy(model.data, layer_dims, d.data, params_);
  charge_ideal("sec_inf", model.size() + data.size(), 1);
  return reshare(acc);
}

ShareVec Engine::max_soft(const ShareVec& model,
                          const std::vector<int>& layer_dims,
                          const ShareVec& data) {
  const FixedVec w = unseal(model);
  const FixedVec d = unseal(data);
  FixedVec out(1, params_);
  out.data[0] = fixed_max_softmax(w.data, layer_dims, d.data, params_);
  charge_ideal("max_soft", model.size() + data.size(), 1);
  return reshare(out);
}

}  // namespace fedval
