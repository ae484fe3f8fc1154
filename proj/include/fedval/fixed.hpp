#pragma once
// Fixed-point arithmetic over the integer ring Z_{2^K}. A real x is carried
// as round(x * 2^f) in K-bit two's complement. Elements are stored in
// unsigned 128-bit words so that K = 64 and K = 128 share one code path;
// everything is reduced modulo 2^K by masking.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fedval {

using u128 = unsigned __int128;
using s128 = __int128;

struct FixedParams {
  int ring_bits = 64;  // K
  int frac_bits = 16;  // f

  u128 mask() const {
    return ring_bits >= 128 ? ~u128{0} : ((u128{1} << ring_bits) - 1);
  }
  bool operator==(const FixedParams&) const = default;

  void validate() const {
    if (ring_bits < 8 || ring_bits > 128 || frac_bits <= 0 ||
        frac_bits >= ring_bits) {
      throw std::invalid_argument("fixed-point parameters out of range");
    }
  }
};

// Sign-extend a K-bit ring element into a native signed 128-bit value.
inline s128 to_signed(u128 e, const FixedParams& p) {
  const u128 m = p.mask();
  e &= m;
  if (p.ring_bits < 128 && ((e >> (p.ring_bits - 1)) & 1)) {
    return static_cast<s128>(e | ~m);
  }
  return static_cast<s128>(e);
}

inline u128 from_signed(s128 v, const FixedParams& p) {
  return static_cast<u128>(v) & p.mask();
}

inline u128 ring_add(u128 a, u128 b, const FixedParams& p) {
  return (a + b) & p.mask();
}
inline u128 ring_sub(u128 a, u128 b, const FixedParams& p) {
  return (a - b) & p.mask();
}
inline u128 ring_mul(u128 a, u128 b, const FixedParams& p) {
  return (a * b) & p.mask();
}
inline u128 ring_neg(u128 a, const FixedParams& p) { return (-a) & p.mask(); }

// Deterministic truncation after a fixed-point product: arithmetic shift
// right by f on the two's-complement value.
inline u128 trunc_shift(u128 raw, const FixedParams& p) {
  return from_signed(to_signed(raw, p) >> p.frac_bits, p);
}

inline u128 encode_fixed(double x, const FixedParams& p) {
  if (!std::isfinite(x)) throw std::domain_error("encode of non-finite value");
  const long double limit = exp2l(p.ring_bits - p.frac_bits - 1);
  if (fabsl(static_cast<long double>(x)) >= limit) {
    throw std::overflow_error("fixed-point encode out of range");
  }
  const long double scaled =
      static_cast<long double>(x) * exp2l(p.frac_bits);
  return from_signed(static_cast<s128>(roundl(scaled)), p);
}

inline double decode_fixed(u128 e, const FixedParams& p) {
  return static_cast<double>(static_cast<long double>(to_signed(e, p)) /
                             exp2l(p.frac_bits));
}

// One fixed-point multiply: raw product then truncation.
inline u128 mul_fixed(u128 a, u128 b, const FixedParams& p) {
  return trunc_shift(ring_mul(a, b, p), p);
}

// Floor division of a ring value by a small public positive integer.
inline u128 div_floor_public(u128 a, long long q, const FixedParams& p) {
  if (q <= 0) throw std::invalid_argument("divisor must be positive");
  s128 v = to_signed(a, p);
  s128 d = q;
  s128 r = v / d;
  if (v % d != 0 && v < 0) --r;
  return from_signed(r, p);
}

inline u128 sqrt_fixed(u128 a, const FixedParams& p) {
  const double v = decode_fixed(a, p);
  if (v < 0.0) throw std::domain_error("sqrt of negative fixed-point value");
  return encode_fixed(std::sqrt(v), p);
}

// Flat vector of ring elements. Carries model parameters, updates and
// packed data rows.
struct FixedVec {
  std::vector<u128> data;
  FixedParams params;

  FixedVec() = default;
  FixedVec(std::size_t n, FixedParams p) : data(n, 0), params(p) {}

  std::size_t size() const { return data.size(); }

  static FixedVec from_reals(const std::vector<double>& xs, FixedParams p) {
    FixedVec v(xs.size(), p);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      v.data[i] = encode_fixed(xs[i], p);
    }
    return v;
  }

  std::vector<double> to_reals() const {
    std::vector<double> xs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      xs[i] = decode_fixed(data[i], params);
    }
    return xs;
  }

  bool operator==(const FixedVec& o) const {
    return params == o.params && data == o.data;
  }
};

}  // namespace fedval
