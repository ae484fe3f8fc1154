#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fedval/fixed.hpp"

using namespace fedval;

namespace {
const FixedParams kP64{64, 16};
const FixedParams kP128{128, 16};
}  // namespace

TEST_CASE("encode/decode basics") {
  CHECK(encode_fixed(0.0, kP64) == 0);
  CHECK(decode_fixed(0, kP64) == 0.0);
  CHECK(encode_fixed(1.0, kP64) == 65536);  // 2^f
  CHECK(decode_fixed(encode_fixed(-1.0, kP64), kP64) == -1.0);
  // negative values wrap to the top of the ring
  const u128 neg = encode_fixed(-1.0, kP64);
  CHECK(to_signed(neg, kP64) == -65536);
  CHECK((neg >> 63) == 1);
}

TEST_CASE("encode rejects out-of-range and non-finite input") {
  const double limit = std::exp2(64 - 16 - 1);
  CHECK_THROWS_AS(encode_fixed(limit, kP64), std::overflow_error);
  CHECK_THROWS_AS(encode_fixed(-limit, kP64), std::overflow_error);
  CHECK_NOTHROW(encode_fixed(limit * 0.99, kP64));
  CHECK_THROWS_AS(encode_fixed(std::nan(""), kP64), std::domain_error);
}

TEST_CASE("round-trip error within 2^-f over [-100,100]") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(-100.0, 100.0);
  const double tol = std::exp2(-16);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = dist(rng);
    worst =
        std::max(worst, std::abs(decode_fixed(encode_fixed(x, kP64), kP64) - x));
  }
  CHECK(worst <= tol);
}

TEST_CASE("round-trip property holds for 10^4 samples on both ring sizes") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-1000.0, 1000.0);
  for (const FixedParams& p : {kP64, kP128}) {
    const double tol = std::exp2(-p.frac_bits);
    for (int i = 0; i < 10000; ++i) {
      const double x = dist(rng);
      CHECK(std::abs(decode_fixed(encode_fixed(x, p), p) - x) <= tol);
    }
  }
}

TEST_CASE("multiply-then-truncate error within 2^(-f+1)") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double tol = std::exp2(-15);
  for (const FixedParams& p : {kP64, kP128}) {
    for (int i = 0; i < 5000; ++i) {
      const double a = dist(rng), b = dist(rng);
      const u128 prod = mul_fixed(encode_fixed(a, p), encode_fixed(b, p), p);
      CHECK(std::abs(decode_fixed(prod, p) - a * b) <= tol);
    }
  }
}

TEST_CASE("truncation is an arithmetic shift") {
  // -6.5... shifted right by 16 floors toward -inf
  CHECK(to_signed(trunc_shift(from_signed(-425984 - 3, kP64), kP64), kP64) ==
        -7);
  CHECK(to_signed(trunc_shift(from_signed(425984 + 3, kP64), kP64), kP64) ==
        6);
}

TEST_CASE("floor division by a public integer") {
  CHECK(to_signed(div_floor_public(from_signed(7, kP64), 2, kP64), kP64) == 3);
  CHECK(to_signed(div_floor_public(from_signed(-7, kP64), 2, kP64), kP64) ==
        -4);
  CHECK(to_signed(div_floor_public(from_signed(-6, kP64), 3, kP64), kP64) ==
        -2);
  CHECK_THROWS(div_floor_public(1, 0, kP64));
}

TEST_CASE("ring arithmetic wraps modulo 2^K") {
  const u128 top = kP64.mask();
  CHECK(ring_add(top, 1, kP64) == 0);
  CHECK(ring_sub(0, 1, kP64) == top);
  CHECK(ring_mul(u128{1} << 63, u128{1} << 63, kP64) == 0);
}

TEST_CASE("sqrt on encoded values") {
  CHECK(decode_fixed(sqrt_fixed(encode_fixed(4.0, kP64), kP64), kP64) ==
        doctest::Approx(2.0).epsilon(1e-4));
  CHECK(sqrt_fixed(0, kP64) == 0);
  CHECK_THROWS_AS(sqrt_fixed(encode_fixed(-1.0, kP64), kP64),
                  std::domain_error);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> dist(0.0, 50.0);
  for (int i = 0; i < 100; ++i) {
    const double x = dist(rng);
    const double got =
        decode_fixed(sqrt_fixed(encode_fixed(x, kP64), kP64), kP64);
    CHECK(std::abs(got - std::sqrt(x)) <=
          std::exp2(-8) + 1e-3 * std::sqrt(x));
  }
}

TEST_CASE("FixedVec real conversion round-trips") {
  const std::vector<double> xs{0.5, -2.25, 100.0, -0.0001};
  const FixedVec v = FixedVec::from_reals(xs, kP64);
  const auto back = v.to_reals();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(std::abs(back[i] - xs[i]) <= std::exp2(-16));
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS(FixedParams{64, 0}.validate());
  CHECK_THROWS(FixedParams{64, 64}.validate());
  CHECK_THROWS(FixedParams{130, 16}.validate());
  CHECK_NOTHROW(FixedParams{128, 32}.validate());
}
