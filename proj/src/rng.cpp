// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/rng.hpp"

#include <cmath>
#include <numbers>

namespace srs {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

}  // namespace

std::array<std::uint32_t, 4> Rng::next_block() {
  const std::uint64_t c = state_.counter++;
  const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                                            static_cast<std::uint32_t>(state_.stream),
                                            static_cast<std::uint32_t>(state_.stream >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(state_.seed),
                                            static_cast<std::uint32_t>(state_.seed >> 32)};
  return philox4x32_10(ctr, key);
}

std::uint64_t Rng::next_u64() {
  const auto b = next_block();
  return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  require(n > 0, ErrorKind::kInvalidArgument, "Rng::below(0)");
  // Rejection sampling keeps the result unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x < limit) return x % n;
  }
}

double Rng::normal() {
  // Box-Muller from one 128-bit block; u1 in (0, 1] keeps the log finite.
  const auto b = next_block();
  const std::uint64_t a = (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
  const std::uint64_t c = (static_cast<std::uint64_t>(b[3]) << 32) | b[2];
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(c >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
BasicTensor<T> rng_normal(Rng& rng, const Shape& shape, T std) {
  require(std > T(0), ErrorKind::kInvalidArgument, "rng_normal requires std > 0");
  BasicTensor<T> out(shape);
  for (auto& v : out.data()) v = static_cast<T>(rng.normal() * static_cast<double>(std));
  return out;
}

template <typename T>
BasicTensor<T> rng_uniform(Rng& rng, const Shape& shape, T lo, T hi) {
  require(lo < hi, ErrorKind::kInvalidArgument, "rng_uniform requires lo < hi");
  BasicTensor<T> out(shape);
  const double span = static_cast<double>(hi) - static_cast<double>(lo);
  for (auto& v : out.data()) v = static_cast<T>(static_cast<double>(lo) + span * rng.uniform());
  return out;
}

template BasicTensor<float> rng_normal(Rng&, const Shape&, float);
template BasicTensor<double> rng_normal(Rng&, const Shape&, double);
template BasicTensor<float> rng_uniform(Rng&, const Shape&, float, float);
template BasicTensor<double> rng_uniform(Rng&, const Shape&, double, double);

}  // namespace srs
