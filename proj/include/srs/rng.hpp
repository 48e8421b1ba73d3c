// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

#include "srs/tensor.hpp"

namespace srs {

/// Counter-based generator (Philox4x32-10). The whole state is the triple
/// (seed, stream, counter), so draws are reproducible on every platform and a
/// generator can be checkpointed by value. Independent streams of one seed
/// never overlap.
class Rng {
 public:
  struct State {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t counter = 0;
    bool operator==(const State&) const = default;
  };

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0) : state_{seed, stream, 0} {}
  explicit Rng(State state) : state_(state) {}

  const State& state() const noexcept { return state_; }

  /// A fresh generator on another stream of the same seed.
  Rng fork(std::uint64_t stream) const { return Rng(state_.seed, stream); }

  std::array<std::uint32_t, 4> next_block();
  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

 private:
  State state_;
};

/// i.i.d. N(0, std^2) draws. std must be positive.
template <typename T>
BasicTensor<T> rng_normal(Rng& rng, const Shape& shape, T std);

template <typename T>
BasicTensor<T> rng_uniform(Rng& rng, const Shape& shape, T lo, T hi);

}  // namespace srs
