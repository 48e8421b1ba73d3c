// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

// Parallel im2col + GEMM convolution against the serial reference loops, on
// the layer shapes that dominate a desk-scale training step.

#include <benchmark/benchmark.h>

#include "srs/kernels.hpp"
#include "srs/rng.hpp"

namespace {

struct Case {
  std::int64_t batch, cin, cout, size, k, groups;
};

srs::Tensor input_for(const Case& c, srs::Rng& rng) {
  return srs::rng_normal<float>(rng, {c.batch, c.cin, c.size, c.size}, 1.0f);
}

srs::Tensor weight_for(const Case& c, srs::Rng& rng) {
  return srs::rng_normal<float>(rng, {c.cout, c.cin / c.groups, c.k, c.k}, 0.1f);
}

Case case_from(const benchmark::State& state) {
  return {state.range(0), state.range(1), state.range(2), state.range(3), state.range(4), state.range(5)};
}

void set_counters(benchmark::State& state, const Case& c) {
  const double macs = static_cast<double>(c.batch * c.cout * c.size * c.size * (c.cin / c.groups) * c.k * c.k);
  state.counters["GFLOP/s"] = benchmark::Counter(2.0 * macs, benchmark::Counter::kIsIterationInvariantRate,
                                                 benchmark::Counter::kIs1000);
}

void BM_Conv2dParallel(benchmark::State& state) {
  const Case c = case_from(state);
  srs::Rng rng(7);
  const auto x = input_for(c, rng);
  const auto w = weight_for(c, rng);
  for (auto _ : state) {
    auto out = srs::kernels::conv2d_forward(x, w, nullptr, 1, (c.k - 1) / 2, c.groups);
    benchmark::DoNotOptimize(out.ptr());
  }
  set_counters(state, c);
}

void BM_Conv2dBackward(benchmark::State& state) {
  const Case c = case_from(state);
  srs::Rng rng(7);
  const auto x = input_for(c, rng);
  const auto w = weight_for(c, rng);
  const auto g = srs::rng_normal<float>(rng, {c.batch, c.cout, c.size, c.size}, 1.0f);
  for (auto _ : state) {
    auto grads = srs::kernels::conv2d_backward(x, w, g, 1, (c.k - 1) / 2, c.groups, true, true, false);
    benchmark::DoNotOptimize(grads.dx.ptr());
  }
  set_counters(state, c);
}

void BM_Conv2dNaive(benchmark::State& state) {
  const Case c = case_from(state);
  srs::Rng rng(7);
  const auto x = input_for(c, rng);
  const auto w = weight_for(c, rng);
  for (auto _ : state) {
    auto out = srs::kernels::conv2d_naive(x, w, nullptr, 1, (c.k - 1) / 2, c.groups);
    benchmark::DoNotOptimize(out.ptr());
  }
  set_counters(state, c);
}

void Shapes(benchmark::internal::Benchmark* b) {
  b->ArgNames({"B", "Cin", "Cout", "HW", "K", "G"});
  b->Args({8, 16, 16, 64, 3, 1});
  b->Args({8, 48, 16, 64, 3, 1});
  b->Args({8, 32, 32, 32, 3, 1});
  b->Args({8, 128, 128, 8, 3, 1});
  b->Args({1, 64, 8, 8, 1, 8});  // DPConv: groups = batch
}

}  // namespace

BENCHMARK(BM_Conv2dParallel)->Apply(Shapes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dBackward)->Apply(Shapes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dNaive)->Apply(Shapes)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
