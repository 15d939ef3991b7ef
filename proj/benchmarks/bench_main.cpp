// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "fpcert/certifier.hpp"
#include "fpcert/norms.hpp"

namespace {

using namespace fpcert;

const FpFormat f32 = make_format(FormatName::float32);

Rat quantized(std::mt19937_64& rng, std::uniform_real_distribution<double>& dist) {
  const FpValue v = fp_round_value(fp_from_double(dist(rng)), f32);
  return v.is_zero() ? Rat(0) : v.value();
}

Network bench_net(std::size_t width, std::size_t depth) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<LayerData> lds;
  for (std::size_t l = 0; l < depth; ++l) {
    LayerData ld;
    ld.W = RMat(l + 1 == depth ? 10 : width, width);
    for (std::size_t r = 0; r < ld.W.rows(); ++r)
      for (std::size_t c = 0; c < ld.W.cols(); ++c) ld.W(r, c) = quantized(rng, dist);
    ld.b.assign(ld.W.rows(), Rat(0));
    ld.act = l + 1 == depth ? ActivationTag::identity : ActivationTag::relu;
    lds.push_back(std::move(ld));
  }
  return make_network(f32, std::move(lds), 2);
}

std::vector<FpValue> bench_input(std::size_t n) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> xs(n);
  for (double& x : xs) x = dist(rng);
  return quantize(std::span<const double>(xs.data(), xs.size()), f32);
}

void BM_fp_round(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> sig(-(std::int64_t(1) << 50),
                                                  std::int64_t(1) << 50);
  std::uniform_int_distribution<int> exp(-140, 100);
  std::vector<FpValue> inputs;
  for (int i = 0; i < 4096; ++i) inputs.push_back(FpValue::make_finite(sig(rng), exp(rng)));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fp_round_value(inputs[i++ & 4095], f32));
  }
}
BENCHMARK(BM_fp_round);

void BM_fp_dot(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto a = bench_input(n);
  const auto b = bench_input(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fp_dot(a, b, f32));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_fp_dot)->Arg(16)->Arg(128)->Arg(784);

void BM_fp_forward(benchmark::State& state) {
  const Network net = bench_net(64, 4);
  const auto x = bench_input(64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fp_forward(net, x, f32, false));
  }
}
BENCHMARK(BM_fp_forward);

void BM_gram_spectral_up(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  RMat w(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) w(r, c) = quantized(rng, dist);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gram_spectral_up(w, 4));
  }
}
BENCHMARK(BM_gram_spectral_up)->Arg(8)->Arg(32);

void BM_propagate(benchmark::State& state) {
  const Network net = bench_net(32, 4);
  const auto x = bench_input(32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(propagate(net, x, Rat(1, 10), f32));
  }
}
BENCHMARK(BM_propagate);

void BM_certify(benchmark::State& state) {
  const Network net = bench_net(32, 4);
  const auto x = bench_input(32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(certify(net, x, Rat(1, 1000), f32));
  }
}
BENCHMARK(BM_certify);

void BM_real_arith_certify(benchmark::State& state) {
  const Network net = bench_net(32, 4);
  const auto x = bench_input(32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(real_arith_certify(net, x, Rat(1, 1000)));
  }
}
BENCHMARK(BM_real_arith_certify);

}  // namespace

BENCHMARK_MAIN();
