// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <benchmark/benchmark.h>

#include <random>

#include "sepasr/losses.hpp"
#include "sepasr/ops.hpp"
#include "sepasr/random.hpp"
#include "sepasr/separator.hpp"

using namespace sepasr;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed, "bench");
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

void BM_Conv1dForward(benchmark::State& state) {
  const std::int64_t c = state.range(0);
  const std::int64_t t = state.range(1);
  NoGradGuard no_grad;
  Tensor x = Tensor::constant(random_vec(static_cast<std::size_t>(c * t), 1), {c, t});
  Tensor k = Tensor::constant(random_vec(static_cast<std::size_t>(c * c * 3), 2), {c, c, 3});
  for (auto _ : state) {
    Tensor y = conv1d(x, k, 1, 2, 2);
    benchmark::DoNotOptimize(y.values().data());
  }
  state.SetItemsProcessed(state.iterations() * c * c * 3 * t);
}
BENCHMARK(BM_Conv1dForward)->Args({32, 1000})->Args({64, 1000})->Args({64, 4000});

void BM_Conv1dBackward(benchmark::State& state) {
  const std::int64_t c = state.range(0);
  const std::int64_t t = state.range(1);
  auto xv = random_vec(static_cast<std::size_t>(c * t), 3);
  auto kv = random_vec(static_cast<std::size_t>(c * c * 3), 4);
  for (auto _ : state) {
    Tensor x = Tensor::param(xv, {c, t});
    Tensor k = Tensor::param(kv, {c, c, 3});
    sum(conv1d(x, k, 1, 2, 2)).backward();
    benchmark::DoNotOptimize(k.grad().data());
  }
}
BENCHMARK(BM_Conv1dBackward)->Args({32, 1000})->Args({64, 1000});

void BM_SeparatorForward(benchmark::State& state) {
  SeparatorConfig cfg;
  cfg.N = 64;
  cfg.L = 16;
  cfg.B = 32;
  cfg.H = 64;
  cfg.P = 3;
  cfg.X = 4;
  cfg.R = 2;
  SeparatorModel model(cfg, 7);
  const std::int64_t len = state.range(0);
  Tensor x = Tensor::constant(random_vec(static_cast<std::size_t>(len), 5), {len});
  NoGradGuard no_grad;
  for (auto _ : state) {
    auto outs = model.forward(x);
    benchmark::DoNotOptimize(outs[0].values().data());
  }
  state.SetItemsProcessed(state.iterations() * len);
}
BENCHMARK(BM_SeparatorForward)->Arg(8000)->Arg(16000);

void BM_SiSnr(benchmark::State& state) {
  const std::int64_t n = 8000;
  Waveform est{random_vec(static_cast<std::size_t>(n), 8), 8000};
  Waveform ref{random_vec(static_cast<std::size_t>(n), 9), 8000};
  for (auto _ : state) {
    benchmark::DoNotOptimize(si_snr(est, ref));
  }
}
BENCHMARK(BM_SiSnr);

void BM_CtcLoss(benchmark::State& state) {
  const std::int64_t frames = state.range(0);
  const std::int64_t classes = 9;
  Tensor lp = log_softmax(Tensor::constant(
      random_vec(static_cast<std::size_t>(frames * classes), 10), {frames, classes}));
  const std::vector<int> labels = {1, 4, 2, 7};
  NoGradGuard no_grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ctc_loss(lp, labels, 0).item());
  }
}
BENCHMARK(BM_CtcLoss)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
