#include <benchmark/benchmark.h>

#include <vector>

#include "simple/rng.hpp"
#include "simple/ssl.hpp"
#include "simple/tensor.hpp"

using namespace simple;

namespace {

ProbBatch random_probs(std::size_t n, std::size_t l, std::uint64_t key) {
  RngStream rng = RngStream::derive(key, "bench_pairs");
  std::vector<double> v(n * l);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < l; ++j) {
      v[i * l + j] = rng.uniform() + 1e-3;
      s += v[i * l + j];
    }
    for (std::size_t j = 0; j < l; ++j) v[i * l + j] /= s;
  }
  return ProbBatch(Tensor::from({n, l}, v));
}

void bm_pair_loss(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const ProbBatch q = random_probs(n, 10, 1);
  const ProbBatch p = random_probs(n, 10, 2);
  const Thresholds th{0.5, 0.5};  // loose gates so most pairs do work
  for (auto _ : state) {
    benchmark::DoNotOptimize(pair_loss(q, p, th).item());
  }
  state.SetItemsProcessed(state.iterations() * n * (n - 1));
}
BENCHMARK(bm_pair_loss)->Arg(16)->Arg(64)->Arg(128);

void bm_pair_loss_oracle(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const ProbBatch q = random_probs(n, 10, 1);
  const ProbBatch p = random_probs(n, 10, 2);
  const Thresholds th{0.5, 0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(pair_loss_oracle(q, p, th));
  }
  state.SetItemsProcessed(state.iterations() * n * (n - 1));
}
BENCHMARK(bm_pair_loss_oracle)->Arg(16)->Arg(64)->Arg(128);

void bm_pair_loss_gradient(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const ProbBatch q = random_probs(n, 10, 1);
  const Tensor p0 = random_probs(n, 10, 2).tensor();
  const Thresholds th{0.5, 0.5};
  for (auto _ : state) {
    Tape tape;
    const Tensor p = tape.watch(p0);
    benchmark::DoNotOptimize(backward(pair_loss(q, ProbBatch(p), th)));
  }
}
BENCHMARK(bm_pair_loss_gradient)->Arg(16)->Arg(64);

void bm_sharpen_rows(benchmark::State& state) {
  const Tensor p = random_probs(256, 10, 3).tensor();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sharpen_rows(p, 0.5));
  }
}
BENCHMARK(bm_sharpen_rows);

}  // namespace
