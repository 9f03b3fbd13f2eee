#include <benchmark/benchmark.h>

#include <vector>

#include "simple/ops.hpp"
#include "simple/rng.hpp"
#include "simple/tensor.hpp"

using namespace simple;

namespace {

Tensor random_tensor(const std::vector<std::size_t>& shape, std::uint64_t key) {
  RngStream rng = RngStream::derive(key, "bench");
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.normal();
  return Tensor::from(shape, v);
}

void bm_matmul(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor({n, n}, 1);
  const Tensor b = random_tensor({n, n}, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(a, b));
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(bm_matmul)->Arg(64)->Arg(128)->Arg(256);

void bm_conv2d(benchmark::State& state) {
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({16, c, 32, 32}, 3);
  const Tensor w = random_tensor({c * 2, c, 3, 3}, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv2d(x, w, 1, 1));
  }
}
BENCHMARK(bm_conv2d)->Arg(3)->Arg(8)->Arg(16);

void bm_conv2d_backward(benchmark::State& state) {
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  const Tensor x0 = random_tensor({16, c, 32, 32}, 3);
  const Tensor w0 = random_tensor({c * 2, c, 3, 3}, 4);
  for (auto _ : state) {
    Tape tape;
    const Tensor x = tape.watch(x0);
    const Tensor w = tape.watch(w0);
    const Tensor loss = mean(conv2d(x, w, 1, 1));
    benchmark::DoNotOptimize(backward(loss));
  }
}
BENCHMARK(bm_conv2d_backward)->Arg(3)->Arg(8);

void bm_softmax_rows(benchmark::State& state) {
  const Tensor x = random_tensor({256, 10}, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(softmax_rows(x));
  }
}
BENCHMARK(bm_softmax_rows);

void bm_maxpool(benchmark::State& state) {
  const Tensor x = random_tensor({16, 16, 32, 32}, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(maxpool2x2(x));
  }
}
BENCHMARK(bm_maxpool);

}  // namespace

BENCHMARK_MAIN();
