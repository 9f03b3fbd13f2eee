#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "simple/augment.hpp"
#include "simple/config.hpp"
#include "simple/trainer.hpp"

using namespace simple;

namespace {

struct TrainFixture {
  TrainConfig cfg;
  std::unique_ptr<RunData> data;
  Tensor labeled_images{Tensor::zeros({1})};
  ProbBatch labeled_targets{Tensor::from({1, 1}, {1.0})};
  Tensor unlabeled_images{Tensor::zeros({1})};

  TrainFixture() {
    cfg = preset_config("toy");
    cfg.total_steps = 1000000;  // never reached; only the schedule sees it
    data = load_run_data(cfg);
    const auto li =
        cyclic_indices(1, 0, cfg.batch_size, data->labeled.size());
    labeled_images = data->labeled.batch(li);
    std::vector<std::size_t> classes;
    for (std::size_t i : li) classes.push_back(data->labeled.label(i));
    labeled_targets = one_hot(classes, cfg.toy_classes);
    unlabeled_images = data->unlabeled.batch(
        cyclic_indices(2, 0, cfg.batch_size, data->unlabeled.size()));
  }
};

TrainFixture& fixture() {
  static TrainFixture f;
  return f;
}

void bm_train_step(benchmark::State& state) {
  TrainFixture& f = fixture();
  RunStreams streams = RunStreams::derive(1);
  ModelState st = init_model(f.cfg.backbone(3, f.cfg.toy_classes),
                             f.cfg.optimizer_config(), streams.init);
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_step(st, streams, f.labeled_images,
                                        f.labeled_targets, f.unlabeled_images,
                                        nullptr, f.cfg, f.cfg.lr));
  }
}
BENCHMARK(bm_train_step)->Unit(benchmark::kMillisecond);

void bm_train_step_supervised(benchmark::State& state) {
  TrainFixture& f = fixture();
  TrainConfig cfg = f.cfg;
  cfg.lambda_u = 0.0;
  cfg.lambda_p = 0.0;
  RunStreams streams = RunStreams::derive(1);
  ModelState st = init_model(cfg.backbone(3, cfg.toy_classes),
                             cfg.optimizer_config(), streams.init);
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_step(st, streams, f.labeled_images,
                                        f.labeled_targets, f.unlabeled_images,
                                        nullptr, cfg, cfg.lr));
  }
}
BENCHMARK(bm_train_step_supervised)->Unit(benchmark::kMillisecond);

void bm_weak_augment(benchmark::State& state) {
  TrainFixture& f = fixture();
  RngStream rng = RngStream::derive(2, "bench_weak");
  const WeakAugPolicy policy{};
  const std::size_t n = f.unlabeled_images.shape()[0];
  for (auto _ : state) {
    std::vector<WeakSample> samples;
    samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) samples.push_back(sample_weak(policy, rng));
    benchmark::DoNotOptimize(apply_weak(f.unlabeled_images, samples));
  }
}
BENCHMARK(bm_weak_augment)->Unit(benchmark::kMicrosecond);

void bm_strong_augment(benchmark::State& state) {
  TrainFixture& f = fixture();
  RngStream rng = RngStream::derive(3, "bench_strong");
  const StrongAugPolicy policy{};
  const std::size_t n = f.unlabeled_images.shape()[0];
  const std::size_t h = f.unlabeled_images.shape()[2];
  const std::size_t w = f.unlabeled_images.shape()[3];
  for (auto _ : state) {
    std::vector<StrongSample> samples;
    samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      samples.push_back(sample_strong(policy, h, w, rng));
    }
    benchmark::DoNotOptimize(apply_strong(f.unlabeled_images, samples));
  }
}
BENCHMARK(bm_strong_augment)->Unit(benchmark::kMicrosecond);

void bm_evaluate(benchmark::State& state) {
  TrainFixture& f = fixture();
  RunStreams streams = RunStreams::derive(1);
  const ModelState st = init_model(f.cfg.backbone(3, f.cfg.toy_classes),
                                   f.cfg.optimizer_config(), streams.init);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(st.bcfg, st.ema, f.data->validation));
  }
}
BENCHMARK(bm_evaluate)->Unit(benchmark::kMillisecond);

}  // namespace
