#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "simple/augment.hpp"
#include "simple/checkpoint.hpp"
#include "simple/config.hpp"
#include "simple/dataset.hpp"
#include "simple/optim.hpp"
#include "simple/ssl.hpp"

namespace simple {

// One named stream per randomness purpose. Keeping the labeled-path streams
// disjoint from the unlabeled-path ones makes the supervised-only reference
// loop consume exactly the same draws as a lambda_u = lambda_p = 0 run, which
// the bitwise-equivalence check requires. The order streams contribute only
// their keys (batch drawing is positional, not tick-based).
struct RunStreams {
  RngStream init;
  RngStream labeled_order;
  RngStream unlabeled_order;
  RngStream weak_labeled;
  RngStream weak_unlabeled;
  RngStream strong_aug;

  static RunStreams derive(std::uint64_t seed);
  std::vector<RngCounterEntry> snapshot() const;
  // Restores counters; throws FormatError if names or keys disagree.
  void restore(const std::vector<RngCounterEntry>& entries);
};

struct ModelState {
  BackboneConfig bcfg;
  ParamSet params;
  ParamSet ema;  // shadow copy, updated only by ema_update
  Optimizer opt;
  std::uint64_t step = 0;
};

// He-initializes params and copies them into the EMA shadow.
ModelState init_model(const BackboneConfig& bcfg, const OptimizerConfig& ocfg,
                      RngStream& init_stream);

// Dataset plus its three-way split. Views hold pointers into `train`/`test`,
// so the bundle is heap-allocated and immovable once built.
struct RunData {
  LabeledDataset train;
  LabeledDataset test;
  DatasetView labeled;
  DatasetView validation;
  UnlabeledView unlabeled;
  DatasetView test_view;

  RunData() = default;
  RunData(const RunData&) = delete;
  RunData& operator=(const RunData&) = delete;
};

std::unique_ptr<RunData> load_run_data(const TrainConfig& cfg);

// Element t of the batch starting at global position `start` is
// perm(epoch)[g % n] with g = start + t, epoch = g / n, perm keyed by
// (key, epoch). Stateless, so resuming needs only the step counter.
std::vector<std::size_t> cyclic_indices(std::uint64_t key, std::uint64_t start,
                                        std::size_t count, std::size_t n);

// Rows are one-hot; every class must be < num_classes.
ProbBatch one_hot(const std::vector<std::size_t>& classes,
                  std::size_t num_classes);

// One full training step: weak-augment the labeled batch, guess pseudo
// labels from K weak views through the EMA model, score K_strong strong
// views, take one optimizer step on the combined loss, then update the EMA.
//
// When lambda_u == lambda_p == 0 the unlabeled branch is skipped outright;
// its streams are never touched, so the parameter trajectory is the
// supervised one by construction. `unlabeled_truth` (optional) feeds only
// the false-positive pair diagnostic.
//
// Throws ValueError on a non-finite loss, ShapeError on batch-size mismatch.
LossBreakdown train_step(ModelState& st, RunStreams& streams,
                         const Tensor& labeled_images,
                         const ProbBatch& labeled_targets,
                         const Tensor& unlabeled_images,
                         const std::vector<std::size_t>* unlabeled_truth,
                         const TrainConfig& cfg, double lr);

// Top-1 accuracy of softmax-argmax predictions, ties to the lowest class
// index. Pure: identical inputs give identical results.
double evaluate(const BackboneConfig& bcfg, const ParamSet& model,
                const DatasetView& split, std::size_t eval_batch = 128);

struct MetricsRow {
  std::uint64_t step = 0;
  // Loss fields reflect the most recent training step; absent on the
  // pre-training row. Diagnostics are means over steps since the last row.
  std::optional<double> l_x, l_u, l_p, total, lr;
  double val_acc = 0.0;
  std::optional<double> test_acc;
  std::optional<double> high_conf_ratio;
  std::optional<double> pair_pass_ratio;
  std::optional<double> fp_pair_rate;
};

struct CheckpointRecord {
  std::uint64_t step = 0;
  double val_acc = -1.0;
  std::string path;
  std::uint64_t config_digest = 0;
};

struct RunResult {
  std::vector<MetricsRow> history;
  CheckpointRecord best;
  std::optional<double> best_test_acc;  // test accuracy at the best row
};

// Earliest evaluated step whose validation accuracy reaches 95% of the
// history's maximum.
std::uint64_t convergence_step(const std::vector<MetricsRow>& history);

std::string metrics_csv_header();
std::string format_metrics_row(const MetricsRow& row);

struct RunOutputs {
  std::string metrics_csv;     // empty: keep history in memory only
  std::string checkpoint_dir;  // empty: skip best.ckpt/last.ckpt files
};

// Full training loop: evaluation at step 0, every eval_every steps, and at
// total_steps; best-validation checkpoint tracking; CSV rows flushed as
// written so an aborted run leaves a parseable prefix. `resume` continues an
// earlier run (the config digest must match); `stop_after` > 0 checkpoints
// and returns once that step completes, simulating an interruption.
RunResult run_training(const TrainConfig& cfg, const RunData& data,
                       const RunOutputs& out, const Checkpoint* resume = nullptr,
                       std::uint64_t stop_after = 0);

// Plain supervised loop over the same labeled stream: the oracle the
// lambda = 0 run must match bitwise.
ModelState run_supervised_reference(const TrainConfig& cfg,
                                    const RunData& data, std::uint64_t steps);

Checkpoint make_checkpoint(const ModelState& st, const RunStreams& streams,
                           std::uint64_t config_dig);

// Fresh model with the checkpoint applied, for standalone evaluation. The
// checkpoint's digest must match the config's.
ModelState model_from_checkpoint(const TrainConfig& cfg, std::size_t channels,
                                 std::size_t num_classes, const Checkpoint& ck);

}  // namespace simple
