#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simple/nn.hpp"
#include "simple/optim.hpp"
#include "simple/ssl.hpp"

namespace simple {

// Fully resolved run configuration. Field defaults are the `toy` preset;
// apply_preset("cifar10") swaps in the CIFAR-scale values. Everything that
// affects the parameter trajectory lives here so the digest pins a run.
struct TrainConfig {
  // data
  std::string dataset = "toy";  // "toy" or "cifar10"
  std::string data_dir;         // directory with CIFAR-10 binary batches
  std::size_t toy_classes = 4;
  std::size_t toy_per_class = 630;
  std::size_t toy_test_per_class = 150;
  std::size_t image_size = 32;
  std::size_t labels_per_class = 5;
  std::size_t validation_size = 500;

  // model
  std::vector<std::size_t> conv_channels = {8, 16};
  std::size_t hidden = 32;

  // semi-supervised objective
  std::size_t batch_size = 16;
  std::size_t k_weak = 2;
  std::size_t k_strong = 1;
  double temperature = 0.5;
  double tau_c = 0.95;
  double tau_s = 0.9;
  // Desk-scale weights. The full-scale 75/75 (see the cifar10 preset)
  // collapses a 1k-step run: once the confidence gates open, the unlabeled
  // terms swamp twenty labels' cross-entropy and the net goes uniform.
  double lambda_u = 5.0;
  double lambda_p = 5.0;

  // optimizer and schedule
  std::string optimizer = "sgd_nesterov";  // or "adamw"
  double lr = 0.03;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double cosine_rate = kDefaultCosineRate;
  double ema_decay = 0.99;

  // loop
  std::uint64_t total_steps = 1000;
  std::uint64_t eval_every = 50;
  std::uint64_t seed = 1;
  bool eval_test = true;  // also score the test split at each evaluation

  void validate() const;  // throws ConfigError

  BackboneConfig backbone(std::size_t in_channels, std::size_t num_classes) const;
  OptimizerConfig optimizer_config() const;
  Thresholds thresholds() const { return Thresholds{tau_c, tau_s}; }
  LossWeights loss_weights() const { return LossWeights{lambda_u, lambda_p}; }
};

// Named presets: "toy" (the struct defaults) and "cifar10".
TrainConfig preset_config(const std::string& name);

// JSON round-trip. Parsing rejects unknown keys and type mismatches with
// ConfigError. serialize_config(parse_config_json(s)) is the canonical form.
std::string serialize_config(const TrainConfig& cfg);
// Keys present in the JSON override `base`; everything else carries through,
// so a file can layer on top of a preset.
TrainConfig parse_config_json(const std::string& json_text,
                              const TrainConfig& base = TrainConfig{});
TrainConfig load_config_file(const std::string& path,
                             const TrainConfig& base = TrainConfig{});

// FNV-1a over the canonical serialization; identifies a run's configuration
// in checkpoints and manifests.
std::uint64_t config_digest(const TrainConfig& cfg);

}  // namespace simple
