#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "simple/nn.hpp"

namespace simple {

enum class OptKind { sgd_nesterov, adamw };

struct OptimizerConfig {
  OptKind kind = OptKind::sgd_nesterov;
  double momentum = 0.9;       // sgd_nesterov only
  double weight_decay = 5e-4;  // decoupled for both kinds
  double beta1 = 0.9;          // adamw only
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

OptKind opt_kind_from_string(const std::string& s);
std::string to_string(OptKind k);

// Holds per-parameter slot buffers (momentum, or first/second moments) plus
// the shared adamw step counter. Buffers are created lazily on first step and
// are keyed by parameter order, so the same ParamSet must be passed each time.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg);

  // One in-place update. grads[i] aligns with params.items()[i] and must have
  // matching length. `lr` is the already-scheduled learning rate.
  //
  // Decoupled weight decay shrinks the parameter before the gradient step:
  //   theta <- theta * (1 - lr * wd)
  // sgd_nesterov then applies  v <- mu v + g;  theta <- theta - lr (g + mu v).
  // adamw applies bias-corrected moments  theta <- theta - lr mhat/(sqrt(vhat)+eps).
  void step(ParamSet& params, const std::vector<std::vector<double>>& grads,
            double lr);

  const OptimizerConfig& config() const { return cfg_; }
  std::uint64_t steps_taken() const { return t_; }

  // Checkpoint plumbing: slot buffers in parameter order. For sgd_nesterov
  // one buffer per param (velocity); for adamw two (m then v, interleaved).
  std::vector<std::vector<double>> export_state() const;
  void import_state(const std::vector<std::vector<double>>& state,
                    std::uint64_t steps);

 private:
  void ensure_slots(const ParamSet& params);

  OptimizerConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> slot1_;  // velocity or first moment
  std::vector<std::vector<double>> slot2_;  // second moment (adamw)
};

// Cosine decay sweeps only 7/16 of a half period by default, so the final
// factor is cos(7 pi/16) ~= 0.195 rather than zero.
inline constexpr double kDefaultCosineRate = 7.0 * std::numbers::pi / 16.0;

// base_lr * cos(rate * step / total_steps).
double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double base_lr,
                 double rate = kDefaultCosineRate);

// Exponential moving average of parameters:
//   shadow <- decay * shadow + (1 - decay) * params.
void ema_update(ParamSet& shadow, const ParamSet& params, double decay);

}  // namespace simple
