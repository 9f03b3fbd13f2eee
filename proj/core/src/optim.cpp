#include "simple/optim.hpp"

#include <cmath>

#include "simple/errors.hpp"

namespace simple {

void OptimizerConfig::validate() const {
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("optimizer: momentum must be in [0,1)");
  if (weight_decay < 0.0) throw ConfigError("optimizer: negative weight decay");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("optimizer: betas must be in [0,1)");
  }
  if (eps <= 0.0) throw ConfigError("optimizer: eps must be positive");
}

OptKind opt_kind_from_string(const std::string& s) {
  if (s == "sgd_nesterov") return OptKind::sgd_nesterov;
  if (s == "adamw") return OptKind::adamw;
  throw ConfigError("unknown optimizer kind: " + s);
}

std::string to_string(OptKind k) {
  return k == OptKind::sgd_nesterov ? "sgd_nesterov" : "adamw";
}

Optimizer::Optimizer(OptimizerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Optimizer::ensure_slots(const ParamSet& params) {
  if (!slot1_.empty()) {
    if (slot1_.size() != params.count()) {
      throw ContractError("optimizer: parameter count changed between steps");
    }
    return;
  }
  for (const Param& p : params.items()) {
    slot1_.emplace_back(p.value.size(), 0.0);
    if (cfg_.kind == OptKind::adamw) slot2_.emplace_back(p.value.size(), 0.0);
  }
}

void Optimizer::step(ParamSet& params,
                     const std::vector<std::vector<double>>& grads, double lr) {
  if (grads.size() != params.count()) {
    throw ContractError("optimizer: gradient count does not match parameters");
  }
  ensure_slots(params);
  ++t_;
  const double decay_mul = 1.0 - lr * cfg_.weight_decay;

  for (std::size_t idx = 0; idx < params.count(); ++idx) {
    const Param& p = params.items()[idx];
    const std::vector<double>& g = grads[idx];
    if (g.size() != p.value.size()) {
      throw ShapeError("optimizer: gradient size mismatch for " + p.name);
    }
    std::vector<double> theta = p.value.data();
    if (cfg_.weight_decay != 0.0) {
      for (double& x : theta) x *= decay_mul;
    }
    if (cfg_.kind == OptKind::sgd_nesterov) {
      std::vector<double>& v = slot1_[idx];
      for (std::size_t i = 0; i < theta.size(); ++i) {
        v[i] = cfg_.momentum * v[i] + g[i];
        theta[i] -= lr * (g[i] + cfg_.momentum * v[i]);
      }
    } else {
      std::vector<double>& m = slot1_[idx];
      std::vector<double>& v = slot2_[idx];
      const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
      const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
    params.set(p.name, Tensor::from(p.value.shape(), std::move(theta)));
  }
}

std::vector<std::vector<double>> Optimizer::export_state() const {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < slot1_.size(); ++i) {
    out.push_back(slot1_[i]);
    if (cfg_.kind == OptKind::adamw) out.push_back(slot2_[i]);
  }
  return out;
}

void Optimizer::import_state(const std::vector<std::vector<double>>& state,
                             std::uint64_t steps) {
  const std::size_t per = cfg_.kind == OptKind::adamw ? 2 : 1;
  if (state.size() % per != 0) {
    throw FormatError("optimizer: slot count does not match optimizer kind");
  }
  slot1_.clear();
  slot2_.clear();
  for (std::size_t i = 0; i < state.size(); i += per) {
    slot1_.push_back(state[i]);
    if (per == 2) slot2_.push_back(state[i + 1]);
  }
  t_ = steps;
}

double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double base_lr,
                 double rate) {
  if (total_steps == 0) throw ConfigError("cosine_lr: total_steps must be positive");
  if (step > total_steps) {
    throw ConfigError("cosine_lr: step " + std::to_string(step) +
                      " past total_steps " + std::to_string(total_steps));
  }
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * std::cos(rate * frac);
}

void ema_update(ParamSet& shadow, const ParamSet& params, double decay) {
  if (decay < 0.0 || decay >= 1.0) throw ValueError("ema_update: decay must be in [0,1)");
  if (shadow.count() != params.count()) {
    throw ContractError("ema_update: parameter sets differ in size");
  }
  for (std::size_t i = 0; i < params.count(); ++i) {
    const Param& p = params.items()[i];
    const Param& s = shadow.items()[i];
    if (s.name != p.name || s.value.shape() != p.value.shape()) {
      throw ContractError("ema_update: parameter layout mismatch at " + p.name);
    }
    const std::vector<double>& pv = p.value.data();
    std::vector<double> sv = s.value.data();
    for (std::size_t j = 0; j < sv.size(); ++j) {
      sv[j] = decay * sv[j] + (1.0 - decay) * pv[j];
    }
    shadow.set(s.name, Tensor::from(s.value.shape(), std::move(sv)));
  }
}

}  // namespace simple
