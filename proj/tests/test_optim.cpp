#include <doctest.h>

#include <cmath>

#include "simple/errors.hpp"
#include "simple/nn.hpp"
#include "simple/optim.hpp"

using namespace simple;

namespace {

ParamSet one_param(double v) {
  ParamSet ps;
  ps.add("w", Tensor::from({1}, {v}));
  return ps;
}

}  // namespace

TEST_CASE("sgd_nesterov first step matches the update rule by hand") {
  OptimizerConfig cfg;
  cfg.kind = OptKind::sgd_nesterov;
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.0;
  Optimizer opt(cfg);
  ParamSet ps = one_param(1.0);
  opt.step(ps, {{0.5}}, 0.1);
  // v = 0.5; theta = 1 - 0.1*(0.5 + 0.9*0.5)
  CHECK(ps.at("w").at(0) == doctest::Approx(0.905).epsilon(1e-15));
  opt.step(ps, {{0.5}}, 0.1);
  // v = 0.9*0.5 + 0.5 = 0.95; theta -= 0.1*(0.5 + 0.855)
  CHECK(ps.at("w").at(0) == doctest::Approx(0.905 - 0.1355).epsilon(1e-12));
}

TEST_CASE("decoupled weight decay shrinks before the gradient step") {
  OptimizerConfig cfg;
  cfg.kind = OptKind::sgd_nesterov;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.1;
  Optimizer opt(cfg);
  ParamSet ps = one_param(1.0);
  opt.step(ps, {{0.0}}, 0.1);
  // zero gradient: only the decay applies, theta = 1*(1 - 0.1*0.1)
  CHECK(ps.at("w").at(0) == doctest::Approx(0.99).epsilon(1e-15));
}

TEST_CASE("adamw first step matches the bias-corrected closed form") {
  OptimizerConfig cfg;
  cfg.kind = OptKind::adamw;
  cfg.beta1 = 0.9;
  cfg.beta2 = 0.999;
  cfg.eps = 1e-8;
  cfg.weight_decay = 0.0;
  Optimizer opt(cfg);
  ParamSet ps = one_param(1.0);
  const double g = 0.5, lr = 0.01;
  opt.step(ps, {{g}}, lr);
  // t=1: mhat = g, vhat = g^2, step = lr * g / (|g| + eps)
  const double want = 1.0 - lr * g / (std::abs(g) + cfg.eps);
  CHECK(ps.at("w").at(0) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("optimizer state round-trips through export and import") {
  OptimizerConfig cfg;
  cfg.kind = OptKind::sgd_nesterov;
  Optimizer a(cfg);
  ParamSet pa = one_param(1.0);
  a.step(pa, {{0.3}}, 0.05);
  a.step(pa, {{-0.2}}, 0.05);

  Optimizer b(cfg);
  ParamSet pb;
  pb.add("w", pa.at("w"));
  b.import_state(a.export_state(), a.steps_taken());
  a.step(pa, {{0.7}}, 0.05);
  b.step(pb, {{0.7}}, 0.05);
  CHECK(pa.at("w").at(0) == pb.at("w").at(0));
}

TEST_CASE("gradient slot alignment is enforced") {
  Optimizer opt(OptimizerConfig{});
  ParamSet ps = one_param(1.0);
  CHECK_THROWS_AS(opt.step(ps, {{0.1, 0.2}}, 0.1), ShapeError);
  CHECK_THROWS_AS(opt.step(ps, {}, 0.1), ContractError);
}

TEST_CASE("cosine schedule endpoints and bounds") {
  CHECK(cosine_lr(0, 100, 0.03) == 0.03);
  CHECK(cosine_lr(100, 100, 0.03) ==
        doctest::Approx(0.03 * std::cos(kDefaultCosineRate)).epsilon(1e-15));
  // strictly decreasing along the schedule
  double prev = cosine_lr(0, 100, 0.03);
  for (std::uint64_t s = 1; s <= 100; ++s) {
    const double cur = cosine_lr(s, 100, 0.03);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS_AS(cosine_lr(0, 0, 0.03), ConfigError);
  CHECK_THROWS_AS(cosine_lr(101, 100, 0.03), ConfigError);
}

TEST_CASE("ema_update interpolates one step") {
  ParamSet shadow = one_param(0.0);
  ParamSet params = one_param(1.0);
  ema_update(shadow, params, 0.99);
  CHECK(shadow.at("w").at(0) == doctest::Approx(0.01).epsilon(1e-15));
  ParamSet mismatched;
  mismatched.add("other", Tensor::from({1}, {0.0}));
  CHECK_THROWS_AS(ema_update(mismatched, params, 0.99), ContractError);
}

TEST_CASE("optimizer kind parses from strings") {
  CHECK(opt_kind_from_string("sgd_nesterov") == OptKind::sgd_nesterov);
  CHECK(opt_kind_from_string("adamw") == OptKind::adamw);
  CHECK_THROWS_AS(opt_kind_from_string("rmsprop"), ConfigError);
  CHECK(to_string(OptKind::adamw) == "adamw");
}
