#include <doctest.h>

#include "simple/errors.hpp"
#include "simple/nn.hpp"
#include "simple/ops.hpp"
#include "simple/rng.hpp"
#include "simple/tensor.hpp"

using namespace simple;

namespace {

BackboneConfig small_cfg() {
  BackboneConfig c;
  c.in_channels = 3;
  c.image_size = 16;
  c.conv_channels = {4, 8};
  c.hidden = 10;
  c.num_classes = 5;
  return c;
}

}  // namespace

TEST_CASE("ParamSet guards names and shapes") {
  ParamSet ps;
  ps.add("w", Tensor::zeros({2, 2}));
  CHECK_THROWS_AS(ps.add("w", Tensor::zeros({2, 2})), ContractError);
  CHECK_THROWS_AS((void)ps.at("missing"), ContractError);
  CHECK_THROWS_AS(ps.set("w", Tensor::zeros({3})), ShapeError);
  ps.set("w", Tensor::full({2, 2}, 1.0));
  CHECK(ps.at("w").at(0) == 1.0);
  CHECK(ps.count() == 1);
  CHECK(ps.scalar_count() == 4);
}

TEST_CASE("init_backbone emits the documented parameter list") {
  RngStream rng = RngStream::derive(1, "init");
  const BackboneConfig cfg = small_cfg();
  const ParamSet ps = init_backbone(cfg, rng);
  const auto& items = ps.items();
  REQUIRE(items.size() == 8);
  CHECK(items[0].name == "conv1.w");
  CHECK(items[0].value.shape() == std::vector<std::size_t>{4, 3, 3, 3});
  CHECK(items[1].name == "conv1.b");
  CHECK(items[2].name == "conv2.w");
  CHECK(items[2].value.shape() == std::vector<std::size_t>{8, 4, 3, 3});
  CHECK(items[4].name == "fc1.w");
  // two pooling stages: 16 -> 8 -> 4
  CHECK(items[4].value.shape() == std::vector<std::size_t>{8 * 4 * 4, 10});
  CHECK(items[6].name == "fc2.w");
  CHECK(items[6].value.shape() == std::vector<std::size_t>{10, 5});
  CHECK(items[7].value.shape() == std::vector<std::size_t>{5});
  // biases start at zero
  CHECK(items[1].value.at(0) == 0.0);
  CHECK(items[5].value.at(0) == 0.0);
}

TEST_CASE("init_backbone is deterministic per stream state") {
  RngStream r1 = RngStream::derive(9, "init");
  RngStream r2 = RngStream::derive(9, "init");
  const ParamSet a = init_backbone(small_cfg(), r1);
  const ParamSet b = init_backbone(small_cfg(), r2);
  for (std::size_t i = 0; i < a.count(); ++i) {
    CHECK(a.items()[i].value.data() == b.items()[i].value.data());
  }
}

TEST_CASE("backbone validate rejects impossible pooling") {
  BackboneConfig c = small_cfg();
  c.image_size = 18;  // 18 -> 9, second stage cannot pool
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("backbone_forward maps batches to logits deterministically") {
  RngStream rng = RngStream::derive(5, "init");
  const BackboneConfig cfg = small_cfg();
  const ParamSet ps = init_backbone(cfg, rng);
  RngStream data = RngStream::derive(5, "data");
  std::vector<double> v(2 * 3 * 16 * 16);
  for (double& x : v) x = data.uniform();
  const Tensor x = Tensor::from({2, 3, 16, 16}, v);
  const Tensor y1 = backbone_forward(cfg, ps, x);
  const Tensor y2 = backbone_forward(cfg, ps, x);
  CHECK(y1.shape() == std::vector<std::size_t>{2, 5});
  CHECK(y1.data() == y2.data());
  CHECK_THROWS_AS(backbone_forward(cfg, ps, Tensor::zeros({2, 3, 8, 8})),
                  ShapeError);
}

TEST_CASE("watch_all produces a tracked view in the same order") {
  RngStream rng = RngStream::derive(5, "init");
  const BackboneConfig cfg = small_cfg();
  const ParamSet ps = init_backbone(cfg, rng);
  Tape tape;
  const ParamSet w = watch_all(tape, ps);
  REQUIRE(w.count() == ps.count());
  for (std::size_t i = 0; i < w.count(); ++i) {
    CHECK(w.items()[i].name == ps.items()[i].name);
    CHECK(w.items()[i].value.tracked());
    CHECK(w.items()[i].value.data() == ps.items()[i].value.data());
  }
}

TEST_CASE("gradients reach every backbone parameter") {
  RngStream rng = RngStream::derive(6, "init");
  BackboneConfig cfg = small_cfg();
  cfg.conv_channels = {4};  // keep it quick
  const ParamSet ps = init_backbone(cfg, rng);
  std::vector<double> v(1 * 3 * 16 * 16);
  for (double& x : v) x = rng.uniform();
  const Tensor x = Tensor::from({1, 3, 16, 16}, v);
  Tape tape;
  const ParamSet w = watch_all(tape, ps);
  const GradientMap g = backward(mean(backbone_forward(cfg, w, x)));
  for (const Param& p : w.items()) {
    REQUIRE(g.has(p.value));
    double norm = 0.0;
    for (double gv : g.at(p.value)) norm += gv * gv;
    // fc2 bias gradient is mean-of-one-hot rows, never all zero
    if (p.name == "fc2.b") CHECK(norm > 0.0);
  }
}
