#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "simple/config.hpp"
#include "simple/errors.hpp"
#include "simple/manifest.hpp"

#include "test_support.hpp"

using namespace simple;
namespace fs = std::filesystem;

TEST_CASE("presets are valid and distinct") {
  const TrainConfig toy = preset_config("toy");
  toy.validate();
  CHECK(toy.dataset == "toy");
  const TrainConfig cifar = preset_config("cifar10");
  cifar.validate();
  CHECK(cifar.dataset == "cifar10");
  CHECK(cifar.total_steps > toy.total_steps);
  CHECK_THROWS_AS(preset_config("imagenet"), ConfigError);
}

TEST_CASE("config serializes and parses losslessly") {
  TrainConfig cfg = preset_config("toy");
  cfg.lr = 0.0625;
  cfg.conv_channels = {4, 8, 12};
  cfg.seed = 77;
  cfg.eval_test = false;
  const std::string s = serialize_config(cfg);
  const TrainConfig back = parse_config_json(s);
  CHECK(serialize_config(back) == s);
  CHECK(back.lr == 0.0625);
  CHECK(back.conv_channels == std::vector<std::size_t>{4, 8, 12});
  CHECK(back.seed == 77);
  CHECK(back.eval_test == false);
  CHECK(config_digest(back) == config_digest(cfg));
}

TEST_CASE("parsing rejects unknown keys and wrong types") {
  CHECK_THROWS_AS(parse_config_json("{\"learning_rate\": 0.1}"), ConfigError);
  CHECK_THROWS_AS(parse_config_json("{\"lr\": \"fast\"}"), ConfigError);
  CHECK_THROWS_AS(parse_config_json("{\"seed\": -3}"), ConfigError);
  CHECK_THROWS_AS(parse_config_json("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config_json("[1,2]"), ConfigError);
}

TEST_CASE("parsing layers sparse overrides onto a base") {
  const TrainConfig base = preset_config("cifar10");
  const TrainConfig out = parse_config_json("{\"lr\": 0.1}", base);
  CHECK(out.lr == 0.1);
  CHECK(out.dataset == "cifar10");  // carried through from the base
  CHECK(out.total_steps == base.total_steps);
}

TEST_CASE("config files load with base layering") {
  const fs::path dir = testsupport::fresh_dir("cfg");
  const fs::path p = dir / "run.json";
  {
    std::ofstream f(p);
    f << "{\"tau_c\": 0.8, \"seed\": 123}\n";
  }
  const TrainConfig out = load_config_file(p.string(), preset_config("toy"));
  CHECK(out.tau_c == 0.8);
  CHECK(out.seed == 123);
  CHECK(out.dataset == "toy");
  CHECK_THROWS_AS(load_config_file((dir / "missing.json").string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("validate rejects out-of-range settings") {
  auto broke = [](auto&& mutate) {
    TrainConfig c = preset_config("toy");
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(broke([](TrainConfig& c) { c.tau_c = 1.5; }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(broke([](TrainConfig& c) { c.tau_s = 0.0; }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(broke([](TrainConfig& c) { c.temperature = 0.0; }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(broke([](TrainConfig& c) { c.lambda_u = -1.0; }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(broke([](TrainConfig& c) { c.k_weak = 0; }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(broke([](TrainConfig& c) { c.batch_size = 0; }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(broke([](TrainConfig& c) { c.total_steps = 0; }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(broke([](TrainConfig& c) { c.ema_decay = 1.0; }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(broke([](TrainConfig& c) { c.optimizer = "sgd"; }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(broke([](TrainConfig& c) { c.dataset = "mnist"; }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(
      broke([](TrainConfig& c) { c.dataset = "cifar10"; }).validate(),
      ConfigError);  // cifar10 requires data_dir
}

TEST_CASE("digest is sensitive to trajectory-relevant fields") {
  const TrainConfig base = preset_config("toy");
  const std::uint64_t d0 = config_digest(base);
  TrainConfig c1 = base;
  c1.seed = base.seed + 1;
  CHECK(config_digest(c1) != d0);
  TrainConfig c2 = base;
  c2.tau_c = 0.9;
  CHECK(config_digest(c2) != d0);
  TrainConfig c3 = base;
  c3.lambda_p = 0.0;
  CHECK(config_digest(c3) != d0);
  CHECK(config_digest(base) == d0);  // stable across calls
}

TEST_CASE("manifest round-trips losslessly") {
  RunManifest m;
  m.config = preset_config("toy");
  m.config.seed = 31;
  m.tool_version = "0.1.0";
  m.started_at = "2024-05-01T10:00:00Z";
  m.finished_at = "2024-05-01T10:05:00Z";
  m.metrics_csv = "metrics.csv";
  m.checkpoint_dir = "checkpoints";
  const std::string s = serialize_manifest(m);
  const RunManifest back = parse_manifest_json(s);
  CHECK(serialize_manifest(back) == s);
  CHECK(back.config.seed == 31);
  CHECK(back.tool_version == "0.1.0");
  CHECK(back.started_at == m.started_at);
  CHECK(back.finished_at == m.finished_at);
  CHECK(config_digest(back.config) == config_digest(m.config));

  const fs::path dir = testsupport::fresh_dir("manifest");
  const fs::path p = dir / "run.json";
  save_manifest(p.string(), m);
  const RunManifest loaded = load_manifest_file(p.string());
  CHECK(serialize_manifest(loaded) == s);
  CHECK_THROWS_AS(load_manifest_file((dir / "nope.json").string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("manifest parsing verifies the embedded digest") {
  RunManifest m;
  m.config = preset_config("toy");
  m.tool_version = "0.1.0";
  m.started_at = "2024-05-01T10:00:00Z";
  std::string s = serialize_manifest(m);
  // tamper with the config without updating the digest
  const std::string from = "\"seed\": 1";
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  s.replace(pos, from.size(), "\"seed\": 2");
  CHECK_THROWS_AS(parse_manifest_json(s), ConfigError);
  CHECK_THROWS_AS(parse_manifest_json("{}"), ConfigError);
  CHECK_THROWS_AS(parse_manifest_json("nope"), ConfigError);
}
