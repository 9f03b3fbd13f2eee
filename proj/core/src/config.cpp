#include "simple/config.hpp"

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "simple/errors.hpp"

namespace simple {

using nlohmann::json;

void TrainConfig::validate() const {
  if (dataset != "toy" && dataset != "cifar10") {
    throw ConfigError("dataset must be \"toy\" or \"cifar10\", got \"" + dataset + "\"");
  }
  if (dataset == "cifar10" && data_dir.empty()) {
    throw ConfigError("cifar10 dataset needs data_dir");
  }
  if (toy_classes < 2 || toy_classes > 255) {
    throw ConfigError("toy_classes must be in [2, 255]");
  }
  if (toy_per_class == 0 || toy_test_per_class == 0) {
    throw ConfigError("toy per-class counts must be positive");
  }
  if (labels_per_class == 0) throw ConfigError("labels_per_class must be >= 1");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (k_weak == 0) throw ConfigError("k_weak must be >= 1");
  if (k_strong == 0) throw ConfigError("k_strong must be >= 1");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  thresholds().validate();
  loss_weights().validate();
  optimizer_config().validate();
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(cosine_rate >= 0.0 && cosine_rate <= std::numbers::pi / 2.0)) {
    throw ConfigError("cosine_rate must be in [0, pi/2]");
  }
  // ema_update itself rejects decay 1 (the shadow would never move)
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) {
    throw ConfigError("ema_decay must be in [0, 1)");
  }
  if (total_steps == 0) throw ConfigError("total_steps must be >= 1");
  if (eval_every == 0) throw ConfigError("eval_every must be >= 1");
  if (conv_channels.empty()) throw ConfigError("conv_channels must be nonempty");
  if (hidden == 0) throw ConfigError("hidden must be >= 1");
  // full divisibility constraints
  backbone(dataset == "toy" ? 3 : 3,
           dataset == "toy" ? toy_classes : 10)
      .validate();
}

BackboneConfig TrainConfig::backbone(std::size_t in_channels,
                                     std::size_t num_classes) const {
  BackboneConfig b;
  b.in_channels = in_channels;
  b.image_size = image_size;
  b.conv_channels = conv_channels;
  b.hidden = hidden;
  b.num_classes = num_classes;
  return b;
}

OptimizerConfig TrainConfig::optimizer_config() const {
  OptimizerConfig o;
  o.kind = opt_kind_from_string(optimizer);
  o.momentum = momentum;
  o.weight_decay = weight_decay;
  o.beta1 = beta1;
  o.beta2 = beta2;
  o.eps = adam_eps;
  return o;
}

TrainConfig preset_config(const std::string& name) {
  if (name == "toy") {
    return TrainConfig{};
  }
  if (name == "cifar10") {
    TrainConfig c;
    c.dataset = "cifar10";
    c.data_dir = "data/cifar-10-batches-bin";
    c.image_size = 32;
    c.labels_per_class = 400;
    c.validation_size = 5000;
    c.conv_channels = {16, 32};
    c.hidden = 64;
    c.batch_size = 64;
    c.k_weak = 7;
    c.k_strong = 1;
    c.lambda_u = 75.0;
    c.lambda_p = 75.0;
    c.lr = 0.03;
    c.ema_decay = 0.999;
    c.total_steps = 50000;
    c.eval_every = 500;
    return c;
  }
  throw ConfigError("unknown preset \"" + name + "\" (have: toy, cifar10)");
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "dataset",        "data_dir",       "toy_classes",
      "toy_per_class",  "toy_test_per_class", "image_size",
      "labels_per_class", "validation_size", "conv_channels",
      "hidden",         "batch_size",     "k_weak",
      "k_strong",       "temperature",    "tau_c",
      "tau_s",          "lambda_u",       "lambda_p",
      "optimizer",      "lr",             "momentum",
      "weight_decay",   "beta1",          "beta2",
      "adam_eps",       "cosine_rate",    "ema_decay",
      "total_steps",    "eval_every",     "seed",
      "eval_test",
  };
  return keys;
}

void want(bool ok, const char* key, const char* type) {
  if (!ok) {
    throw ConfigError(std::string("config key \"") + key + "\" must be " + type);
  }
}

void get_size(const json& j, const char* key, std::size_t& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  want(v.is_number_integer() || v.is_number_unsigned(), key, "a nonnegative integer");
  want(!v.is_number_integer() || v.get<long long>() >= 0, key, "a nonnegative integer");
  out = v.get<std::size_t>();
}

void get_u64(const json& j, const char* key, std::uint64_t& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  want(v.is_number_integer() || v.is_number_unsigned(), key, "a nonnegative integer");
  want(!v.is_number_integer() || v.get<long long>() >= 0, key, "a nonnegative integer");
  out = v.get<std::uint64_t>();
}

void get_f64(const json& j, const char* key, double& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  want(v.is_number(), key, "a number");
  out = v.get<double>();
}

void get_str(const json& j, const char* key, std::string& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  want(v.is_string(), key, "a string");
  out = v.get<std::string>();
}

void get_bool(const json& j, const char* key, bool& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  want(v.is_boolean(), key, "a boolean");
  out = v.get<bool>();
}

}  // namespace

std::string serialize_config(const TrainConfig& cfg) {
  json j;
  j["dataset"] = cfg.dataset;
  j["data_dir"] = cfg.data_dir;
  j["toy_classes"] = cfg.toy_classes;
  j["toy_per_class"] = cfg.toy_per_class;
  j["toy_test_per_class"] = cfg.toy_test_per_class;
  j["image_size"] = cfg.image_size;
  j["labels_per_class"] = cfg.labels_per_class;
  j["validation_size"] = cfg.validation_size;
  j["conv_channels"] = cfg.conv_channels;
  j["hidden"] = cfg.hidden;
  j["batch_size"] = cfg.batch_size;
  j["k_weak"] = cfg.k_weak;
  j["k_strong"] = cfg.k_strong;
  j["temperature"] = cfg.temperature;
  j["tau_c"] = cfg.tau_c;
  j["tau_s"] = cfg.tau_s;
  j["lambda_u"] = cfg.lambda_u;
  j["lambda_p"] = cfg.lambda_p;
  j["optimizer"] = cfg.optimizer;
  j["lr"] = cfg.lr;
  j["momentum"] = cfg.momentum;
  j["weight_decay"] = cfg.weight_decay;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["cosine_rate"] = cfg.cosine_rate;
  j["ema_decay"] = cfg.ema_decay;
  j["total_steps"] = cfg.total_steps;
  j["eval_every"] = cfg.eval_every;
  j["seed"] = cfg.seed;
  j["eval_test"] = cfg.eval_test;
  // json objects iterate in key order, so dump() is canonical.
  return j.dump(2);
}

TrainConfig parse_config_json(const std::string& json_text,
                              const TrainConfig& base) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  for (const auto& item : j.items()) {
    if (known_keys().find(item.key()) == known_keys().end()) {
      throw ConfigError("unknown config key \"" + item.key() + "\"");
    }
  }

  TrainConfig cfg = base;
  get_str(j, "dataset", cfg.dataset);
  get_str(j, "data_dir", cfg.data_dir);
  get_size(j, "toy_classes", cfg.toy_classes);
  get_size(j, "toy_per_class", cfg.toy_per_class);
  get_size(j, "toy_test_per_class", cfg.toy_test_per_class);
  get_size(j, "image_size", cfg.image_size);
  get_size(j, "labels_per_class", cfg.labels_per_class);
  get_size(j, "validation_size", cfg.validation_size);
  if (j.contains("conv_channels")) {
    const auto& v = j.at("conv_channels");
    want(v.is_array(), "conv_channels", "an array of positive integers");
    std::vector<std::size_t> ch;
    for (const auto& e : v) {
      want(e.is_number_integer() || e.is_number_unsigned(), "conv_channels",
           "an array of positive integers");
      want(!e.is_number_integer() || e.get<long long>() > 0, "conv_channels",
           "an array of positive integers");
      ch.push_back(e.get<std::size_t>());
    }
    cfg.conv_channels = std::move(ch);
  }
  get_size(j, "hidden", cfg.hidden);
  get_size(j, "batch_size", cfg.batch_size);
  get_size(j, "k_weak", cfg.k_weak);
  get_size(j, "k_strong", cfg.k_strong);
  get_f64(j, "temperature", cfg.temperature);
  get_f64(j, "tau_c", cfg.tau_c);
  get_f64(j, "tau_s", cfg.tau_s);
  get_f64(j, "lambda_u", cfg.lambda_u);
  get_f64(j, "lambda_p", cfg.lambda_p);
  get_str(j, "optimizer", cfg.optimizer);
  get_f64(j, "lr", cfg.lr);
  get_f64(j, "momentum", cfg.momentum);
  get_f64(j, "weight_decay", cfg.weight_decay);
  get_f64(j, "beta1", cfg.beta1);
  get_f64(j, "beta2", cfg.beta2);
  get_f64(j, "adam_eps", cfg.adam_eps);
  get_f64(j, "cosine_rate", cfg.cosine_rate);
  get_f64(j, "ema_decay", cfg.ema_decay);
  get_u64(j, "total_steps", cfg.total_steps);
  get_u64(j, "eval_every", cfg.eval_every);
  get_u64(j, "seed", cfg.seed);
  get_bool(j, "eval_test", cfg.eval_test);
  return cfg;
}

TrainConfig load_config_file(const std::string& path, const TrainConfig& base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_json(ss.str(), base);
}

std::uint64_t config_digest(const TrainConfig& cfg) {
  return fnv1a64(serialize_config(cfg));
}

}  // namespace simple
