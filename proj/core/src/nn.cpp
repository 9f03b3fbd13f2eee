#include "simple/nn.hpp"

#include <cmath>

#include "simple/errors.hpp"
#include "simple/ops.hpp"

namespace simple {

void ParamSet::add(std::string name, Tensor value) {
  if (has(name)) throw ContractError("ParamSet::add: duplicate name " + name);
  if (!value.defined()) throw ContractError("ParamSet::add: undefined tensor for " + name);
  items_.push_back(Param{std::move(name), std::move(value)});
}

bool ParamSet::has(const std::string& name) const {
  for (const Param& p : items_) {
    if (p.name == name) return true;
  }
  return false;
}

const Tensor& ParamSet::at(const std::string& name) const {
  for (const Param& p : items_) {
    if (p.name == name) return p.value;
  }
  throw ContractError("ParamSet::at: no parameter named " + name);
}

void ParamSet::set(const std::string& name, Tensor value) {
  for (Param& p : items_) {
    if (p.name == name) {
      if (value.shape() != p.value.shape()) {
        throw ShapeError("ParamSet::set: shape change for " + name + ": " +
                         shape_str(p.value.shape()) + " -> " +
                         shape_str(value.shape()));
      }
      p.value = std::move(value);
      return;
    }
  }
  throw ContractError("ParamSet::set: no parameter named " + name);
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const Param& p : items_) n += p.value.size();
  return n;
}

std::size_t BackboneConfig::pooled_size() const {
  std::size_t s = image_size;
  for (std::size_t i = 0; i < conv_channels.size(); ++i) s /= 2;
  return s;
}

std::size_t BackboneConfig::flat_features() const {
  return conv_channels.empty()
             ? in_channels * image_size * image_size
             : conv_channels.back() * pooled_size() * pooled_size();
}

void BackboneConfig::validate() const {
  if (in_channels == 0 || image_size == 0 || hidden == 0 || num_classes < 2) {
    throw ConfigError("backbone: channels, image size, hidden width must be "
                      "positive and num_classes >= 2");
  }
  std::size_t s = image_size;
  for (std::size_t i = 0; i < conv_channels.size(); ++i) {
    if (conv_channels[i] == 0) throw ConfigError("backbone: zero conv channels");
    if (s % 2 != 0) {
      throw ConfigError("backbone: image size " + std::to_string(image_size) +
                        " does not survive " +
                        std::to_string(conv_channels.size()) + " pooling stages");
    }
    s /= 2;
  }
}

namespace {

Tensor he_normal(std::vector<std::size_t> shape, std::size_t fan_in,
                 RngStream& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.normal(0.0, stddev);
  return Tensor::from(std::move(shape), std::move(v));
}

}  // namespace

ParamSet init_backbone(const BackboneConfig& cfg, RngStream& rng) {
  cfg.validate();
  ParamSet ps;
  std::size_t c_in = cfg.in_channels;
  for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
    const std::size_t c_out = cfg.conv_channels[i];
    const std::string base = "conv" + std::to_string(i + 1);
    ps.add(base + ".w", he_normal({c_out, c_in, 3, 3}, c_in * 9, rng));
    ps.add(base + ".b", Tensor::zeros({c_out}));
    c_in = c_out;
  }
  const std::size_t flat = cfg.flat_features();
  ps.add("fc1.w", he_normal({flat, cfg.hidden}, flat, rng));
  ps.add("fc1.b", Tensor::zeros({cfg.hidden}));
  ps.add("fc2.w", he_normal({cfg.hidden, cfg.num_classes}, cfg.hidden, rng));
  ps.add("fc2.b", Tensor::zeros({cfg.num_classes}));
  return ps;
}

ParamSet watch_all(Tape& tape, const ParamSet& params) {
  ParamSet out;
  for (const Param& p : params.items()) out.add(p.name, tape.watch(p.value));
  return out;
}

Tensor backbone_forward(const BackboneConfig& cfg, const ParamSet& params,
                        const Tensor& x) {
  if (x.ndim() != 4 || x.shape()[1] != cfg.in_channels ||
      x.shape()[2] != cfg.image_size || x.shape()[3] != cfg.image_size) {
    throw ShapeError("backbone_forward: input " + shape_str(x.shape()) +
                     " does not match configured geometry");
  }
  Tensor h = x;
  for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
    const std::string base = "conv" + std::to_string(i + 1);
    h = conv2d(h, params.at(base + ".w"), 1, 1);
    h = add_chanvec(h, params.at(base + ".b"));
    h = relu(h);
    h = maxpool2x2(h);
  }
  const std::size_t b = x.shape()[0];
  h = reshape(h, {b, cfg.flat_features()});
  h = relu(add_rowvec(matmul(h, params.at("fc1.w")), params.at("fc1.b")));
  return add_rowvec(matmul(h, params.at("fc2.w")), params.at("fc2.b"));
}

}  // namespace simple
