#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "simple/rng.hpp"
#include "simple/tensor.hpp"

namespace simple {

// One named parameter tensor. Values are detached in the persistent model
// state; watch_all produces a tape-tracked view for a training step.
struct Param {
  std::string name;
  Tensor value;
};

// Ordered, name-addressable parameter collection. Order is the declaration
// order of init_backbone and is part of the checkpoint format.
class ParamSet {
 public:
  void add(std::string name, Tensor value);
  bool has(const std::string& name) const;
  const Tensor& at(const std::string& name) const;
  void set(const std::string& name, Tensor value);

  const std::vector<Param>& items() const { return items_; }
  std::size_t count() const { return items_.size(); }
  std::size_t scalar_count() const;

 private:
  std::vector<Param> items_;
};

// Small convnet: repeated [conv3x3 pad1, relu, maxpool2x2] stages, then one
// hidden dense layer with relu, then a dense classifier head.
struct BackboneConfig {
  std::size_t in_channels = 3;
  std::size_t image_size = 32;
  std::vector<std::size_t> conv_channels = {16, 32};
  std::size_t hidden = 64;
  std::size_t num_classes = 10;

  // Side of the spatial map after all pooling stages.
  std::size_t pooled_size() const;
  std::size_t flat_features() const;
  void validate() const;
};

// He-initialized parameters: weights ~ N(0, sqrt(2/fan_in)), biases zero.
// Consumes `rng` in declaration order, so one seed fixes the full init.
ParamSet init_backbone(const BackboneConfig& cfg, RngStream& rng);

// Tracked view of every parameter on `tape`, same names and order.
ParamSet watch_all(Tape& tape, const ParamSet& params);

// x [b,c,h,w] -> logits [b,num_classes]. Differentiable when `params` holds
// tracked tensors.
Tensor backbone_forward(const BackboneConfig& cfg, const ParamSet& params,
                        const Tensor& x);

}  // namespace simple
