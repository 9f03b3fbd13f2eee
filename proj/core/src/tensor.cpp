#include "simple/tensor.hpp"

#include <cmath>
#include <sstream>

#include "simple/errors.hpp"

namespace simple {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw ValueError(std::string(what) + ": non-finite value " +
                       std::to_string(x));
    }
  }
}

}  // namespace

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> data) {
  if (shape_size(shape) != data.size()) {
    throw ShapeError("Tensor::from: shape " + shape_str(shape) + " wants " +
                     std::to_string(shape_size(shape)) + " values, got " +
                     std::to_string(data.size()));
  }
  check_finite(data, "Tensor::from");
  Tensor t;
  t.shape_ = std::move(shape);
  t.store_ = std::make_shared<const std::vector<double>>(std::move(data));
  return t;
}

Tensor Tensor::from_shared(std::vector<std::size_t> shape,
                           std::shared_ptr<const std::vector<double>> data) {
  if (!data || shape_size(shape) != data->size()) {
    throw ShapeError("Tensor::from_shared: shape " + shape_str(shape) +
                     " does not match storage");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.store_ = std::move(data);
  return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::size_t n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  std::size_t n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

std::size_t Tensor::size() const { return store_ ? store_->size() : 0; }

const std::vector<double>& Tensor::data() const {
  if (!store_) throw ContractError("Tensor::data on a default-constructed tensor");
  return *store_;
}

double Tensor::at(std::size_t flat) const {
  const auto& d = data();
  if (flat >= d.size()) {
    throw ShapeError("Tensor::at: index " + std::to_string(flat) +
                     " out of range for size " + std::to_string(d.size()));
  }
  return d[flat];
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("Tensor::item on tensor of shape " + shape_str(shape_));
  }
  return data()[0];
}

Tensor Tensor::detached() const {
  Tensor t;
  t.shape_ = shape_;
  t.store_ = store_;
  return t;
}

Tensor Tape::watch(const Tensor& t) {
  if (!t.defined()) throw ContractError("Tape::watch on an undefined tensor");
  if (t.tracked()) {
    if (t.tape() != this) throw ContractError("Tape::watch: tensor belongs to another tape");
    return t;
  }
  Tensor out;
  out.shape_ = t.shape_;
  out.store_ = t.store_;
  out.tape_ = this;
  out.node_ = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{t.size(), {}, BackwardFn{}, "leaf"});
  return out;
}

Tensor Tape::record(std::vector<std::size_t> shape,
                    std::shared_ptr<const std::vector<double>> values,
                    std::vector<int> parents, BackwardFn backward,
                    const char* op) {
  if (!values || shape_size(shape) != values->size()) {
    throw ShapeError(std::string(op) + ": recorded values do not match shape " +
                     shape_str(shape));
  }
  for (int p : parents) {
    if (p != -1 && (p < 0 || p >= static_cast<int>(nodes_.size()))) {
      throw ContractError(std::string(op) + ": parent node out of range");
    }
  }
  Tensor out;
  out.shape_ = std::move(shape);
  out.store_ = std::move(values);
  out.tape_ = this;
  out.node_ = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{out.size(), std::move(parents), std::move(backward), op});
  return out;
}

const std::vector<double>& GradientMap::at(const Tensor& t) const {
  if (!t.tracked()) throw ContractError("GradientMap::at: tensor is detached");
  if (t.tape() != tape_) throw ContractError("GradientMap::at: tensor belongs to another tape");
  std::size_t n = static_cast<std::size_t>(t.node());
  if (n >= grads_.size() || grads_[n].empty()) {
    throw ContractError("GradientMap::at: loss does not depend on this tensor");
  }
  return grads_[n];
}

bool GradientMap::has(const Tensor& t) const {
  if (!t.tracked() || t.tape() != tape_) return false;
  std::size_t n = static_cast<std::size_t>(t.node());
  return n < grads_.size() && !grads_[n].empty();
}

GradientMap backward(const Tensor& loss) {
  if (!loss.tracked()) throw ContractError("backward: loss is not on a tape");
  if (loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        shape_str(loss.shape()));
  }
  Tape& tape = *loss.tape();
  const int root = loss.node();
  if (root < 0 || root >= static_cast<int>(tape.nodes_.size())) {
    throw ContractError("backward: loss node is not on its tape");
  }

  // Mark nodes the loss depends on. Parents precede consumers, so one
  // descending pass settles reachability.
  std::vector<char> needed(static_cast<std::size_t>(root) + 1, 0);
  needed[root] = 1;
  for (int i = root; i >= 0; --i) {
    if (!needed[i]) continue;
    for (int p : tape.nodes_[i].parents) {
      if (p != -1) needed[p] = 1;
    }
  }

  GradientMap gm;
  gm.tape_ = &tape;
  gm.grads_.resize(static_cast<std::size_t>(root) + 1);
  for (int i = 0; i <= root; ++i) {
    if (needed[i]) gm.grads_[i].assign(tape.nodes_[i].size, 0.0);
  }
  gm.grads_[root][0] = 1.0;

  std::vector<double*> parent_bufs;
  for (int i = root; i >= 0; --i) {
    if (!needed[i]) continue;
    const Tape::Node& node = tape.nodes_[i];
    if (!node.backward) continue;
    parent_bufs.clear();
    for (int p : node.parents) {
      parent_bufs.push_back(p == -1 ? nullptr : gm.grads_[p].data());
    }
    node.backward(gm.grads_[i].data(), parent_bufs);
  }
  return gm;
}

}  // namespace simple
