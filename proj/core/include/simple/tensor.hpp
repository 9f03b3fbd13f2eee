#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace simple {

class Tape;

// Dense row-major tensor of doubles with value-immutable storage. Copying a
// Tensor copies a shared_ptr, never the data. A Tensor is either detached
// (tape_ == nullptr) or tracked as one node of a Tape.
class Tensor {
 public:
  Tensor() = default;

  // Detached constructors. All values must be finite.
  static Tensor from(std::vector<std::size_t> shape, std::vector<double> data);
  // Detached tensor sharing already-validated storage; no finiteness re-check.
  static Tensor from_shared(std::vector<std::size_t> shape,
                            std::shared_ptr<const std::vector<double>> data);
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double value);
  static Tensor scalar(double value);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t size() const;
  bool defined() const { return static_cast<bool>(store_); }

  const std::vector<double>& data() const;
  // Underlying storage handle, for backward closures that must keep inputs
  // alive past the forward call.
  std::shared_ptr<const std::vector<double>> shared_data() const { return store_; }
  double at(std::size_t flat) const;
  // Requires size() == 1.
  double item() const;

  bool tracked() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

  // Same storage, no tape. Gradients do not flow through the result.
  Tensor detached() const;

 private:
  friend class Tape;

  std::vector<std::size_t> shape_;
  std::shared_ptr<const std::vector<double>> store_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);

// Backward callback for one recorded op. `g_out` is the gradient of the loss
// w.r.t. this node's output (length = node size). `g_parents` holds one
// accumulation buffer per recorded parent, in recording order; entries are
// nullptr for parents recorded as detached (node -1). Implementations must
// ADD into the buffers, never assign, so fan-out accumulates correctly.
using BackwardFn =
    std::function<void(const double* g_out, const std::vector<double*>& g_parents)>;

class GradientMap;
GradientMap backward(const Tensor& loss);

// Append-only record of operations. Parents always precede consumers, so a
// single reverse sweep is a valid reverse-topological order.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Register a detached tensor as a differentiable leaf of this tape.
  Tensor watch(const Tensor& t);

  // Record an op node. `parents` entries are node indices on this tape, or
  // -1 for inputs that gradients should not flow into. `op` names the op for
  // error messages. Output values must already be finite-checked by the op.
  Tensor record(std::vector<std::size_t> shape,
                std::shared_ptr<const std::vector<double>> values,
                std::vector<int> parents, BackwardFn backward, const char* op);

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  friend class GradientMap;
  friend GradientMap backward(const Tensor& loss);

  struct Node {
    std::size_t size;
    std::vector<int> parents;
    BackwardFn backward;  // empty for leaves
    const char* op;
  };
  std::vector<Node> nodes_;
};

// Gradients produced by one backward() call, keyed by tape node. Lookup is
// valid for any tracked tensor the loss depends on.
class GradientMap {
 public:
  const std::vector<double>& at(const Tensor& t) const;
  bool has(const Tensor& t) const;

 private:
  friend GradientMap backward(const Tensor& loss);
  const Tape* tape_ = nullptr;
  std::vector<std::vector<double>> grads_;  // indexed by node; empty if unreached
};

// Reverse-mode sweep from a tracked scalar loss. Throws ContractError if the
// loss is detached or not a scalar.
GradientMap backward(const Tensor& loss);

}  // namespace simple
