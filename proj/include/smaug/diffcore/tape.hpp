#pragma once

#include <functional>
#include <span>
#include <vector>

#include "smaug/diffcore/tensor.hpp"

namespace smaug::diff {

/// Lazily allocated per-node gradient accumulators used during backward.
class GradBuffers {
 public:
  explicit GradBuffers(std::vector<std::size_t> sizes);
  /// Accumulator for `id`, zero-initialised on first access.
  std::vector<double>& at(NodeId id);
  bool allocated(NodeId id) const { return !buffers_.at(id).empty(); }
  std::vector<std::vector<double>> release() { return std::move(buffers_); }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::vector<double>> buffers_;
};

using BackwardFn = std::function<void(std::span<const double> grad_out, GradBuffers& grads)>;

class GradMap;

/// Append-only record of differentiable operations. Backward walks nodes in
/// strictly decreasing append order and may run once per tape.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers `value` as a differentiable leaf.
  Tensor leaf(const Tensor& value);
  /// Registers an op output. `fn` may be empty for nodes with no inputs on the tape.
  Tensor record(Shape shape, std::vector<double> data, BackwardFn fn);

  GradMap backward(const Tensor& loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

 private:
  struct Node {
    std::size_t numel;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

/// Gradients produced by one backward pass, keyed by node id.
class GradMap {
 public:
  GradMap() = default;
  GradMap(const Tape* tape, std::vector<std::vector<double>> grads) : tape_(tape), grads_(std::move(grads)) {}

  /// Gradient of the loss w.r.t. `t`; all zeros when `t` is unreachable.
  Tensor grad(const Tensor& t) const;
  bool reached(const Tensor& t) const;

 private:
  const Tape* tape_ = nullptr;
  std::vector<std::vector<double>> grads_;
};

}  // namespace smaug::diff
