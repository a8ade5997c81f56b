#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "unet/tensor.hpp"

namespace unet {

struct Var {
  std::size_t id = 0;
};

/// Record of executed operations, replayed in reverse to apply the chain rule.
///
/// Operation nodes own their output values. Parameter leaves reference
/// tensors owned elsewhere; they must outlive the tape.
template <typename T>
class GradTape {
 public:
  using BackwardFn = std::function<void(GradTape&, const Tensor<T>& grad_output)>;

  Var constant(Tensor<T> value) { return push(std::move(value), nullptr, false, "constant", {}); }
  Var input(Tensor<T> value) { return push(std::move(value), nullptr, true, "input", {}); }
  Var parameter(const Tensor<T>& value) { return push({}, &value, true, "parameter", {}); }

  /// Appends an operation output. `backward` runs only if some input needs a gradient.
  Var record(Tensor<T> value, std::initializer_list<Var> inputs, std::string op, BackwardFn backward) {
    bool needs = false;
    for (Var v : inputs) needs = needs || nodes_.at(v.id).requires_grad;
    return push(std::move(value), nullptr, needs, std::move(op), needs ? std::move(backward) : BackwardFn{});
  }

  const Tensor<T>& value(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.external ? *n.external : n.value;
  }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  const std::string& op_name(Var v) const { return nodes_.at(v.id).op; }

  /// Gradient of the last backward() target w.r.t. v; zeros if v did not influence it.
  const Tensor<T>& grad(Var v) {
    Node& n = nodes_.at(v.id);
    if (n.grad.empty()) n.grad = Tensor<T>(value(v).shape());
    return n.grad;
  }

  void accumulate(Var v, const Tensor<T>& g) {
    Node& n = nodes_.at(v.id);
    if (!n.requires_grad) return;
    if (g.shape() != value(v).shape()) {
      throw PreconditionError("gradient shape " + g.shape().str() + " does not match value " +
                              value(v).shape().str() + " of op " + n.op);
    }
    if (n.grad.empty()) {
      n.grad = g;
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
    }
  }

  /// Seeds d(loss)/d(loss) = 1 and visits recorded operations in reverse order.
  void backward(Var loss) {
    if (nodes_.empty()) throw PreconditionError("backward called on an empty tape");
    if (value(loss).size() != 1) {
      throw PreconditionError("backward target must be a scalar, got " + value(loss).shape().str());
    }
    for (Node& n : nodes_) n.grad = Tensor<T>();
    visited_.clear();
    Node& root = nodes_.at(loss.id);
    root.grad = Tensor<T>(root.value.shape(), T(1));
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.empty()) continue;
      visited_.push_back(i);
      // The callback may append to other nodes' gradients but never to its own.
      const Tensor<T> g = std::move(n.grad);
      n.backward(*this, g);
      n.grad = g;
    }
  }

  /// Node ids whose backward rule ran during the last backward(), in visit order.
  const std::vector<std::size_t>& backward_order() const { return visited_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

 private:
  struct Node {
    Tensor<T> value;
    const Tensor<T>* external = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    std::string op;
    BackwardFn backward;
  };

  Var push(Tensor<T> value, const Tensor<T>* external, bool requires_grad, std::string op,
           BackwardFn fn) {
    nodes_.push_back(Node{std::move(value), external, {}, requires_grad, std::move(op), std::move(fn)});
    return Var{nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  std::vector<std::size_t> visited_;
};

}  // namespace unet
