#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "feclab/kernels.hpp"
#include "feclab/tensor.hpp"

namespace feclab {

// Define-by-run reverse-mode tape. Nodes are created in execution order, so
// walking them backwards is already a reverse topological order; gradients
// accumulate additively where a node fans out. One tape per forward pass.
template <typename T>
class Tape {
 public:
  // `self` is the id of the node whose backward is running. The function
  // must accumulate (+=) into the gradients of the nodes it consumed.
  using BackFn = std::function<void(Tape&, int self)>;

  int leaf(Tensor<T> value) { return push(std::move(value), nullptr); }

  // Extension point for ops defined outside this header (the losses).
  int add_node(Tensor<T> value, BackFn back) { return push(std::move(value), std::move(back)); }

  const Tensor<T>& value(int id) const { return nodes_[id].value; }

  // Gradient buffers materialize on first touch, so forward-only use (pure
  // inference) never allocates them.
  Tensor<T>& grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.data.empty()) n.grad = Tensor<T>(n.value.shape);
    return n.grad;
  }

  // 3x3 (or 1x1) same-padded convolution; w is [Co,Ci,k,k], b is [1,Co,1,1]
  int conv2d(int x, int w, int b) {
    Tensor<T> y(Shape{value(x).shape.n, value(w).shape.n, value(x).shape.h, value(x).shape.w});
    kern::par::conv2d_fwd(value(x), value(w), value(b), y);
    return push(std::move(y), [x, w, b](Tape& t, int self) {
      kern::par::conv2d_bwd_input(t.grad(self), t.value(w), t.grad(x));
      kern::par::conv2d_bwd_params(t.value(x), t.grad(self), t.grad(w), t.grad(b));
    });
  }

  // 2x2 stride-2 transposed convolution; w is [Ci,Co,2,2], doubles H and W
  int upconv2(int x, int w, int b) {
    Tensor<T> y(Shape{value(x).shape.n, value(w).shape.c, 2 * value(x).shape.h,
                      2 * value(x).shape.w});
    kern::par::upconv2_fwd(value(x), value(w), value(b), y);
    return push(std::move(y), [x, w, b](Tape& t, int self) {
      kern::par::upconv2_bwd_input(t.grad(self), t.value(w), t.grad(x));
      kern::par::upconv2_bwd_params(t.value(x), t.grad(self), t.grad(w), t.grad(b));
    });
  }

  int maxpool2(int x) {
    const Shape& s = value(x).shape;
    Tensor<T> y(Shape{s.n, s.c, s.h / 2, s.w / 2});
    auto argmax = std::make_shared<std::vector<int64_t>>();
    kern::par::maxpool2_fwd(value(x), y, *argmax);
    return push(std::move(y), [x, argmax](Tape& t, int self) {
      kern::par::maxpool2_bwd(t.grad(self), *argmax, t.grad(x));
    });
  }

  int relu(int x) {
    Tensor<T> y(value(x).shape);
    kern::par::relu_fwd(value(x), y);
    return push(std::move(y), [x](Tape& t, int self) {
      kern::par::relu_bwd(t.value(x), t.grad(self), t.grad(x));
    });
  }

  int sigmoid(int x) {
    Tensor<T> y(value(x).shape);
    kern::par::sigmoid_fwd(value(x), y);
    return push(std::move(y), [x](Tape& t, int self) {
      kern::par::sigmoid_bwd(t.value(self), t.grad(self), t.grad(x));
    });
  }

  int concat_channels(int a, int b) {
    const Shape& sa = value(a).shape;
    const Shape& sb = value(b).shape;
    Tensor<T> y(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
    kern::par::concat_fwd(value(a), value(b), y);
    return push(std::move(y), [a, b](Tape& t, int self) {
      kern::par::concat_bwd(t.grad(self), t.grad(a), t.grad(b));
    });
  }

  int add_residual(int a, int b) {
    Tensor<T> y(value(a).shape);
    kern::par::add_fwd(value(a), value(b), y);
    return push(std::move(y), [a, b](Tape& t, int self) {
      kern::par::accumulate(t.grad(self), t.grad(a));
      kern::par::accumulate(t.grad(self), t.grad(b));
    });
  }

  // Seeds d(root)/d(root) = 1 and sweeps the tape once in reverse order.
  void backward(int root) {
    if (value(root).size() != 1)
      throw std::invalid_argument("backward: root must be a scalar node");
    grad(root).data[0] = T(1);
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id)
      if (nodes_[id].back) nodes_[id].back(*this, id);
  }

  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    BackFn back;
  };

  int push(Tensor<T> value, BackFn back) {
    Node n;
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

}  // namespace feclab
