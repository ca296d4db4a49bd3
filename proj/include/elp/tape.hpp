#pragma once

#include <functional>
#include <vector>

#include "elp/tensor.hpp"

namespace elp::ad {

// Records forward operations and replays local backward rules in reverse
// topological order. Single-threaded; one tape per training step.
class Tape {
 public:
  Tensor add(const Tensor& a, const Tensor& b);  // b may be scalar or a suffix-shape of a
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double c);
  Tensor matmul(const Tensor& a, const Tensor& b);

  Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
  Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1);
  // out[t] = a[t - offset] where valid, zero-padded elsewhere
  Tensor shift_rows(const Tensor& a, long offset);
  Tensor reshape(const Tensor& a, Shape shape);

  Tensor relu(const Tensor& a);
  Tensor tanh_(const Tensor& a);
  Tensor sigmoid(const Tensor& a);
  Tensor log_(const Tensor& a);
  Tensor exp_(const Tensor& a);
  Tensor sqrt_(const Tensor& a);
  Tensor abs_(const Tensor& a);
  Tensor clamp(const Tensor& a, double lo, double hi);
  Tensor softmax_last(const Tensor& a);

  Tensor sum_all(const Tensor& a);
  Tensor mean_all(const Tensor& a);
  Tensor mean_axis0(const Tensor& a);
  Tensor sum_last(const Tensor& a);

  // forward: one-hot of the per-fiber argmax (last axis, ties to lowest
  // index); backward: identity, i.e. the straight-through estimator
  Tensor straight_through_hard(const Tensor& a);
  // expands the last axis V -> n_blocks*V placing `a` at block `block`
  Tensor place_block(const Tensor& a, std::size_t block, std::size_t n_blocks);

  void backward(const Tensor& root);

  std::size_t num_nodes() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    std::shared_ptr<TensorData> output;
    std::function<void()> backward;
  };

  Tensor make_node(
      Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs,
      std::function<void(TensorData*, const std::vector<std::shared_ptr<TensorData>>&)> bw);

  std::vector<Node> nodes_;
};

// population variance over axis 0 of a 2D tensor, composed from primitives
Tensor variance_axis0(Tape& tape, const Tensor& x);

}  // namespace elp::ad
