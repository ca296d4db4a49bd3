#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "elp/mat.hpp"

namespace elp::ad {

class Tape;

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

struct TensorData {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until first backward touches it
  int node = -1;             // producing node on `owner`, -1 for leaves
  const Tape* owner = nullptr;
};

// Value-semantics handle to an immutable array (grad slot aside).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorData> d) : d_(std::move(d)) {}

  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false) {
    if (shape_numel(shape) != values.size())
      throw std::runtime_error("Tensor: shape " + shape_str(shape) + " does not match " +
                               std::to_string(values.size()) + " values");
    for (double v : values)
      if (!std::isfinite(v)) throw std::runtime_error("Tensor: non-finite value at construction");
    auto d = std::make_shared<TensorData>();
    d->shape = std::move(shape);
    d->values = std::move(values);
    d->requires_grad = requires_grad;
    return Tensor(std::move(d));
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<double> v(shape_numel(shape), 0.0);
    return from(std::move(shape), std::move(v), requires_grad);
  }

  static Tensor full(Shape shape, double fill, bool requires_grad = false) {
    std::vector<double> v(shape_numel(shape), fill);
    return from(std::move(shape), std::move(v), requires_grad);
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return from({1}, {v}, requires_grad);
  }

  static Tensor from_mat(const Mat& m, bool requires_grad = false) {
    return from({m.rows, m.cols}, m.data, requires_grad);
  }

  Mat to_mat() const {
    const auto& s = shape();
    if (s.size() != 2) throw std::runtime_error("Tensor::to_mat: rank != 2");
    Mat m(s[0], s[1]);
    m.data = values();
    return m;
  }

  bool defined() const { return static_cast<bool>(d_); }
  const Shape& shape() const { return d_->shape; }
  std::size_t numel() const { return d_->values.size(); }
  const std::vector<double>& values() const { return d_->values; }
  std::vector<double>& mutable_values() { return d_->values; }
  bool requires_grad() const { return d_->requires_grad; }
  bool has_grad() const { return d_->grad.size() == d_->values.size(); }
  const std::vector<double>& grad() const {
    if (!has_grad()) throw std::runtime_error("Tensor: gradient not populated");
    return d_->grad;
  }
  void zero_grad() { d_->grad.assign(d_->values.size(), 0.0); }
  void drop_grad() { d_->grad.clear(); }

  double value() const {
    if (numel() != 1) throw std::runtime_error("Tensor::value: not a scalar");
    return d_->values[0];
  }

  TensorData* data() const { return d_.get(); }
  const std::shared_ptr<TensorData>& ptr() const { return d_; }

 private:
  std::shared_ptr<TensorData> d_;
};

}  // namespace elp::ad
