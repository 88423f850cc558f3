#pragma once

// Minimal dense-tensor engine with reverse-mode differentiation.
//
// Tensors are handles onto graph nodes. Every differentiable operation appends
// its result node to a Tape; Tape::backward walks the recording in exact
// reverse order. Parameters are leaf nodes that live outside any tape and
// accumulate gradients across backward passes until zero_grad().
//
// Only rank-0 (scalar), rank-1 and rank-2 tensors are used by the model.
// Broadcasting is limited to scalar-with-tensor in add/sub/mul.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace grn::ad {

using Shape = std::vector<std::size_t>;
using Mask = std::vector<bool>;
using Rng = std::mt19937_64;

std::size_t num_elements(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Uniform draw in [0, 1) built from the raw generator output so that seeded
/// streams agree across standard library implementations.
double uniform01(Rng& rng);

template <typename T>
class Tape;

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents that require grad.
  std::function<void(Node&)> backward;
  Tape<T>* tape = nullptr;
  std::size_t id = 0;
  bool requires_grad = false;

  std::vector<T>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  /// Trainable leaf, not attached to any tape.
  static Tensor parameter(Shape shape, std::vector<T> values);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const T> values() const { return node_->value; }
  std::span<T> mutable_values() { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad_buffer(); }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad.clear(); }

  T item() const;
  T operator[](std::size_t i) const { return node_->value[i]; }
  T at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  /// Only meaningful on parameters; frozen parameters receive no gradient.
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  Tape<T>* tape() const { return node_->tape; }
  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& handle() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Recording of one forward pass. Not thread-safe; use one tape per thread.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor<T> constant(Shape shape, std::vector<T> values);
  Tensor<T> zeros(Shape shape);
  Tensor<T> scalar(T v) { return constant({}, {v}); }

  /// Appends an operation result. `backward` may be empty for
  /// non-differentiable results.
  Tensor<T> record(Shape shape, std::vector<T> value, std::vector<Tensor<T>> parents,
                   std::function<void(Node<T>&)> backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates in reverse recording order.
  /// Intermediate gradients are reset first; parameter gradients accumulate.
  void backward(const Tensor<T>& loss);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<std::shared_ptr<Node<T>>> nodes_;
};

// Linear algebra. matmul accepts [m,k]x[k,n] -> [m,n] and [m,k]x[k] -> [m].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> dot(const Tensor<T>& a, const Tensor<T>& b);

// Elementwise. Shapes must match, or one side must hold a single element.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T>
Tensor<T> tanh(const Tensor<T>& x);
template <typename T>
Tensor<T> one_minus(const Tensor<T>& x);

/// Elementwise sum of equally shaped tensors; at least one input. The result
/// does not depend on the order of `xs`.
template <typename T>
Tensor<T> add_n(std::span<const Tensor<T>> xs);

// Reductions and reshaping.
template <typename T>
Tensor<T> sum(const Tensor<T>& x);
/// Elementwise mean of equally shaped tensors. Empty input is degenerate.
template <typename T>
Tensor<T> mean(std::span<const Tensor<T>> xs);
/// Mean over axis 0 of a rank-2 tensor.
template <typename T>
Tensor<T> mean_rows(const Tensor<T>& m);
/// Concatenation along axis 0; remaining dimensions must agree.
template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> xs);
template <typename T>
Tensor<T> stack_rows(std::span<const Tensor<T>> rows);
template <typename T>
Tensor<T> row(const Tensor<T>& m, std::size_t i);
template <typename T>
Tensor<T> slice(const Tensor<T>& v, std::size_t offset, std::size_t length);
template <typename T>
Tensor<T> select(const Tensor<T>& v, std::size_t i);

/// Max-shifted softmax over a vector. Masked-out positions are exactly 0.
/// An empty mask means every position is live.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, const Mask& mask = {});
/// log of softmax; masked-out positions hold -infinity and receive no gradient.
template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x, const Mask& mask = {});

template <typename T>
Tensor<T> lookup(Tape<T>& tape, const Tensor<T>& table, std::size_t index);

/// Inverted dropout: survivors are scaled by 1/(1-p). Identity when
/// `training` is false or p == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, bool training, Rng& rng);

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) {
  return add(a, b);
}
template <typename T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) {
  return sub(a, b);
}
template <typename T>
Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) {
  return mul(a, b);
}

}  // namespace grn::ad
