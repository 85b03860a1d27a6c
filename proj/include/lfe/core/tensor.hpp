#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lfe/core/error.hpp"

namespace lfe {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Thread-local switch controlling whether operations are recorded for
/// reverse-mode differentiation.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool enabled);
};

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  // Empty until the first gradient is accumulated into this node.
  std::vector<T> grad;
  bool requires_grad = false;
  // Position on the computation tape; 0 for leaves.
  std::uint64_t sequence = 0;
  std::string op;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads `self.grad` and accumulates into the gradients of `self.inputs`.
  std::function<void(Node& self)> backward;

  T* grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad.data();
  }
};

std::uint64_t next_sequence();

}  // namespace detail

/// Dense row-major array in batch-channel-height-width order with optional
/// gradient tracking. Copies share storage; use clone() for a deep copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodeType = detail::Node<T>;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), T(0)); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), T(1)); }
  static Tensor full(Shape shape, T value) { return Tensor(std::move(shape), value); }
  static Tensor scalar(T value) { return Tensor(Shape{}, value); }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return checked().shape; }
  std::size_t rank() const { return shape().size(); }
  std::int64_t dim(std::size_t axis) const;
  std::int64_t numel() const { return static_cast<std::int64_t>(checked().data.size()); }

  std::span<const T> data() const { return checked().data; }
  // Direct write access is reserved for leaves: parameters, inputs and
  // finite-difference probes.
  std::span<T> mutable_data();

  T item() const;
  T operator[](std::int64_t flat_index) const { return checked().data[flat_index]; }
  T at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const;

  bool requires_grad() const { return defined() && node_->requires_grad; }
  Tensor& set_requires_grad(bool value);
  bool is_leaf() const { return checked().sequence == 0; }

  bool has_grad() const { return defined() && !node_->grad.empty(); }
  std::span<const T> grad() const;
  std::span<T> mutable_grad();
  void zero_grad();

  /// Reverse-mode sweep from this scalar. Leaf gradients accumulate across
  /// calls; intermediate gradients are recomputed each call.
  void backward() const;

  Tensor detach() const;
  Tensor clone() const;
  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data().begin(), data().end());
    return Tensor<U>(shape(), std::move(out));
  }

  const std::shared_ptr<NodeType>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<NodeType> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  const NodeType& checked() const;
  std::shared_ptr<NodeType> node_;
};

namespace detail {

/// Wraps freshly computed `data` as an operation output. The backward
/// closure is attached only when gradient recording is enabled and at least
/// one input requires a gradient.
template <typename T>
Tensor<T> make_result(std::string_view op, Shape shape, std::vector<T> data,
                      std::vector<Tensor<T>> inputs,
                      std::function<void(Node<T>&)> backward);

}  // namespace detail

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace lfe
