#include "lfe/core/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "lfe/core/tape.hpp"

namespace lfe {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) {
    if (e < 0) throw ContractViolation("negative extent in shape " + shape_str(shape));
    n *= e;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;
std::atomic<std::uint64_t> g_sequence{1};
}  // namespace

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set_enabled(bool enabled) { g_grad_enabled = enabled; }

NoGradGuard::NoGradGuard() : previous_(GradMode::enabled()) { GradMode::set_enabled(false); }
NoGradGuard::~NoGradGuard() { GradMode::set_enabled(previous_); }

namespace detail {

std::uint64_t next_sequence() { return g_sequence.fetch_add(1, std::memory_order_relaxed); }

template <typename T>
Tensor<T> make_result(std::string_view op, Shape shape, std::vector<T> data,
                      std::vector<Tensor<T>> inputs, std::function<void(Node<T>&)> backward) {
  if (static_cast<std::int64_t>(data.size()) != shape_numel(shape)) {
    throw ContractViolation(std::string(op) + ": buffer length " + std::to_string(data.size()) +
                            " does not match shape " + shape_str(shape));
  }
#ifndef NDEBUG
  for (const T& v : data) {
    if (!std::isfinite(v)) {
      throw ContractViolation(std::string(op) + ": produced a non-finite value");
    }
  }
#endif
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = std::string(op);
  node->sequence = next_sequence();
  const bool track =
      GradMode::enabled() && backward &&
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>& t) { return t.requires_grad(); });
  if (track) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Tensor<T>::from_node(std::move(node));
}

template Tensor<float> make_result(std::string_view, Shape, std::vector<float>, std::vector<Tensor<float>>,
                                   std::function<void(Node<float>&)>);
template Tensor<double> make_result(std::string_view, Shape, std::vector<double>, std::vector<Tensor<double>>,
                                    std::function<void(Node<double>&)>);

}  // namespace detail

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) {
  node_ = std::make_shared<NodeType>();
  node_->data.assign(static_cast<std::size_t>(shape_numel(shape)), fill);
  node_->shape = std::move(shape);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) {
  if (static_cast<std::int64_t>(values.size()) != shape_numel(shape)) {
    throw ContractViolation("tensor: " + std::to_string(values.size()) + " values for shape " +
                            shape_str(shape));
  }
  node_ = std::make_shared<NodeType>();
  node_->shape = std::move(shape);
  node_->data = std::move(values);
}

template <typename T>
const typename Tensor<T>::NodeType& Tensor<T>::checked() const {
  if (!node_) throw ContractViolation("use of an undefined tensor");
  return *node_;
}

template <typename T>
std::int64_t Tensor<T>::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw ContractViolation("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  return s[axis];
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  checked();
  return node_->data;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ContractViolation("item() on tensor of shape " + shape_str(shape()));
  return data()[0];
}

template <typename T>
T Tensor<T>::at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
  const auto& s = shape();
  if (s.size() != 4) throw ContractViolation("at(n,c,h,w) on tensor of shape " + shape_str(s));
  return data()[((n * s[1] + c) * s[2] + h) * s[3] + w];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool value) {
  checked();
  if (node_->sequence != 0 && !value) {
    throw ContractViolation("cannot clear requires_grad on a recorded operation output");
  }
  node_->requires_grad = value;
  return *this;
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  if (!has_grad()) throw ContractViolation("tensor has no gradient");
  return node_->grad;
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  checked();
  return {node_->grad_buffer(), node_->data.size()};
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (node_) node_->grad.clear();
}

template <typename T>
void Tensor<T>::backward() const {
  if (numel() != 1) {
    throw ContractViolation("backward() requires a scalar loss, got shape " + shape_str(shape()));
  }
  if (!requires_grad()) {
    throw ContractViolation("backward() on a tensor that does not require gradients");
  }
  ComputationTape<T>::collect(*this).replay_backward();
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(shape(), std::vector<T>(data().begin(), data().end()));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  Tensor out = detach();
  out.node_->requires_grad = requires_grad() && is_leaf();
  return out;
}

template class Tensor<float>;
template class Tensor<double>;

template <typename T>
ComputationTape<T> ComputationTape<T>::collect(const Tensor<T>& root) {
  ComputationTape tape;
  tape.root_ = root.node().get();
  std::unordered_set<const NodeType*> seen;
  std::vector<NodeType*> stack{tape.root_};
  while (!stack.empty()) {
    NodeType* n = stack.back();
    stack.pop_back();
    if (!n->requires_grad || !seen.insert(n).second) continue;
    if (n->sequence == 0) {
      tape.leaves_.push_back(n);
      continue;
    }
    tape.operations_.push_back(n);
    for (auto& in : n->inputs) stack.push_back(in.get());
  }
  std::sort(tape.operations_.begin(), tape.operations_.end(),
            [](const NodeType* a, const NodeType* b) { return a->sequence < b->sequence; });
  return tape;
}

template <typename T>
void ComputationTape<T>::replay_backward(const std::function<void(const NodeType&)>& visit) {
  for (NodeType* n : operations_) n->grad.assign(n->data.size(), T(0));
  root_->grad_buffer()[0] += T(1);
  for (auto it = operations_.rbegin(); it != operations_.rend(); ++it) {
    NodeType* n = *it;
    if (visit) visit(*n);
    n->backward(*n);
  }
}

template class ComputationTape<float>;
template class ComputationTape<double>;

}  // namespace lfe
