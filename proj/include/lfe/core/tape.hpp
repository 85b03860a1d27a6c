#pragma once

#include <functional>
#include <vector>

#include "lfe/core/tensor.hpp"

namespace lfe {

/// The recorded operations reachable from a root tensor, in execution order.
/// Recording happens implicitly as operations run; this class recovers the
/// ordered record from the graph and replays it backward.
template <typename T>
class ComputationTape {
 public:
  using NodeType = detail::Node<T>;

  static ComputationTape collect(const Tensor<T>& root);

  /// Recorded (non-leaf) operations, oldest first.
  const std::vector<NodeType*>& operations() const { return operations_; }
  /// Leaves that require gradients, in discovery order.
  const std::vector<NodeType*>& leaves() const { return leaves_; }

  /// Seeds d(root)/d(root) = 1 and runs every backward closure in exact
  /// reverse execution order. `visit` is invoked before each closure.
  void replay_backward(const std::function<void(const NodeType&)>& visit = {});

 private:
  NodeType* root_ = nullptr;
  std::vector<NodeType*> operations_;
  std::vector<NodeType*> leaves_;
};

extern template class ComputationTape<float>;
extern template class ComputationTape<double>;

}  // namespace lfe
