#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lfe/core/tensor.hpp"

namespace lfe {

struct GradCheckOptions {
  double step = 1e-5;
  double rtol = 1e-4;
  // Denominator floor for the relative error, so gradients that are zero up
  // to rounding do not register as failures.
  double floor = 1e-6;
  // Number of (leaf, element) coordinates to probe; 0 probes every element.
  std::size_t samples = 0;
  // When non-zero, probe this many random elements of every leaf instead,
  // so small tensors such as biases are always covered.
  std::size_t per_leaf = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst;  // "leaf#<i>[<flat index>] analytic=... numeric=..."
  bool passed = true;
};

/// Compares reverse-mode gradients of `loss` against central differences
/// (f(x+h) - f(x-h)) / 2h on the given leaves. Leaves are perturbed in place
/// and restored. Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckReport check_gradients(const std::function<Tensor<double>()>& loss, std::vector<Tensor<double>> leaves,
                                 const GradCheckOptions& options = {});

}  // namespace lfe
