#include "lfe/core/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace lfe {

GradCheckReport check_gradients(const std::function<Tensor<double>()>& loss, std::vector<Tensor<double>> leaves,
                                const GradCheckOptions& options) {
  for (auto& leaf : leaves) {
    if (!leaf.is_leaf()) throw ContractViolation("check_gradients: probes must be leaf tensors");
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (auto& leaf : leaves) {
    if (leaf.has_grad()) {
      analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());
    } else {
      analytic.emplace_back(leaf.numel(), 0.0);
    }
  }

  std::vector<std::pair<std::size_t, std::int64_t>> coords;
  if (options.per_leaf > 0) {
    std::mt19937_64 rng(options.seed);
    for (std::size_t k = 0; k < leaves.size(); ++k) {
      std::uniform_int_distribution<std::int64_t> pick(0, leaves[k].numel() - 1);
      for (std::size_t s = 0; s < options.per_leaf; ++s) coords.emplace_back(k, pick(rng));
    }
  } else if (options.samples == 0) {
    for (std::size_t k = 0; k < leaves.size(); ++k)
      for (std::int64_t i = 0; i < leaves[k].numel(); ++i) coords.emplace_back(k, i);
  } else {
    std::int64_t total = 0;
    for (auto& leaf : leaves) total += leaf.numel();
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<std::int64_t> pick(0, total - 1);
    for (std::size_t s = 0; s < options.samples; ++s) {
      std::int64_t flat = pick(rng);
      std::size_t k = 0;
      while (flat >= leaves[k].numel()) flat -= leaves[k++].numel();
      coords.emplace_back(k, flat);
    }
  }

  GradCheckReport report;
  NoGradGuard no_grad;
  for (auto [k, i] : coords) {
    auto values = leaves[k].mutable_data();
    const double original = values[i];
    values[i] = original + options.step;
    const double plus = loss().item();
    values[i] = original - options.step;
    const double minus = loss().item();
    values[i] = original;
    const double numeric = (plus - minus) / (2.0 * options.step);
    const double a = analytic[k][i];
    const double abs_err = std::abs(a - numeric);
    const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), options.floor});
    ++report.checked;
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    if (report.worst.empty() || rel > report.max_rel_error) {
      report.max_rel_error = rel;
      std::ostringstream os;
      os.precision(12);
      os << "leaf#" << k << "[" << i << "] analytic=" << a << " numeric=" << numeric;
      report.worst = os.str();
    }
  }
  report.passed = report.max_rel_error <= options.rtol;
  return report;
}

}  // namespace lfe
