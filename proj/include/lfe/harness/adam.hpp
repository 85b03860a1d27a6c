#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lfe/net/parameters.hpp"

namespace lfe::harness {

/// Adam with bias correction:
///   m = b1 m + (1-b1) g,  v = b2 v + (1-b2) g^2
///   p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// Arithmetic runs in double; moments are stored in T.
template <typename T>
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Updates every parameter that has a gradient, then increments t.
  void step(net::ParameterStore<T>& params, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (const auto& [name, param] : params.entries()) {
      if (!param.has_grad()) continue;
      auto& m = moment(first_, name, param.numel());
      auto& v = moment(second_, name, param.numel());
      Tensor<T> target = param;  // shares storage with the store entry
      auto p = target.mutable_data();
      auto g = param.grad();
      for (std::size_t i = 0; i < m.size(); ++i) {
        const double gi = g[i];
        const double mi = beta1_ * m[i] + (1.0 - beta1_) * gi;
        const double vi = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        p[i] = static_cast<T>(p[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + eps_));
      }
    }
  }

  std::int64_t steps() const { return t_; }
  void set_steps(std::int64_t t) { t_ = t; }
  std::map<std::string, std::vector<T>>& first_moments() { return first_; }
  std::map<std::string, std::vector<T>>& second_moments() { return second_; }
  const std::map<std::string, std::vector<T>>& first_moments() const { return first_; }
  const std::map<std::string, std::vector<T>>& second_moments() const { return second_; }

 private:
  static std::vector<T>& moment(std::map<std::string, std::vector<T>>& table, const std::string& name,
                                std::int64_t n) {
    auto& slot = table[name];
    if (slot.empty()) slot.assign(n, T(0));
    return slot;
  }

  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::map<std::string, std::vector<T>> first_, second_;
};

/// lr0 * 0.5^floor(epoch / halve_every).
double scheduled_lr(double lr0, int halve_every, std::int64_t epoch);

}  // namespace lfe::harness
