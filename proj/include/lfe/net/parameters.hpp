#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lfe/core/tensor.hpp"
#include "lfe/net/config.hpp"

namespace lfe::net {

/// Shape and initialization fan-in of one named parameter.
struct ParameterSpec {
  std::string name;
  Shape shape;
  std::int64_t fan_in = 1;
};

/// Every parameter the configuration needs, sorted by name. Disabled
/// modules contribute nothing.
std::vector<ParameterSpec> parameter_specs(const NetworkConfig& cfg);
std::int64_t count_parameters(const NetworkConfig& cfg);

/// Hidden width of the channel-attention bottleneck: ceil(C / reduction).
int attention_hidden(int channels, int reduction);

/// Named parameters shared by both views. Stored tensors are leaves with
/// requires_grad set; copies of the store alias the same tensors.
template <typename T>
class ParameterStore {
 public:
  using Map = std::map<std::string, Tensor<T>>;

  void add(const std::string& name, Tensor<T> value);
  const Tensor<T>& get(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::size_t size() const { return entries_.size(); }
  std::int64_t numel() const;
  const Map& entries() const { return entries_; }
  void zero_grad();

  /// Deep copy with element type U; the copy shares nothing with this store.
  template <typename U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (const auto& [name, t] : entries_) out.add(name, t.template cast<U>());
    return out;
  }
  ParameterStore clone() const;

 private:
  Map entries_;
};

/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases alike. Each
/// parameter draws from its own stream keyed by (seed, name).
template <typename T>
ParameterStore<T> init_parameters(const NetworkConfig& cfg, std::uint64_t seed);

/// Throws CheckpointError naming the first missing, unexpected or
/// mis-shaped entry.
template <typename T>
void check_against_config(const ParameterStore<T>& store, const NetworkConfig& cfg);

}  // namespace lfe::net
