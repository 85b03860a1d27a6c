#include "lfe/net/parameters.hpp"

#include <algorithm>
#include <cmath>

#include "lfe/core/ops.hpp"

namespace lfe::net {

int attention_hidden(int channels, int reduction) { return std::max(1, (channels + reduction - 1) / reduction); }

namespace {

class SpecBuilder {
 public:
  explicit SpecBuilder(const NetworkConfig& cfg) : cfg_(cfg) {}

  void conv(const std::string& name, std::int64_t out, std::int64_t in, std::int64_t k) {
    specs_.push_back({name + ".weight", {out, in, k, k}, in * k * k});
    specs_.push_back({name + ".bias", {out}, in * k * k});
  }
  void conv_transpose(const std::string& name, std::int64_t in, std::int64_t out) {
    specs_.push_back({name + ".weight", {in, out, 4, 4}, out * 16});
    specs_.push_back({name + ".bias", {out}, out * 16});
  }
  void attention(const std::string& name, int c) {
    const int hidden = attention_hidden(c, cfg_.ca_reduction);
    conv(name + ".fc1", hidden, c, 1);
    conv(name + ".fc2", c, hidden, 1);
  }
  void csm(const std::string& name, int c) {
    if (cfg_.use_csm_stage1) {
      conv(name + ".stage1.conv1x1", c, c, 1);
      conv(name + ".stage1.conv" + std::to_string(cfg_.large_kernel) + "x" + std::to_string(cfg_.large_kernel), c, c,
           cfg_.large_kernel);
      attention(name + ".stage1.ca", c);
    }
    if (cfg_.use_csm_stage2) {
      conv(name + ".stage2.expand", 2 * c, c, 1);
      conv(name + ".stage2.compress", c, c, 1);
    }
  }
  void csm_chain(const std::string& prefix, int c) {
    for (int j = 0; j < cfg_.csm_per_level; ++j) csm(prefix + ".csm" + std::to_string(j), c);
  }

  std::vector<ParameterSpec> build() {
    const int levels = cfg_.scales;
    const int in_channels = cfg_.use_iem ? 6 : 3;
    if (cfg_.use_iem) attention("iem.ca", 6);
    conv("encoder.stem", cfg_.channels(1), in_channels, 1);
    for (int k = 1; k <= levels; ++k) {
      const auto level = "encoder.level" + std::to_string(k);
      if (k > 1) conv(level + ".down", cfg_.channels(k), cfg_.channels(k - 1), 3);
      csm_chain(level, cfg_.channels(k));
    }
    if (cfg_.use_cvmi) {
      for (int k : cfg_.interaction_scales) {
        const auto level = "cvmi.level" + std::to_string(k);
        csm_chain(level, cfg_.channels(k));
        conv(level + ".conv3x3", cfg_.channels(k), cfg_.channels(k), 3);
      }
    }
    if (cfg_.use_csfi) {
      std::int64_t total = 0;
      for (int j = 1; j <= cfg_.interaction_levels(); ++j) total += cfg_.channels(j);
      for (int k = 1; k <= cfg_.interaction_levels(); ++k) {
        const auto level = "csfi.level" + std::to_string(k);
        conv(level + ".fuse", cfg_.channels(k), total, 1);
        csm_chain(level, cfg_.channels(k));
      }
    }
    for (int k = levels - 1; k >= 1; --k) {
      const auto level = "decoder.level" + std::to_string(k);
      conv_transpose(level + ".up", cfg_.channels(k + 1), cfg_.channels(k));
      csm_chain(level, cfg_.channels(k));
    }
    conv("decoder.head", 3, cfg_.channels(1), 1);
    std::sort(specs_.begin(), specs_.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return std::move(specs_);
  }

 private:
  const NetworkConfig& cfg_;
  std::vector<ParameterSpec> specs_;
};

std::uint64_t name_hash(const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<ParameterSpec> parameter_specs(const NetworkConfig& cfg) {
  cfg.validate();
  return SpecBuilder(cfg).build();
}

std::int64_t count_parameters(const NetworkConfig& cfg) {
  std::int64_t total = 0;
  for (const auto& s : parameter_specs(cfg)) total += shape_numel(s.shape);
  return total;
}

template <typename T>
void ParameterStore<T>::add(const std::string& name, Tensor<T> value) {
  if (!value.defined()) throw ContractViolation("parameter " + name + " is undefined");
  value.set_requires_grad(true);
  if (!entries_.emplace(name, std::move(value)).second) throw ContractViolation("duplicate parameter " + name);
}

template <typename T>
const Tensor<T>& ParameterStore<T>::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractViolation("no parameter named " + name);
  return it->second;
}

template <typename T>
std::int64_t ParameterStore<T>::numel() const {
  std::int64_t total = 0;
  for (const auto& [name, t] : entries_) total += t.numel();
  return total;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

template <typename T>
ParameterStore<T> ParameterStore<T>::clone() const {
  ParameterStore out;
  for (const auto& [name, t] : entries_) out.add(name, t.clone());
  return out;
}

template <typename T>
ParameterStore<T> init_parameters(const NetworkConfig& cfg, std::uint64_t seed) {
  ParameterStore<T> store;
  for (const auto& spec : parameter_specs(cfg)) {
    const T bound = static_cast<T>(1.0 / std::sqrt(static_cast<double>(spec.fan_in)));
    std::uint64_t z = seed ^ name_hash(spec.name);
    z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
    store.add(spec.name, ops::random_uniform<T>(spec.shape, z ^ (z >> 33), -bound, bound));
  }
  return store;
}

template <typename T>
void check_against_config(const ParameterStore<T>& store, const NetworkConfig& cfg) {
  const auto specs = parameter_specs(cfg);
  for (const auto& spec : specs) {
    if (!store.contains(spec.name)) throw CheckpointError("missing parameter " + spec.name);
    const auto& t = store.get(spec.name);
    if (t.shape() != spec.shape) {
      throw CheckpointError("parameter " + spec.name + " has shape " + shape_str(t.shape()) + ", expected " +
                            shape_str(spec.shape));
    }
  }
  if (store.size() != specs.size()) {
    for (const auto& [name, t] : store.entries()) {
      if (std::none_of(specs.begin(), specs.end(), [&](const auto& s) { return s.name == name; })) {
        throw CheckpointError("unexpected parameter " + name);
      }
    }
  }
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template ParameterStore<float> init_parameters<float>(const NetworkConfig&, std::uint64_t);
template ParameterStore<double> init_parameters<double>(const NetworkConfig&, std::uint64_t);
template void check_against_config<float>(const ParameterStore<float>&, const NetworkConfig&);
template void check_against_config<double>(const ParameterStore<double>&, const NetworkConfig&);

}  // namespace lfe::net
