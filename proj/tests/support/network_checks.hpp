#pragma once

// Finite-difference check of the whole stereo network in 64-bit, shared by
// the unit tests and the acceptance suite.

#include <functional>
#include <random>

#include "lfe/core/gradcheck.hpp"
#include "lfe/core/ops.hpp"
#include "lfe/net/modules.hpp"
#include "support/oracles.hpp"

namespace lfe::testing {

template <typename T>
void fill_params(net::ParameterStore<T>& store, const std::function<bool(const std::string&)>& select, T value) {
  for (const auto& [name, t] : store.entries()) {
    if (!select(name)) continue;
    Tensor<T> alias = t;
    for (auto& v : alias.mutable_data()) v = value;
  }
}

struct NetworkGradCheck {
  GradCheckReport report;
  std::size_t parameter_tensors = 0;
};

/// Random 16x16 stereo pair through the full network; the output is
/// contracted against random probes so every output element matters.
/// Probes `per_leaf` elements of every parameter tensor and of both inputs.
inline NetworkGradCheck network_gradient_check(std::uint64_t seed, std::size_t per_leaf = 2,
                                               net::NetworkConfig cfg = {}) {
  std::mt19937_64 rng(seed);
  auto params = net::init_parameters<double>(cfg, seed);
  auto low_l = random_tensor<double>({1, 3, 16, 16}, rng, 0.0, 1.0);
  auto low_r = random_tensor<double>({1, 3, 16, 16}, rng, 0.0, 1.0);
  const auto lf_l = net::lowfre_image(low_l, cfg), lf_r = net::lowfre_image(low_r, cfg);
  const auto probe_l = random_tensor<double>({1, 3, 16, 16}, rng);
  const auto probe_r = random_tensor<double>({1, 3, 16, 16}, rng);

  std::vector<Tensor<double>> leaves;
  for (const auto& [name, t] : params.entries()) leaves.push_back(t);
  leaves.push_back(low_l);
  leaves.push_back(low_r);

  auto loss = [&] {
    auto out = net::network_forward(low_l, low_r, lf_l, lf_r, params, cfg);
    return ops::add(ops::sum(ops::mul(out.h_l, probe_l)), ops::sum(ops::mul(out.h_r, probe_r)));
  };
  GradCheckOptions opt;
  opt.step = 1e-5;
  opt.rtol = 1e-3;
  opt.floor = 1e-6;
  opt.per_leaf = per_leaf;
  opt.seed = seed;
  NetworkGradCheck result;
  result.parameter_tensors = params.size();
  result.report = check_gradients(loss, leaves, opt);
  return result;
}

}  // namespace lfe::testing
