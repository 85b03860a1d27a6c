#include "lfe/degrade/degrade.hpp"

#include <algorithm>
#include <cmath>

namespace lfe::degrade {

void DegradeParams::validate_curve() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1], got " + std::to_string(alpha));
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0, 1], got " + std::to_string(beta));
  if (!(gamma >= 1.0)) throw ConfigError("gamma must be >= 1, got " + std::to_string(gamma));
}

void DegradeParams::validate() const {
  validate_curve();
  if (!(sigma_s >= 0.09 && sigma_s <= 0.1)) {
    throw ConfigError("sigma_s must lie in [0.09, 0.1], got " + std::to_string(sigma_s));
  }
  if (!(sigma_c >= 0.02 && sigma_c <= 0.03)) {
    throw ConfigError("sigma_c must lie in [0.02, 0.03], got " + std::to_string(sigma_c));
  }
}

Tensor<float> gamma_degrade(const Tensor<float>& image, const DegradeParams& params) {
  params.validate_curve();
  std::vector<float> out(image.numel());
  auto in = image.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = std::clamp(static_cast<double>(in[i]), 0.0, 1.0);
    out[i] = static_cast<float>(std::clamp(params.beta * std::pow(params.alpha * x, params.gamma), 0.0, 1.0));
  }
  return Tensor<float>(image.shape(), std::move(out));
}

DegradeParams sample_params(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  DegradeParams p;
  if (unit(rng) < 0.8) {
    p.alpha = uniform(0.65, 0.7);
    p.beta = uniform(0.65, 0.7);
    p.gamma = uniform(1.5, 1.6);
  } else {
    p.alpha = uniform(0.8, 0.85);
    p.beta = uniform(0.8, 0.85);
    p.gamma = uniform(3.0, 3.2);
  }
  p.sigma_s = uniform(0.09, 0.1);
  p.sigma_c = uniform(0.02, 0.03);
  p.seed = rng();
  return p;
}

bool is_first_parameter_set(const DegradeParams& params) { return params.gamma < 2.0; }

Tensor<float> sample_noise(const Tensor<float>& image, const DegradeParams& params, Rng& rng) {
  if (params.sigma_s < 0.0 || params.sigma_c < 0.0) throw ConfigError("noise levels must be non-negative");
  std::normal_distribution<double> standard(0.0, 1.0);
  std::vector<float> noise(image.numel());
  auto in = image.data();
  const double floor_var = params.sigma_c * params.sigma_c;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    const double variance = params.sigma_s * std::max(0.0, static_cast<double>(in[i])) + floor_var;
    noise[i] = static_cast<float>(std::sqrt(variance) * standard(rng));
  }
  return Tensor<float>(image.shape(), std::move(noise));
}

Tensor<float> add_noise(const Tensor<float>& image, const DegradeParams& params, Rng& rng) {
  if (params.sigma_s == 0.0 && params.sigma_c == 0.0) return image.detach();
  auto noise = sample_noise(image, params, rng);
  std::vector<float> out(image.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(image[i] + noise[i], 0.0f, 1.0f);
  return Tensor<float>(image.shape(), std::move(out));
}

StereoSample degrade_pair(std::string id, const Tensor<float>& gt_left, const Tensor<float>& gt_right,
                          const DegradeParams& params, Rng& rng) {
  if (gt_left.shape() != gt_right.shape()) {
    throw ContractViolation("degrade_pair: views differ in shape " + shape_str(gt_left.shape()) + " vs " +
                            shape_str(gt_right.shape()));
  }
  StereoSample s;
  s.id = std::move(id);
  s.gt_left = gt_left;
  s.gt_right = gt_right;
  s.low_left = add_noise(gamma_degrade(gt_left, params), params, rng);
  s.low_right = add_noise(gamma_degrade(gt_right, params), params, rng);
  s.params = params;
  return s;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed ^ (index + 0x9e3779b97f4a7c15ULL * (index + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace lfe::degrade
