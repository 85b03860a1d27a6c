#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "lfe/core/tensor.hpp"

namespace lfe::degrade {

using Rng = std::mt19937_64;

/// Parameters of one synthetic low-light rendering: luminance is lowered by
/// out = beta * (alpha * in)^gamma, then heteroscedastic Gaussian noise with
/// variance sigma_s * x + sigma_c^2 is added.
struct DegradeParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double sigma_s = 0.0;
  double sigma_c = 0.0;
  std::uint64_t seed = 0;

  /// Curve constraints: alpha, beta in (0, 1]; gamma >= 1.
  void validate_curve() const;
  /// Full dataset constraints: the curve plus sigma_s in [0.09, 0.1] and
  /// sigma_c in [0.02, 0.03].
  void validate() const;
};

/// Paired views sharing H and W; both low-light views carry the same params.
struct StereoSample {
  std::string id;
  Tensor<float> low_left, low_right, gt_left, gt_right;  // [3,H,W] in [0,1]
  std::optional<DegradeParams> params;                   // absent for real captures
};

/// beta * (alpha * in)^gamma per element, clipped to [0, 1].
Tensor<float> gamma_degrade(const Tensor<float>& image, const DegradeParams& params);

/// 4:1 mixture of two parameter sets. Set 1: alpha, beta ~ U(0.65, 0.7),
/// gamma ~ U(1.5, 1.6). Set 2: alpha, beta ~ U(0.8, 0.85), gamma ~ U(3, 3.2).
/// Noise levels sigma_s ~ U(0.09, 0.1), sigma_c ~ U(0.02, 0.03).
DegradeParams sample_params(Rng& rng);

/// True when `params` came from the first (more frequent) parameter set.
bool is_first_parameter_set(const DegradeParams& params);

/// Noise field n ~ N(0, sigma_s * x + sigma_c^2), independent per element.
Tensor<float> sample_noise(const Tensor<float>& image, const DegradeParams& params, Rng& rng);

/// clip(image + sample_noise(image)). Both sigmas zero returns the input.
Tensor<float> add_noise(const Tensor<float>& image, const DegradeParams& params, Rng& rng);

/// Gamma then noise on both views with the same parameters.
StereoSample degrade_pair(std::string id, const Tensor<float>& gt_left, const Tensor<float>& gt_right,
                          const DegradeParams& params, Rng& rng);

/// Mixes a 64-bit seed with a stream index (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace lfe::degrade
