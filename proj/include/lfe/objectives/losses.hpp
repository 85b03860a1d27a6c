#pragma once

#include <optional>

#include "lfe/core/tensor.hpp"

namespace lfe::objectives {

/// Per-view L1 between 2-D FFTs: mean over bins, channels and batch of
/// |Re| + |Im| of FFT(pred - gt), summed over the two views.
template <typename T>
Tensor<T> fre_loss(const Tensor<T>& pred_l, const Tensor<T>& pred_r, const Tensor<T>& gt_l, const Tensor<T>& gt_r);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double c1 = 1e-4;  // (0.01 * peak)^2
  double c2 = 9e-4;  // (0.03 * peak)^2
};

/// Normalized 1-D Gaussian taps.
std::vector<double> gaussian_window(int size, double sigma);

/// Mean local SSIM over channels and valid window positions. Accepts
/// [C,H,W] or [N,C,H,W]; differentiable.
template <typename T>
Tensor<T> ssim(const Tensor<T>& a, const Tensor<T>& b, const SsimOptions& options = {});

/// (1 - ssim(pred_l, gt_l)) + (1 - ssim(pred_r, gt_r)).
template <typename T>
Tensor<T> spa_loss(const Tensor<T>& pred_l, const Tensor<T>& pred_r, const Tensor<T>& gt_l, const Tensor<T>& gt_r);

/// 10 log10(peak^2 / MSE) in dB; +inf when the images are identical.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0);

struct LossBreakdown {
  double l_fre = 0, l_spa = 0, total = 0;
  double psnr_left = 0, psnr_right = 0, ssim_left = 0, ssim_right = 0;
};

/// Otsu threshold of a set of non-negative values on a 256-bin histogram
/// spanning [0, max]. Returns +inf for an all-zero input.
double otsu_threshold(std::span<const double> values);

/// Per-pixel squared error averaged over channels, [H,W] with 1 where the
/// error is >= threshold. Without a threshold, Otsu's is used.
Tensor<float> mse_map(const Tensor<float>& pred, const Tensor<float>& gt,
                      std::optional<double> threshold = std::nullopt);

}  // namespace lfe::objectives
