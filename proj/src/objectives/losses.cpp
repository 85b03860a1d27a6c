#include "lfe/objectives/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lfe/core/ops.hpp"

namespace lfe::objectives {

namespace {

template <typename T>
void require_same(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ContractViolation(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                            " differ");
  }
}

template <typename T>
Tensor<T> fre_term(const Tensor<T>& pred, const Tensor<T>& gt) {
  require_same("fre_loss", pred, gt);
  auto [re, im] = ops::fft2(ops::sub(pred, gt));
  return ops::scale(ops::add(ops::abs_sum(re), ops::abs_sum(im)), T(1) / static_cast<T>(pred.numel()));
}

// [C,H,W] or [N,C,H,W] -> [N*C,1,H,W] so each channel is filtered alone.
template <typename T>
Tensor<T> as_planes(const Tensor<T>& x) {
  if (x.rank() != 3 && x.rank() != 4) throw ContractViolation("ssim expects [C,H,W] or [N,C,H,W]");
  const auto h = x.dim(x.rank() - 2), w = x.dim(x.rank() - 1);
  return ops::reshape(x, {x.numel() / (h * w), 1, h, w});
}

}  // namespace

template <typename T>
Tensor<T> fre_loss(const Tensor<T>& pred_l, const Tensor<T>& pred_r, const Tensor<T>& gt_l, const Tensor<T>& gt_r) {
  return ops::add(fre_term(pred_l, gt_l), fre_term(pred_r, gt_r));
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> taps(size);
  double total = 0;
  for (int i = 0; i < size; ++i) {
    const double d = i - (size - 1) / 2.0;
    taps[i] = std::exp(-d * d / (2 * sigma * sigma));
    total += taps[i];
  }
  for (auto& t : taps) t /= total;
  return taps;
}

template <typename T>
Tensor<T> ssim(const Tensor<T>& a, const Tensor<T>& b, const SsimOptions& options) {
  require_same("ssim", a, b);
  const int k = options.window;
  if (a.dim(a.rank() - 2) < k || a.dim(a.rank() - 1) < k) {
    throw ContractViolation("ssim: image " + shape_str(a.shape()) + " smaller than the " + std::to_string(k) +
                            "x" + std::to_string(k) + " window");
  }
  const auto taps = gaussian_window(k, options.sigma);
  std::vector<T> kernel(k * k);
  for (int y = 0; y < k; ++y)
    for (int x = 0; x < k; ++x) kernel[y * k + x] = static_cast<T>(taps[y] * taps[x]);
  const Tensor<T> window(Shape{1, 1, k, k}, std::move(kernel));
  auto blur = [&](const Tensor<T>& t) { return ops::conv2d(t, window, Tensor<T>(), 1, 0); };

  const auto x = as_planes(a), y = as_planes(b);
  const auto mu_x = blur(x), mu_y = blur(y);
  const auto mu_xx = ops::mul(mu_x, mu_x), mu_yy = ops::mul(mu_y, mu_y), mu_xy = ops::mul(mu_x, mu_y);
  const auto var_x = ops::sub(blur(ops::mul(x, x)), mu_xx);
  const auto var_y = ops::sub(blur(ops::mul(y, y)), mu_yy);
  const auto cov = ops::sub(blur(ops::mul(x, y)), mu_xy);
  const T c1 = static_cast<T>(options.c1), c2 = static_cast<T>(options.c2);
  const auto num = ops::mul(ops::add_scalar(ops::scale(mu_xy, T(2)), c1), ops::add_scalar(ops::scale(cov, T(2)), c2));
  const auto den = ops::mul(ops::add_scalar(ops::add(mu_xx, mu_yy), c1), ops::add_scalar(ops::add(var_x, var_y), c2));
  return ops::mean(ops::div(num, den));
}

template <typename T>
Tensor<T> spa_loss(const Tensor<T>& pred_l, const Tensor<T>& pred_r, const Tensor<T>& gt_l, const Tensor<T>& gt_r) {
  auto both = ops::add(ssim(pred_l, gt_l), ssim(pred_r, gt_r));
  return ops::add_scalar(ops::scale(both, T(-1)), T(2));
}

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak) {
  require_same("psnr", a, b);
  double total = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    total += d * d;
  }
  const double mse = total / static_cast<double>(a.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double otsu_threshold(std::span<const double> values) {
  const double top = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  if (!(top > 0.0)) return std::numeric_limits<double>::infinity();
  constexpr int bins = 256;
  std::vector<double> hist(bins, 0.0);
  for (double v : values) hist[std::min(bins - 1, static_cast<int>(v / top * bins))] += 1.0;
  const double n = static_cast<double>(values.size());
  double sum_all = 0;
  for (int i = 0; i < bins; ++i) sum_all += i * hist[i];
  double w0 = 0, sum0 = 0, best = -1;
  int best_bin = 0;
  for (int i = 0; i < bins; ++i) {
    w0 += hist[i];
    sum0 += i * hist[i];
    const double w1 = n - w0;
    if (w0 == 0 || w1 == 0) continue;
    const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_bin = i;
    }
  }
  // Values in bins above best_bin are the "large error" class.
  return static_cast<double>(best_bin + 1) * top / bins;
}

Tensor<float> mse_map(const Tensor<float>& pred, const Tensor<float>& gt, std::optional<double> threshold) {
  require_same("mse_map", pred, gt);
  if (pred.rank() != 3) throw ContractViolation("mse_map expects [C,H,W], got " + shape_str(pred.shape()));
  const std::int64_t c = pred.dim(0), h = pred.dim(1), w = pred.dim(2);
  std::vector<double> err(h * w, 0.0);
  for (std::int64_t ch = 0; ch < c; ++ch)
    for (std::int64_t i = 0; i < h * w; ++i) {
      const double d = static_cast<double>(pred[ch * h * w + i]) - gt[ch * h * w + i];
      err[i] += d * d;
    }
  for (auto& e : err) e /= static_cast<double>(c);
  const double t = threshold ? *threshold : otsu_threshold(err);
  std::vector<float> map(h * w);
  for (std::int64_t i = 0; i < h * w; ++i) map[i] = err[i] >= t ? 1.0f : 0.0f;
  return Tensor<float>(Shape{h, w}, std::move(map));
}

#define LFE_OBJECTIVES_INSTANTIATE(T)                                                                          \
  template Tensor<T> fre_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> ssim(const Tensor<T>&, const Tensor<T>&, const SsimOptions&);                            \
  template Tensor<T> spa_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);       \
  template double psnr(const Tensor<T>&, const Tensor<T>&, double);

LFE_OBJECTIVES_INSTANTIATE(float)
LFE_OBJECTIVES_INSTANTIATE(double)

}  // namespace lfe::objectives
