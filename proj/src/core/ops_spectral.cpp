#include <algorithm>
#include <cmath>

#include "lfe/core/fft.hpp"
#include "lfe/core/ops.hpp"

namespace lfe::ops {
namespace {

using detail::make_result;
using detail::Node;

struct AxisTaps {
  std::vector<std::int64_t> lo, hi;
  std::vector<double> frac;
};

// Half-pixel-center sampling positions for one axis.
AxisTaps axis_taps(std::int64_t in, std::int64_t out) {
  AxisTaps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    if (src < 0) src = 0;
    auto i0 = static_cast<std::int64_t>(std::floor(src));
    i0 = std::min(i0, in - 1);
    t.lo[o] = i0;
    t.hi[o] = std::min(i0 + 1, in - 1);
    t.frac[o] = src - static_cast<double>(i0);
  }
  return t;
}

}  // namespace

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
  if (x.rank() == 0 || x.shape().back() < 1) {
    throw ContractViolation("softmax_lastdim: need a non-empty last axis, got " + shape_str(x.shape()));
  }
  const std::int64_t k = x.shape().back();
  const std::int64_t rows = x.numel() / k;
  std::vector<T> out(x.numel());
  auto in = x.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* src = in.data() + r * k;
    T* dst = out.data() + r * k;
    const T peak = *std::max_element(src, src + k);
    T total = T(0);
    for (std::int64_t j = 0; j < k; ++j) {
      dst[j] = std::exp(src[j] - peak);
      total += dst[j];
    }
    const T inv = T(1) / total;
    for (std::int64_t j = 0; j < k; ++j) dst[j] *= inv;
  }
  return make_result<T>("softmax_lastdim", x.shape(), std::move(out), {x}, [rows, k](Node<T>& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    T* gi = in.grad_buffer();
    const T* y = self.data.data();
    const T* g = self.grad.data();
    for (std::int64_t r = 0; r < rows; ++r) {
      T dot = T(0);
      for (std::int64_t j = 0; j < k; ++j) dot += g[r * k + j] * y[r * k + j];
      for (std::int64_t j = 0; j < k; ++j) gi[r * k + j] += y[r * k + j] * (g[r * k + j] - dot);
    }
  });
}

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, Ratio scale) {
  if (x.rank() != 4) throw ContractViolation("resize_bilinear: expected [N,C,H,W], got " + shape_str(x.shape()));
  if (scale.num <= 0 || scale.den <= 0) throw ContractViolation("resize_bilinear: scale must be positive");
  const std::int64_t h = x.dim(2), w = x.dim(3);
  if ((h * scale.num) % scale.den != 0 || (w * scale.num) % scale.den != 0) {
    throw ContractViolation("resize_bilinear: scale " + std::to_string(scale.num) + "/" +
                            std::to_string(scale.den) + " gives non-integral extent for " + shape_str(x.shape()));
  }
  const std::int64_t oh = h * scale.num / scale.den, ow = w * scale.num / scale.den;
  if (oh == 0 || ow == 0) {
    throw ContractViolation("resize_bilinear: zero output extent for " + shape_str(x.shape()));
  }
  auto rows = std::make_shared<AxisTaps>(axis_taps(h, oh));
  auto cols = std::make_shared<AxisTaps>(axis_taps(w, ow));
  const std::int64_t planes = x.dim(0) * x.dim(1);
  std::vector<T> out(planes * oh * ow);
  auto in = x.data();
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* src = in.data() + p * h * w;
    T* dst = out.data() + p * oh * ow;
    for (std::int64_t i = 0; i < oh; ++i) {
      const T fy = static_cast<T>(rows->frac[i]);
      const T* r0 = src + rows->lo[i] * w;
      const T* r1 = src + rows->hi[i] * w;
      for (std::int64_t j = 0; j < ow; ++j) {
        const T fx = static_cast<T>(cols->frac[j]);
        const auto c0 = cols->lo[j], c1 = cols->hi[j];
        const T top = r0[c0] + (r0[c1] - r0[c0]) * fx;
        const T bottom = r1[c0] + (r1[c1] - r1[c0]) * fx;
        dst[i * ow + j] = top + (bottom - top) * fy;
      }
    }
  }
  return make_result<T>("resize_bilinear", Shape{x.dim(0), x.dim(1), oh, ow}, std::move(out), {x},
                        [rows, cols, planes, h, w, oh, ow](Node<T>& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          T* gi = in.grad_buffer();
                          const T* g = self.grad.data();
                          for (std::int64_t p = 0; p < planes; ++p) {
                            T* dst = gi + p * h * w;
                            const T* src = g + p * oh * ow;
                            for (std::int64_t i = 0; i < oh; ++i) {
                              const T fy = static_cast<T>(rows->frac[i]);
                              T* r0 = dst + rows->lo[i] * w;
                              T* r1 = dst + rows->hi[i] * w;
                              for (std::int64_t j = 0; j < ow; ++j) {
                                const T fx = static_cast<T>(cols->frac[j]);
                                const T v = src[i * ow + j];
                                const auto c0 = cols->lo[j], c1 = cols->hi[j];
                                r0[c0] += v * (T(1) - fy) * (T(1) - fx);
                                r0[c1] += v * (T(1) - fy) * fx;
                                r1[c0] += v * fy * (T(1) - fx);
                                r1[c1] += v * fy * fx;
                              }
                            }
                          }
                        });
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> fft2(const Tensor<T>& x) {
  if (x.rank() != 4 || x.dim(2) < 1 || x.dim(3) < 1) {
    throw ContractViolation("fft2: expected [N,C,H,W] with H,W >= 1, got " + shape_str(x.shape()));
  }
  const std::int64_t h = x.dim(2), w = x.dim(3), plane = h * w;
  const std::int64_t planes = x.dim(0) * x.dim(1);
  std::vector<T> re(x.numel()), im(x.numel());
  std::vector<fft::Complex> buffer(plane);
  auto in = x.data();
  for (std::int64_t p = 0; p < planes; ++p) {
    for (std::int64_t i = 0; i < plane; ++i) buffer[i] = fft::Complex(in[p * plane + i], 0.0);
    fft::transform_2d(buffer, h, w);
    for (std::int64_t i = 0; i < plane; ++i) {
      re[p * plane + i] = static_cast<T>(buffer[i].real());
      im[p * plane + i] = static_cast<T>(buffer[i].imag());
    }
  }
  // d Re(X_k)/dx_n = cos(theta_kn) and d Im(X_k)/dx_n = -sin(theta_kn), so
  // the adjoint of each part is the matching part of a forward transform of
  // the incoming gradient.
  auto adjoint = [planes, h, w, plane](Node<T>& self, bool imaginary) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    T* gi = in.grad_buffer();
    std::vector<fft::Complex> buf(plane);
    for (std::int64_t p = 0; p < planes; ++p) {
      for (std::int64_t i = 0; i < plane; ++i) buf[i] = fft::Complex(self.grad[p * plane + i], 0.0);
      fft::transform_2d(buf, h, w);
      for (std::int64_t i = 0; i < plane; ++i) {
        gi[p * plane + i] += static_cast<T>(imaginary ? buf[i].imag() : buf[i].real());
      }
    }
  };
  auto real_part = make_result<T>("fft2.real", x.shape(), std::move(re), {x},
                                  [adjoint](Node<T>& self) { adjoint(self, false); });
  auto imag_part = make_result<T>("fft2.imag", x.shape(), std::move(im), {x},
                                  [adjoint](Node<T>& self) { adjoint(self, true); });
  return {real_part, imag_part};
}

template Tensor<float> softmax_lastdim(const Tensor<float>&);
template Tensor<double> softmax_lastdim(const Tensor<double>&);
template Tensor<float> resize_bilinear(const Tensor<float>&, Ratio);
template Tensor<double> resize_bilinear(const Tensor<double>&, Ratio);
template std::pair<Tensor<float>, Tensor<float>> fft2(const Tensor<float>&);
template std::pair<Tensor<double>, Tensor<double>> fft2(const Tensor<double>&);

}  // namespace lfe::ops
