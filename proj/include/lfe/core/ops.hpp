#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lfe/core/tensor.hpp"

// Differentiable kernels. Every function records itself on the tape when
// gradient mode is on and an input requires a gradient. Image-like tensors
// are [N, C, H, W].
namespace lfe::ops {

// Elementwise, identical shapes.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& x, T factor);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& x, T offset);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> relu(const Tensor<T>& x);

// Reductions to a scalar (shape []).
template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);
template <typename T> Tensor<T> abs_sum(const Tensor<T>& x);

/// [N,C,H,W] -> [N,C,1,1].
template <typename T> Tensor<T> global_avg_pool(const Tensor<T>& x);
/// x[N,C,H,W] * gate[N,C,1,1] broadcast over H and W.
template <typename T> Tensor<T> mul_channels(const Tensor<T>& x, const Tensor<T>& gate);

template <typename T> Tensor<T> concat_channels(std::span<const Tensor<T>> parts);
template <typename T> Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
/// Channels [begin, end) of x.
template <typename T> Tensor<T> slice_channels(const Tensor<T>& x, std::int64_t begin, std::int64_t end);
/// Splits x into `parts` equal channel groups.
template <typename T> std::vector<Tensor<T>> split_channels(const Tensor<T>& x, std::int64_t parts);

template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
/// 4-D axis permutation: out.shape[i] = x.shape[perm[i]].
template <typename T> Tensor<T> permute(const Tensor<T>& x, std::array<int, 4> perm);

/// out[n,c,i,j] = x[n,c,rows[i],cols[j]]. Backs padding and cropping.
template <typename T>
Tensor<T> gather_spatial(const Tensor<T>& x, std::vector<std::int64_t> rows, std::vector<std::int64_t> cols);
/// Reflect-pads the bottom and right edges.
template <typename T> Tensor<T> pad_reflect(const Tensor<T>& x, std::int64_t pad_bottom, std::int64_t pad_right);
template <typename T>
Tensor<T> crop(const Tensor<T>& x, std::int64_t top, std::int64_t left, std::int64_t height, std::int64_t width);

/// Cross-correlation. weight [Cout,Cin,kh,kw]; bias [Cout] or undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                 int padding);

/// Transposed convolution. weight [Cin,Cout,4,4]; only stride 2, padding 1
/// (exact doubling) is accepted.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                           int stride = 2, int padding = 1);

/// Numerically stable softmax over the last axis.
template <typename T> Tensor<T> softmax_lastdim(const Tensor<T>& x);

/// a [N,H,P,C] x b [N,H,C,Q] -> [N,H,P,Q]: one matrix product per image row.
template <typename T> Tensor<T> batched_row_matmul(const Tensor<T>& a, const Tensor<T>& b);

struct Ratio {
  int num = 1;
  int den = 1;
};

/// Bilinear resampling with half-pixel centers (align_corners = false).
template <typename T> Tensor<T> resize_bilinear(const Tensor<T>& x, Ratio scale);

/// Unnormalized forward 2-D DFT of each [H,W] plane; returns (real, imag).
template <typename T> std::pair<Tensor<T>, Tensor<T>> fft2(const Tensor<T>& x);

/// Gaussian samples from a dedicated seeded generator (leaf tensor).
template <typename T> Tensor<T> random_normal(Shape shape, std::uint64_t seed, T mean = T(0), T stddev = T(1));
/// Uniform samples in [low, high) from a dedicated seeded generator.
template <typename T> Tensor<T> random_uniform(Shape shape, std::uint64_t seed, T low = T(0), T high = T(1));

}  // namespace lfe::ops
