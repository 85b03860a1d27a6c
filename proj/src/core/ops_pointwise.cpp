#include <algorithm>
#include <cmath>
#include <random>

#include "lfe/core/ops.hpp"

namespace lfe::ops {
namespace {

using detail::make_result;
using detail::Node;

template <typename T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ContractViolation(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                            shape_str(b.shape()));
  }
}

template <typename T>
void require_rank4(const char* op, const Tensor<T>& x) {
  if (x.rank() != 4) {
    throw ContractViolation(std::string(op) + ": expected [N,C,H,W], got " + shape_str(x.shape()));
  }
}

// Accumulates `scale_fn(i)` into input `k`'s gradient when it is tracked.
template <typename T, typename F>
void accumulate(Node<T>& self, std::size_t k, F&& contribution) {
  auto& in = *self.inputs[k];
  if (!in.requires_grad) return;
  T* g = in.grad_buffer();
  const std::size_t n = in.data.size();
  for (std::size_t i = 0; i < n; ++i) g[i] += contribution(i);
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("add", a, b);
  std::vector<T> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return make_result<T>("add", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    const T* g = self.grad.data();
    accumulate(self, 0, [g](std::size_t i) { return g[i]; });
    accumulate(self, 1, [g](std::size_t i) { return g[i]; });
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("sub", a, b);
  std::vector<T> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return make_result<T>("sub", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    const T* g = self.grad.data();
    accumulate(self, 0, [g](std::size_t i) { return g[i]; });
    accumulate(self, 1, [g](std::size_t i) { return -g[i]; });
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("mul", a, b);
  std::vector<T> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return make_result<T>("mul", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    const T* g = self.grad.data();
    const T* x = self.inputs[0]->data.data();
    const T* y = self.inputs[1]->data.data();
    accumulate(self, 0, [g, y](std::size_t i) { return g[i] * y[i]; });
    accumulate(self, 1, [g, x](std::size_t i) { return g[i] * x[i]; });
  });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("div", a, b);
  std::vector<T> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] / y[i];
  return make_result<T>("div", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    const T* g = self.grad.data();
    const T* x = self.inputs[0]->data.data();
    const T* y = self.inputs[1]->data.data();
    accumulate(self, 0, [g, y](std::size_t i) { return g[i] / y[i]; });
    accumulate(self, 1, [g, x, y](std::size_t i) { return -g[i] * x[i] / (y[i] * y[i]); });
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (auto& v : out) v *= factor;
  return make_result<T>("scale", x.shape(), std::move(out), {x}, [factor](Node<T>& self) {
    const T* g = self.grad.data();
    accumulate(self, 0, [g, factor](std::size_t i) { return g[i] * factor; });
  });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T offset) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (auto& v : out) v += offset;
  return make_result<T>("add_scalar", x.shape(), std::move(out), {x}, [](Node<T>& self) {
    const T* g = self.grad.data();
    accumulate(self, 0, [g](std::size_t i) { return g[i]; });
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    // Branch on sign so exp() never overflows.
    const T v = in[i];
    if (v >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  }
  return make_result<T>("sigmoid", x.shape(), std::move(out), {x}, [](Node<T>& self) {
    const T* g = self.grad.data();
    const T* y = self.data.data();
    accumulate(self, 0, [g, y](std::size_t i) { return g[i] * y[i] * (T(1) - y[i]); });
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
  return make_result<T>("relu", x.shape(), std::move(out), {x}, [](Node<T>& self) {
    const T* g = self.grad.data();
    const T* x = self.inputs[0]->data.data();
    accumulate(self, 0, [g, x](std::size_t i) { return x[i] > T(0) ? g[i] : T(0); });
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = T(0);
  for (T v : x.data()) total += v;
  return make_result<T>("sum", Shape{}, {total}, {x}, [](Node<T>& self) {
    const T g = self.grad[0];
    accumulate(self, 0, [g](std::size_t) { return g; });
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.numel() == 0) throw ContractViolation("mean of an empty tensor");
  const T inv = T(1) / static_cast<T>(x.numel());
  T total = T(0);
  for (T v : x.data()) total += v;
  return make_result<T>("mean", Shape{}, {total * inv}, {x}, [inv](Node<T>& self) {
    const T g = self.grad[0] * inv;
    accumulate(self, 0, [g](std::size_t) { return g; });
  });
}

template <typename T>
Tensor<T> abs_sum(const Tensor<T>& x) {
  T total = T(0);
  for (T v : x.data()) total += std::abs(v);
  return make_result<T>("abs_sum", Shape{}, {total}, {x}, [](Node<T>& self) {
    const T g = self.grad[0];
    const T* x = self.inputs[0]->data.data();
    accumulate(self, 0, [g, x](std::size_t i) {
      return x[i] > T(0) ? g : (x[i] < T(0) ? -g : T(0));
    });
  });
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require_rank4("global_avg_pool", x);
  const auto n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  if (plane == 0) throw ContractViolation("global_avg_pool: empty spatial extent");
  std::vector<T> out(n * c);
  auto in = x.data();
  for (std::int64_t i = 0; i < n * c; ++i) {
    T acc = T(0);
    for (std::int64_t p = 0; p < plane; ++p) acc += in[i * plane + p];
    out[i] = acc / static_cast<T>(plane);
  }
  return make_result<T>("global_avg_pool", Shape{n, c, 1, 1}, std::move(out), {x}, [plane](Node<T>& self) {
    const T* g = self.grad.data();
    const T inv = T(1) / static_cast<T>(plane);
    accumulate(self, 0, [g, plane, inv](std::size_t i) { return g[i / plane] * inv; });
  });
}

template <typename T>
Tensor<T> mul_channels(const Tensor<T>& x, const Tensor<T>& gate) {
  require_rank4("mul_channels", x);
  const Shape expected{x.dim(0), x.dim(1), 1, 1};
  if (gate.shape() != expected) {
    throw ContractViolation("mul_channels: gate " + shape_str(gate.shape()) + " does not match input " +
                            shape_str(x.shape()));
  }
  const auto plane = x.dim(2) * x.dim(3);
  std::vector<T> out(x.numel());
  auto in = x.data();
  auto s = gate.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * s[i / plane];
  return make_result<T>("mul_channels", x.shape(), std::move(out), {x, gate}, [plane](Node<T>& self) {
    const T* g = self.grad.data();
    const T* x = self.inputs[0]->data.data();
    const T* s = self.inputs[1]->data.data();
    accumulate(self, 0, [g, s, plane](std::size_t i) { return g[i] * s[i / plane]; });
    auto& gate_node = *self.inputs[1];
    if (gate_node.requires_grad) {
      T* gg = gate_node.grad_buffer();
      for (std::size_t k = 0; k < gate_node.data.size(); ++k) {
        T acc = T(0);
        for (std::int64_t p = 0; p < plane; ++p) acc += g[k * plane + p] * x[k * plane + p];
        gg[k] += acc;
      }
    }
  });
}

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw ContractViolation("concat_channels: no inputs");
  for (const auto& p : parts) require_rank4("concat_channels", p);
  const auto n = parts[0].dim(0), h = parts[0].dim(2), w = parts[0].dim(3);
  std::int64_t channels = 0;
  std::vector<std::int64_t> offsets;
  for (const auto& p : parts) {
    if (p.dim(0) != n || p.dim(2) != h || p.dim(3) != w) {
      throw ContractViolation("concat_channels: incompatible shapes " + shape_str(parts[0].shape()) + " and " +
                              shape_str(p.shape()));
    }
    offsets.push_back(channels);
    channels += p.dim(1);
  }
  const auto plane = h * w;
  std::vector<T> out(n * channels * plane);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto src = parts[k].data();
    const auto ck = parts[k].dim(1);
    for (std::int64_t b = 0; b < n; ++b) {
      std::copy_n(src.begin() + b * ck * plane, ck * plane, out.begin() + (b * channels + offsets[k]) * plane);
    }
  }
  std::vector<Tensor<T>> inputs(parts.begin(), parts.end());
  return make_result<T>("concat_channels", Shape{n, channels, h, w}, std::move(out), std::move(inputs),
                        [offsets, channels, plane, n](Node<T>& self) {
                          const T* g = self.grad.data();
                          for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                            auto& in = *self.inputs[k];
                            if (!in.requires_grad) continue;
                            T* gi = in.grad_buffer();
                            const auto ck = in.shape[1];
                            for (std::int64_t b = 0; b < n; ++b) {
                              const T* src = g + (b * channels + offsets[k]) * plane;
                              T* dst = gi + b * ck * plane;
                              for (std::int64_t i = 0; i < ck * plane; ++i) dst[i] += src[i];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const Tensor<T> parts[] = {a, b};
  return concat_channels<T>(std::span<const Tensor<T>>(parts));
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::int64_t begin, std::int64_t end) {
  require_rank4("slice_channels", x);
  const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (begin < 0 || end > c || begin >= end) {
    throw ContractViolation("slice_channels: range [" + std::to_string(begin) + "," + std::to_string(end) +
                            ") invalid for " + shape_str(x.shape()));
  }
  const auto plane = h * w, cs = end - begin;
  std::vector<T> out(n * cs * plane);
  auto src = x.data();
  for (std::int64_t b = 0; b < n; ++b) {
    std::copy_n(src.begin() + (b * c + begin) * plane, cs * plane, out.begin() + b * cs * plane);
  }
  return make_result<T>("slice_channels", Shape{n, cs, h, w}, std::move(out), {x},
                        [n, c, cs, begin, plane](Node<T>& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          T* gi = in.grad_buffer();
                          const T* g = self.grad.data();
                          for (std::int64_t b = 0; b < n; ++b) {
                            T* dst = gi + (b * c + begin) * plane;
                            const T* s = g + b * cs * plane;
                            for (std::int64_t i = 0; i < cs * plane; ++i) dst[i] += s[i];
                          }
                        });
}

template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& x, std::int64_t parts) {
  require_rank4("split_channels", x);
  if (parts <= 0 || x.dim(1) % parts != 0) {
    throw ContractViolation("split_channels: " + std::to_string(x.dim(1)) + " channels not divisible into " +
                            std::to_string(parts) + " parts");
  }
  const auto step = x.dim(1) / parts;
  std::vector<Tensor<T>> out;
  for (std::int64_t k = 0; k < parts; ++k) out.push_back(slice_channels(x, k * step, (k + 1) * step));
  return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ContractViolation("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return make_result<T>("reshape", std::move(shape), std::move(out), {x}, [](Node<T>& self) {
    const T* g = self.grad.data();
    accumulate(self, 0, [g](std::size_t i) { return g[i]; });
  });
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, std::array<int, 4> perm) {
  if (x.rank() != 4) throw ContractViolation("permute: expected rank 4, got " + shape_str(x.shape()));
  std::array<bool, 4> seen{};
  for (int p : perm) {
    if (p < 0 || p > 3 || seen[p]) throw ContractViolation("permute: invalid axis permutation");
    seen[p] = true;
  }
  const auto& in_shape = x.shape();
  std::array<std::int64_t, 4> in_stride{in_shape[1] * in_shape[2] * in_shape[3], in_shape[2] * in_shape[3],
                                        in_shape[3], 1};
  Shape out_shape{in_shape[perm[0]], in_shape[perm[1]], in_shape[perm[2]], in_shape[perm[3]]};
  std::array<std::int64_t, 4> stride{in_stride[perm[0]], in_stride[perm[1]], in_stride[perm[2]],
                                     in_stride[perm[3]]};
  // Source offset of every output element, shared by forward and backward.
  auto index = std::make_shared<std::vector<std::int64_t>>(x.numel());
  std::size_t k = 0;
  for (std::int64_t a = 0; a < out_shape[0]; ++a)
    for (std::int64_t b = 0; b < out_shape[1]; ++b)
      for (std::int64_t c = 0; c < out_shape[2]; ++c)
        for (std::int64_t d = 0; d < out_shape[3]; ++d)
          (*index)[k++] = a * stride[0] + b * stride[1] + c * stride[2] + d * stride[3];
  std::vector<T> out(x.numel());
  auto src = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = src[(*index)[i]];
  return make_result<T>("permute", std::move(out_shape), std::move(out), {x}, [index](Node<T>& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    T* gi = in.grad_buffer();
    const T* g = self.grad.data();
    for (std::size_t i = 0; i < index->size(); ++i) gi[(*index)[i]] += g[i];
  });
}

template <typename T>
Tensor<T> gather_spatial(const Tensor<T>& x, std::vector<std::int64_t> rows, std::vector<std::int64_t> cols) {
  require_rank4("gather_spatial", x);
  const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  for (auto r : rows)
    if (r < 0 || r >= h) throw ContractViolation("gather_spatial: row index out of range");
  for (auto q : cols)
    if (q < 0 || q >= w) throw ContractViolation("gather_spatial: column index out of range");
  const auto oh = static_cast<std::int64_t>(rows.size()), ow = static_cast<std::int64_t>(cols.size());
  std::vector<T> out(n * c * oh * ow);
  auto src = x.data();
  for (std::int64_t p = 0; p < n * c; ++p)
    for (std::int64_t i = 0; i < oh; ++i)
      for (std::int64_t j = 0; j < ow; ++j) out[(p * oh + i) * ow + j] = src[(p * h + rows[i]) * w + cols[j]];
  return make_result<T>("gather_spatial", Shape{n, c, oh, ow}, std::move(out), {x},
                        [rows = std::move(rows), cols = std::move(cols), n, c, h, w](Node<T>& self) {
                          auto& in = *self.inputs[0];
                          if (!in.requires_grad) return;
                          T* gi = in.grad_buffer();
                          const T* g = self.grad.data();
                          const auto oh = static_cast<std::int64_t>(rows.size());
                          const auto ow = static_cast<std::int64_t>(cols.size());
                          for (std::int64_t p = 0; p < n * c; ++p)
                            for (std::int64_t i = 0; i < oh; ++i)
                              for (std::int64_t j = 0; j < ow; ++j)
                                gi[(p * h + rows[i]) * w + cols[j]] += g[(p * oh + i) * ow + j];
                        });
}

namespace {
// Reflection without edge repeat (..., 2, 1, 0, 1, 2, ...), folded until the
// index lands inside [0, n).
std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}
}  // namespace

template <typename T>
Tensor<T> pad_reflect(const Tensor<T>& x, std::int64_t pad_bottom, std::int64_t pad_right) {
  require_rank4("pad_reflect", x);
  if (pad_bottom < 0 || pad_right < 0) throw ContractViolation("pad_reflect: negative padding");
  std::vector<std::int64_t> rows(x.dim(2) + pad_bottom), cols(x.dim(3) + pad_right);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = reflect_index(static_cast<std::int64_t>(i), x.dim(2));
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = reflect_index(static_cast<std::int64_t>(j), x.dim(3));
  return gather_spatial(x, std::move(rows), std::move(cols));
}

template <typename T>
Tensor<T> crop(const Tensor<T>& x, std::int64_t top, std::int64_t left, std::int64_t height, std::int64_t width) {
  require_rank4("crop", x);
  if (top < 0 || left < 0 || height <= 0 || width <= 0 || top + height > x.dim(2) || left + width > x.dim(3)) {
    throw ContractViolation("crop: window out of bounds for " + shape_str(x.shape()));
  }
  std::vector<std::int64_t> rows(height), cols(width);
  for (std::int64_t i = 0; i < height; ++i) rows[i] = top + i;
  for (std::int64_t j = 0; j < width; ++j) cols[j] = left + j;
  return gather_spatial(x, std::move(rows), std::move(cols));
}

template <typename T>
Tensor<T> random_normal(Shape shape, std::uint64_t seed, T mean, T stddev) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(static_cast<double>(mean), static_cast<double>(stddev));
  std::vector<T> values(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : values) v = static_cast<T>(dist(rng));
  return Tensor<T>(std::move(shape), std::move(values));
}

template <typename T>
Tensor<T> random_uniform(Shape shape, std::uint64_t seed, T low, T high) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(static_cast<double>(low), static_cast<double>(high));
  std::vector<T> values(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : values) v = static_cast<T>(dist(rng));
  return Tensor<T>(std::move(shape), std::move(values));
}

#define LFE_INSTANTIATE(T)                                                                             \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                         \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                         \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                         \
  template Tensor<T> div(const Tensor<T>&, const Tensor<T>&);                                         \
  template Tensor<T> scale(const Tensor<T>&, T);                                                      \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                                 \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                       \
  template Tensor<T> relu(const Tensor<T>&);                                                          \
  template Tensor<T> sum(const Tensor<T>&);                                                           \
  template Tensor<T> mean(const Tensor<T>&);                                                          \
  template Tensor<T> abs_sum(const Tensor<T>&);                                                       \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                               \
  template Tensor<T> mul_channels(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> concat_channels(std::span<const Tensor<T>>);                                     \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> slice_channels(const Tensor<T>&, std::int64_t, std::int64_t);                    \
  template std::vector<Tensor<T>> split_channels(const Tensor<T>&, std::int64_t);                     \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                \
  template Tensor<T> permute(const Tensor<T>&, std::array<int, 4>);                                   \
  template Tensor<T> gather_spatial(const Tensor<T>&, std::vector<std::int64_t>, std::vector<std::int64_t>); \
  template Tensor<T> pad_reflect(const Tensor<T>&, std::int64_t, std::int64_t);                       \
  template Tensor<T> crop(const Tensor<T>&, std::int64_t, std::int64_t, std::int64_t, std::int64_t);  \
  template Tensor<T> random_normal(Shape, std::uint64_t, T, T);                                       \
  template Tensor<T> random_uniform(Shape, std::uint64_t, T, T);

LFE_INSTANTIATE(float)
LFE_INSTANTIATE(double)
#undef LFE_INSTANTIATE

}  // namespace lfe::ops
