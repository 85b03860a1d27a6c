#include <Eigen/Core>

#include "lfe/core/ops.hpp"

namespace lfe::ops {
namespace {

using detail::make_result;
using detail::Node;

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

// Geometry of a strided, zero-padded window sweep over a [C,H,W] image
// producing [C*kh*kw, out_h*out_w] patch columns.
struct Sweep {
  std::int64_t channels, height, width, kh, kw, stride, pad, out_h, out_w;
  std::int64_t rows() const { return channels * kh * kw; }
  std::int64_t cols() const { return out_h * out_w; }
  bool trivial() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

template <typename T>
void im2col(const T* image, const Sweep& s, T* col) {
  for (std::int64_t c = 0; c < s.channels; ++c) {
    for (std::int64_t ky = 0; ky < s.kh; ++ky) {
      for (std::int64_t kx = 0; kx < s.kw; ++kx) {
        T* dst = col + ((c * s.kh + ky) * s.kw + kx) * s.cols();
        for (std::int64_t oy = 0; oy < s.out_h; ++oy) {
          const std::int64_t y = oy * s.stride - s.pad + ky;
          T* row = dst + oy * s.out_w;
          if (y < 0 || y >= s.height) {
            std::fill_n(row, s.out_w, T(0));
            continue;
          }
          const T* src = image + (c * s.height + y) * s.width;
          for (std::int64_t ox = 0; ox < s.out_w; ++ox) {
            const std::int64_t x = ox * s.stride - s.pad + kx;
            row[ox] = (x >= 0 && x < s.width) ? src[x] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const Sweep& s, T* image) {
  for (std::int64_t c = 0; c < s.channels; ++c) {
    for (std::int64_t ky = 0; ky < s.kh; ++ky) {
      for (std::int64_t kx = 0; kx < s.kw; ++kx) {
        const T* src = col + ((c * s.kh + ky) * s.kw + kx) * s.cols();
        for (std::int64_t oy = 0; oy < s.out_h; ++oy) {
          const std::int64_t y = oy * s.stride - s.pad + ky;
          if (y < 0 || y >= s.height) continue;
          T* dst = image + (c * s.height + y) * s.width;
          const T* row = src + oy * s.out_w;
          for (std::int64_t ox = 0; ox < s.out_w; ++ox) {
            const std::int64_t x = ox * s.stride - s.pad + kx;
            if (x >= 0 && x < s.width) dst[x] += row[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void check_bias(const char* op, const Tensor<T>& bias, std::int64_t channels) {
  if (bias.defined() && bias.shape() != Shape{channels}) {
    throw ContractViolation(std::string(op) + ": bias " + shape_str(bias.shape()) + " does not match " +
                            std::to_string(channels) + " output channels");
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, int stride, int padding) {
  if (input.rank() != 4 || weight.rank() != 4) {
    throw ContractViolation("conv2d: expected 4-D input and weight, got " + shape_str(input.shape()) + " and " +
                            shape_str(weight.shape()));
  }
  if (input.dim(1) != weight.dim(1)) {
    throw ContractViolation("conv2d: input " + shape_str(input.shape()) + " has " + std::to_string(input.dim(1)) +
                            " channels but weight " + shape_str(weight.shape()) + " expects " +
                            std::to_string(weight.dim(1)));
  }
  if (stride < 1 || padding < 0) throw ContractViolation("conv2d: stride must be >= 1 and padding >= 0");
  const std::int64_t n = input.dim(0), cout = weight.dim(0);
  Sweep s{input.dim(1), input.dim(2), input.dim(3), weight.dim(2), weight.dim(3), stride, padding, 0, 0};
  if (s.kh % 2 == 0 || s.kw % 2 == 0) {
    throw ContractViolation("conv2d: kernel extents must be odd, got " + shape_str(weight.shape()));
  }
  if (s.height + 2 * padding < s.kh || s.width + 2 * padding < s.kw) {
    throw ContractViolation("conv2d: kernel " + shape_str(weight.shape()) + " larger than padded input " +
                            shape_str(input.shape()));
  }
  check_bias("conv2d", bias, cout);
  s.out_h = (s.height + 2 * padding - s.kh) / stride + 1;
  s.out_w = (s.width + 2 * padding - s.kw) / stride + 1;

  const std::int64_t in_size = s.channels * s.height * s.width;
  const std::int64_t out_plane = s.cols();
  std::vector<T> out(n * cout * out_plane);
  std::vector<T> col(s.trivial() ? 0 : s.rows() * s.cols());
  ConstMatMap<T> w(weight.data().data(), cout, s.rows());
  for (std::int64_t b = 0; b < n; ++b) {
    const T* x = input.data().data() + b * in_size;
    if (!s.trivial()) im2col(x, s, col.data());
    ConstMatMap<T> patches(s.trivial() ? x : col.data(), s.rows(), s.cols());
    MatMap<T> y(out.data() + b * cout * out_plane, cout, out_plane);
    y.noalias() = w * patches;
    if (bias.defined()) {
      for (std::int64_t co = 0; co < cout; ++co) y.row(co).array() += bias.data()[co];
    }
  }

  std::vector<Tensor<T>> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result<T>("conv2d", Shape{n, cout, s.out_h, s.out_w}, std::move(out), std::move(inputs),
                        [s, n, cout](Node<T>& self) {
                          auto& in = *self.inputs[0];
                          auto& wt = *self.inputs[1];
                          const std::int64_t in_size = s.channels * s.height * s.width;
                          const std::int64_t out_plane = s.cols();
                          std::vector<T> col(s.trivial() ? 0 : s.rows() * s.cols());
                          std::vector<T> dcol(s.trivial() ? 0 : s.rows() * s.cols());
                          ConstMatMap<T> w(wt.data.data(), cout, s.rows());
                          for (std::int64_t b = 0; b < n; ++b) {
                            ConstMatMap<T> dy(self.grad.data() + b * cout * out_plane, cout, out_plane);
                            if (wt.requires_grad) {
                              const T* x = in.data.data() + b * in_size;
                              if (!s.trivial()) im2col(x, s, col.data());
                              ConstMatMap<T> patches(s.trivial() ? x : col.data(), s.rows(), s.cols());
                              MatMap<T> dw(wt.grad_buffer(), cout, s.rows());
                              dw.noalias() += dy * patches.transpose();
                            }
                            if (in.requires_grad) {
                              T* dx = in.grad_buffer() + b * in_size;
                              if (s.trivial()) {
                                MatMap<T> dxm(dx, s.rows(), s.cols());
                                dxm.noalias() += w.transpose() * dy;
                              } else {
                                MatMap<T> dc(dcol.data(), s.rows(), s.cols());
                                dc.noalias() = w.transpose() * dy;
                                col2im_add(dcol.data(), s, dx);
                              }
                            }
                            if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
                              T* db = self.inputs[2]->grad_buffer();
                              const T* g = self.grad.data() + b * cout * out_plane;
                              for (std::int64_t co = 0; co < cout; ++co) {
                                T acc = 0;
                                for (std::int64_t i = 0; i < out_plane; ++i) acc += g[co * out_plane + i];
                                db[co] += acc;
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                           int padding) {
  if (input.rank() != 4 || weight.rank() != 4) {
    throw ContractViolation("conv_transpose2d: expected 4-D input and weight, got " + shape_str(input.shape()) +
                            " and " + shape_str(weight.shape()));
  }
  if (stride != 2 || padding != 1 || weight.dim(2) != 4 || weight.dim(3) != 4) {
    throw ContractViolation("conv_transpose2d: only kernel 4, stride 2, padding 1 doubles the extent exactly");
  }
  if (input.dim(1) != weight.dim(0)) {
    throw ContractViolation("conv_transpose2d: input " + shape_str(input.shape()) + " does not match weight " +
                            shape_str(weight.shape()));
  }
  const std::int64_t n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::int64_t cout = weight.dim(1);
  check_bias("conv_transpose2d", bias, cout);
  // The output grid plays the role of the image in a stride-2 sweep whose
  // patch grid is the input grid.
  const Sweep s{cout, 2 * h, 2 * w, 4, 4, stride, padding, h, w};
  const std::int64_t out_size = cout * s.height * s.width;
  std::vector<T> out(n * out_size, T(0));
  std::vector<T> col(s.rows() * s.cols());
  ConstMatMap<T> wm(weight.data().data(), cin, s.rows());
  for (std::int64_t b = 0; b < n; ++b) {
    ConstMatMap<T> x(input.data().data() + b * cin * h * w, cin, h * w);
    MatMap<T> c(col.data(), s.rows(), s.cols());
    c.noalias() = wm.transpose() * x;
    T* y = out.data() + b * out_size;
    col2im_add(col.data(), s, y);
    if (bias.defined()) {
      const std::int64_t plane = s.height * s.width;
      for (std::int64_t co = 0; co < cout; ++co)
        for (std::int64_t i = 0; i < plane; ++i) y[co * plane + i] += bias.data()[co];
    }
  }
  std::vector<Tensor<T>> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result<T>("conv_transpose2d", Shape{n, cout, 2 * h, 2 * w}, std::move(out), std::move(inputs),
                        [s, n, cin](Node<T>& self) {
                          auto& in = *self.inputs[0];
                          auto& wt = *self.inputs[1];
                          const std::int64_t out_size = s.channels * s.height * s.width;
                          const std::int64_t in_plane = s.cols();
                          std::vector<T> dcol(s.rows() * s.cols());
                          ConstMatMap<T> wm(wt.data.data(), cin, s.rows());
                          for (std::int64_t b = 0; b < n; ++b) {
                            const T* dy = self.grad.data() + b * out_size;
                            im2col(dy, s, dcol.data());
                            ConstMatMap<T> dc(dcol.data(), s.rows(), s.cols());
                            if (in.requires_grad) {
                              MatMap<T> dx(in.grad_buffer() + b * cin * in_plane, cin, in_plane);
                              dx.noalias() += wm * dc;
                            }
                            if (wt.requires_grad) {
                              ConstMatMap<T> x(in.data.data() + b * cin * in_plane, cin, in_plane);
                              MatMap<T> dw(wt.grad_buffer(), cin, s.rows());
                              dw.noalias() += x * dc.transpose();
                            }
                            if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
                              T* db = self.inputs[2]->grad_buffer();
                              const std::int64_t plane = s.height * s.width;
                              for (std::int64_t co = 0; co < s.channels; ++co) {
                                T acc = T(0);
                                for (std::int64_t i = 0; i < plane; ++i) acc += dy[co * plane + i];
                                db[co] += acc;
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> batched_row_matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 4 || b.rank() != 4 || a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1) || a.dim(3) != b.dim(2)) {
    throw ContractViolation("batched_row_matmul: incompatible " + shape_str(a.shape()) + " and " +
                            shape_str(b.shape()));
  }
  const std::int64_t batches = a.dim(0) * a.dim(1), p = a.dim(2), c = a.dim(3), q = b.dim(3);
  std::vector<T> out(batches * p * q);
  for (std::int64_t k = 0; k < batches; ++k) {
    ConstMatMap<T> am(a.data().data() + k * p * c, p, c);
    ConstMatMap<T> bm(b.data().data() + k * c * q, c, q);
    MatMap<T> om(out.data() + k * p * q, p, q);
    om.noalias() = am * bm;
  }
  return make_result<T>("batched_row_matmul", Shape{a.dim(0), a.dim(1), p, q}, std::move(out), {a, b},
                        [batches, p, c, q](Node<T>& self) {
                          auto& an = *self.inputs[0];
                          auto& bn = *self.inputs[1];
                          for (std::int64_t k = 0; k < batches; ++k) {
                            ConstMatMap<T> g(self.grad.data() + k * p * q, p, q);
                            if (an.requires_grad) {
                              ConstMatMap<T> bm(bn.data.data() + k * c * q, c, q);
                              MatMap<T> ga(an.grad_buffer() + k * p * c, p, c);
                              ga.noalias() += g * bm.transpose();
                            }
                            if (bn.requires_grad) {
                              ConstMatMap<T> am(an.data.data() + k * p * c, p, c);
                              MatMap<T> gb(bn.grad_buffer() + k * c * q, c, q);
                              gb.noalias() += am.transpose() * g;
                            }
                          }
                        });
}

template Tensor<float> conv2d(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&, int, int);
template Tensor<double> conv2d(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&, int, int);
template Tensor<float> conv_transpose2d(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&, int, int);
template Tensor<double> conv_transpose2d(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&, int,
                                         int);
template Tensor<float> batched_row_matmul(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> batched_row_matmul(const Tensor<double>&, const Tensor<double>&);

}  // namespace lfe::ops
