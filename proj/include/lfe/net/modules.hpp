#pragma once

#include <string>
#include <vector>

#include "lfe/core/tensor.hpp"
#include "lfe/net/config.hpp"
#include "lfe/net/parameters.hpp"

namespace lfe::net {

/// Row-stochastic parallax attention maps of one interaction level, each
/// [N,H_s,W_s,W_s] with softmax taken over the last dimension.
template <typename T>
struct AttentionPair {
  int level = 0;
  Tensor<T> t_r2l, t_l2r;
};

/// Squeeze-excite gate: x * sigmoid(fc2(relu(fc1(gap(x))))) per channel.
template <typename T>
Tensor<T> channel_attention(const Tensor<T>& x, const ParameterStore<T>& p, const std::string& prefix);

/// Channel attention over concat(x_low, x_lowfre): the 6-channel input space.
template <typename T>
Tensor<T> iem_forward(const Tensor<T>& x_low, const Tensor<T>& x_lowfre, const ParameterStore<T>& p);

/// x[:C/2] * x[C/2:].
template <typename T>
Tensor<T> simple_gate(const Tensor<T>& x);

/// Stage 1: y = x + CA(convKxK(conv1x1(x))). Stage 2: z = y + compress(SG(expand(y))).
template <typename T>
Tensor<T> csm_forward(const Tensor<T>& x, const ParameterStore<T>& p, const std::string& prefix,
                      const NetworkConfig& cfg);

/// Features F_1..F_scales; level k has channels(k) channels at 1/2^(k-1) size.
template <typename T>
std::vector<Tensor<T>> encoder_forward(const Tensor<T>& view, const ParameterStore<T>& p, const NetworkConfig& cfg);

template <typename T>
struct CvmiResult {
  Tensor<T> r_l, r_r;
  AttentionPair<T> attention;
};

/// Parallax attention at one level. Q and K come from a dedicated CSM and
/// 3x3 conv shared by both views; with use_cvmi off the inputs pass through
/// and the attention maps are left undefined.
template <typename T>
CvmiResult<T> cvmi_forward(const Tensor<T>& f_l, const Tensor<T>& f_r, int level, const ParameterStore<T>& p,
                           const NetworkConfig& cfg);

/// Fuses the interaction levels of one view: every target level concatenates
/// all levels resampled to its size, then 1x1 conv and CSM.
template <typename T>
std::vector<Tensor<T>> csfi_forward(const std::vector<Tensor<T>>& r, const ParameterStore<T>& p,
                                    const NetworkConfig& cfg);

/// d_k = CSM(up(d_{k+1})) + e_k from the bottom feature upward; head maps to RGB.
template <typename T>
Tensor<T> decoder_forward(const std::vector<Tensor<T>>& e, const Tensor<T>& bottom, const ParameterStore<T>& p,
                          const NetworkConfig& cfg);

template <typename T>
struct NetworkOutput {
  Tensor<T> h_l, h_r;  // [N,3,H,W], unclamped
  std::vector<AttentionPair<T>> attention;
  std::int64_t pad_bottom = 0, pad_right = 0;
};

/// Full stereo pass. Inputs are [N,3,H,W]; the low-frequency images are
/// precomputed by the caller (see lowfre_image). Extents that are not
/// multiples of size_multiple() are reflect-padded and the output cropped.
template <typename T>
NetworkOutput<T> network_forward(const Tensor<T>& low_l, const Tensor<T>& low_r, const Tensor<T>& lowfre_l,
                                 const Tensor<T>& lowfre_r, const ParameterStore<T>& p, const NetworkConfig& cfg);

/// Convenience overload that filters the inputs itself.
template <typename T>
NetworkOutput<T> network_forward(const Tensor<T>& low_l, const Tensor<T>& low_r, const ParameterStore<T>& p,
                                 const NetworkConfig& cfg);

/// Side-window low-frequency part used by the IEM.
template <typename T>
Tensor<T> lowfre_image(const Tensor<T>& low, const NetworkConfig& cfg);

/// Max |row sum - 1| over both maps, or +inf when a value is non-finite.
template <typename T>
double attention_row_error(const AttentionPair<T>& pair);

}  // namespace lfe::net
