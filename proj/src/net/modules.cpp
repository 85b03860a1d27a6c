#include "lfe/net/modules.hpp"

#include <cassert>
#include <cmath>

#include "lfe/core/ops.hpp"

namespace lfe::net {

namespace {

template <typename T>
Tensor<T> conv(const Tensor<T>& x, const ParameterStore<T>& p, const std::string& name, int stride = 1,
               int pad = 0) {
  return ops::conv2d(x, p.get(name + ".weight"), p.get(name + ".bias"), stride, pad);
}

template <typename T>
Tensor<T> csm_chain(Tensor<T> x, const ParameterStore<T>& p, const std::string& prefix, const NetworkConfig& cfg) {
  for (int j = 0; j < cfg.csm_per_level; ++j) x = csm_forward(x, p, prefix + ".csm" + std::to_string(j), cfg);
  return x;
}

std::string level_name(const char* module, int level) { return std::string(module) + ".level" + std::to_string(level); }

ops::Ratio resample_ratio(int from, int to) {
  if (from >= to) return {1 << (from - to), 1};
  return {1, 1 << (to - from)};
}

}  // namespace

template <typename T>
Tensor<T> channel_attention(const Tensor<T>& x, const ParameterStore<T>& p, const std::string& prefix) {
  auto hidden = ops::relu(conv(ops::global_avg_pool(x), p, prefix + ".fc1"));
  auto gate = ops::sigmoid(conv(hidden, p, prefix + ".fc2"));
  return ops::mul_channels(x, gate);
}

template <typename T>
Tensor<T> iem_forward(const Tensor<T>& x_low, const Tensor<T>& x_lowfre, const ParameterStore<T>& p) {
  if (x_low.shape() != x_lowfre.shape()) {
    throw ContractViolation("iem_forward: image " + shape_str(x_low.shape()) + " and low-frequency part " +
                            shape_str(x_lowfre.shape()) + " differ");
  }
  return channel_attention(ops::concat_channels(x_low, x_lowfre), p, "iem.ca");
}

template <typename T>
Tensor<T> simple_gate(const Tensor<T>& x) {
  if (x.rank() != 4 || x.dim(1) % 2 != 0) {
    throw ContractViolation("simple_gate needs an even channel count, got " + shape_str(x.shape()));
  }
  auto halves = ops::split_channels(x, 2);
  return ops::mul(halves[0], halves[1]);
}

template <typename T>
Tensor<T> csm_forward(const Tensor<T>& x, const ParameterStore<T>& p, const std::string& prefix,
                      const NetworkConfig& cfg) {
  Tensor<T> y = x;
  if (cfg.use_csm_stage1) {
    const auto k = std::to_string(cfg.large_kernel);
    auto branch = conv(conv(x, p, prefix + ".stage1.conv1x1"), p, prefix + ".stage1.conv" + k + "x" + k, 1,
                       cfg.large_kernel / 2);
    y = ops::add(x, channel_attention(branch, p, prefix + ".stage1.ca"));
  }
  if (cfg.use_csm_stage2) {
    auto branch = conv(simple_gate(conv(y, p, prefix + ".stage2.expand")), p, prefix + ".stage2.compress");
    y = ops::add(y, branch);
  }
  return y;
}

template <typename T>
std::vector<Tensor<T>> encoder_forward(const Tensor<T>& view, const ParameterStore<T>& p, const NetworkConfig& cfg) {
  const int m = cfg.size_multiple();
  if (view.rank() != 4 || view.dim(2) % m != 0 || view.dim(3) % m != 0) {
    throw ContractViolation("encoder_forward: spatial extents of " + shape_str(view.shape()) +
                            " must be multiples of " + std::to_string(m));
  }
  std::vector<Tensor<T>> features;
  features.push_back(csm_chain(conv(view, p, "encoder.stem"), p, level_name("encoder", 1), cfg));
  for (int k = 2; k <= cfg.scales; ++k) {
    const auto level = level_name("encoder", k);
    features.push_back(csm_chain(conv(features.back(), p, level + ".down", 2, 1), p, level, cfg));
  }
  return features;
}

template <typename T>
CvmiResult<T> cvmi_forward(const Tensor<T>& f_l, const Tensor<T>& f_r, int level, const ParameterStore<T>& p,
                           const NetworkConfig& cfg) {
  if (f_l.shape() != f_r.shape()) {
    throw ContractViolation("cvmi_forward: views differ, " + shape_str(f_l.shape()) + " vs " +
                            shape_str(f_r.shape()));
  }
  CvmiResult<T> out;
  out.attention.level = level;
  if (!cfg.use_cvmi) {
    out.r_l = f_l;
    out.r_r = f_r;
    return out;
  }
  const auto prefix = level_name("cvmi", level);
  auto project = [&](const Tensor<T>& f) { return conv(csm_chain(f, p, prefix, cfg), p, prefix + ".conv3x3", 1, 1); };
  const auto q = project(f_l), k = project(f_r);
  // Row-major views: [N,H,W,C] for queries/values and [N,H,C,W] for keys.
  const auto q_rows = ops::permute(q, {0, 2, 3, 1}), k_rows = ops::permute(k, {0, 2, 3, 1});
  const auto q_cols = ops::permute(q, {0, 2, 1, 3}), k_cols = ops::permute(k, {0, 2, 1, 3});
  out.attention.t_r2l = ops::softmax_lastdim(ops::batched_row_matmul(q_rows, k_cols));
  out.attention.t_l2r = ops::softmax_lastdim(ops::batched_row_matmul(k_rows, q_cols));
#ifndef NDEBUG
  assert(attention_row_error(out.attention) <= 1e-5);
#endif
  const auto fl_rows = ops::permute(f_l, {0, 2, 3, 1}), fr_rows = ops::permute(f_r, {0, 2, 3, 1});
  const auto from_right = ops::permute(ops::batched_row_matmul(out.attention.t_r2l, fr_rows), {0, 3, 1, 2});
  const auto from_left = ops::permute(ops::batched_row_matmul(out.attention.t_l2r, fl_rows), {0, 3, 1, 2});
  out.r_l = ops::add(f_l, from_right);
  out.r_r = ops::add(f_r, from_left);
  return out;
}

template <typename T>
std::vector<Tensor<T>> csfi_forward(const std::vector<Tensor<T>>& r, const ParameterStore<T>& p,
                                    const NetworkConfig& cfg) {
  const int levels = cfg.interaction_levels();
  if (static_cast<int>(r.size()) != levels) {
    throw ContractViolation("csfi_forward expects " + std::to_string(levels) + " levels, got " +
                            std::to_string(r.size()));
  }
  for (int k = 1; k <= levels; ++k) {
    if (r[k - 1].rank() != 4 || r[k - 1].dim(1) != cfg.channels(k)) {
      throw ContractViolation("csfi_forward: level " + std::to_string(k) + " has shape " +
                              shape_str(r[k - 1].shape()) + ", expected " + std::to_string(cfg.channels(k)) +
                              " channels");
    }
  }
  if (!cfg.use_csfi) return r;
  std::vector<Tensor<T>> e;
  for (int t = 1; t <= levels; ++t) {
    std::vector<Tensor<T>> parts;
    for (int j = 1; j <= levels; ++j) {
      parts.push_back(j == t ? r[j - 1] : ops::resize_bilinear(r[j - 1], resample_ratio(j, t)));
    }
    const auto prefix = level_name("csfi", t);
    auto fused = conv(ops::concat_channels<T>(std::span<const Tensor<T>>(parts)), p, prefix + ".fuse");
    e.push_back(csm_chain(fused, p, prefix, cfg));
  }
  return e;
}

template <typename T>
Tensor<T> decoder_forward(const std::vector<Tensor<T>>& e, const Tensor<T>& bottom, const ParameterStore<T>& p,
                          const NetworkConfig& cfg) {
  const int levels = cfg.interaction_levels();
  if (static_cast<int>(e.size()) != levels) throw ContractViolation("decoder_forward: wrong number of levels");
  Tensor<T> d = bottom;
  for (int k = levels; k >= 1; --k) {
    const auto level = level_name("decoder", k);
    auto up = ops::conv_transpose2d(d, p.get(level + ".up.weight"), p.get(level + ".up.bias"));
    d = ops::add(csm_chain(up, p, level, cfg), e[k - 1]);
  }
  return conv(d, p, "decoder.head");
}

template <typename T>
Tensor<T> lowfre_image(const Tensor<T>& low, const NetworkConfig& cfg) {
  return filters::side_window_box_filter(low, cfg.lowfre);
}

template <typename T>
NetworkOutput<T> network_forward(const Tensor<T>& low_l, const Tensor<T>& low_r, const Tensor<T>& lowfre_l,
                                 const Tensor<T>& lowfre_r, const ParameterStore<T>& p, const NetworkConfig& cfg) {
  if (low_l.rank() != 4 || low_l.dim(1) != 3) {
    throw ContractViolation("network_forward expects [N,3,H,W], got " + shape_str(low_l.shape()));
  }
  for (const auto* t : {&low_r, &lowfre_l, &lowfre_r}) {
    if (t->shape() != low_l.shape()) {
      throw ContractViolation("network_forward: input " + shape_str(t->shape()) + " differs from " +
                              shape_str(low_l.shape()));
    }
  }
  NetworkOutput<T> out;
  const std::int64_t h = low_l.dim(2), w = low_l.dim(3), m = cfg.size_multiple();
  out.pad_bottom = (m - h % m) % m;
  out.pad_right = (m - w % m) % m;
  auto prepare = [&](const Tensor<T>& low, const Tensor<T>& lowfre) {
    auto a = ops::pad_reflect(low, out.pad_bottom, out.pad_right);
    if (!cfg.use_iem) return a;
    return iem_forward(a, ops::pad_reflect(lowfre, out.pad_bottom, out.pad_right), p);
  };
  const auto f_l = encoder_forward(prepare(low_l, lowfre_l), p, cfg);
  const auto f_r = encoder_forward(prepare(low_r, lowfre_r), p, cfg);

  const int levels = cfg.interaction_levels();
  std::vector<Tensor<T>> r_l(f_l.begin(), f_l.begin() + levels), r_r(f_r.begin(), f_r.begin() + levels);
  if (cfg.use_cvmi) {
    for (int k = 1; k <= levels; ++k) {
      if (!cfg.interacts_at(k)) continue;
      auto res = cvmi_forward(f_l[k - 1], f_r[k - 1], k, p, cfg);
      r_l[k - 1] = res.r_l;
      r_r[k - 1] = res.r_r;
      out.attention.push_back(std::move(res.attention));
    }
  }
  const auto e_l = csfi_forward(r_l, p, cfg), e_r = csfi_forward(r_r, p, cfg);
  auto h_l = decoder_forward(e_l, f_l.back(), p, cfg);
  auto h_r = decoder_forward(e_r, f_r.back(), p, cfg);
  if (out.pad_bottom || out.pad_right) {
    h_l = ops::crop(h_l, 0, 0, h, w);
    h_r = ops::crop(h_r, 0, 0, h, w);
  }
  out.h_l = h_l;
  out.h_r = h_r;
  return out;
}

template <typename T>
NetworkOutput<T> network_forward(const Tensor<T>& low_l, const Tensor<T>& low_r, const ParameterStore<T>& p,
                                 const NetworkConfig& cfg) {
  Tensor<T> lf_l, lf_r;
  if (cfg.use_iem) {
    lf_l = lowfre_image(low_l, cfg);
    lf_r = lowfre_image(low_r, cfg);
  } else {
    lf_l = low_l;
    lf_r = low_r;
  }
  return network_forward(low_l, low_r, lf_l, lf_r, p, cfg);
}

template <typename T>
double attention_row_error(const AttentionPair<T>& pair) {
  double worst = 0.0;
  for (const auto* map : {&pair.t_r2l, &pair.t_l2r}) {
    if (!map->defined()) continue;
    const std::int64_t cols = map->dim(map->rank() - 1);
    const auto data = map->data();
    for (std::int64_t row = 0; row * cols < map->numel(); ++row) {
      double total = 0.0;
      for (std::int64_t c = 0; c < cols; ++c) {
        const double v = data[row * cols + c];
        if (!std::isfinite(v)) return INFINITY;
        total += v;
      }
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  return worst;
}

#define LFE_NET_INSTANTIATE(T)                                                                                     \
  template Tensor<T> channel_attention(const Tensor<T>&, const ParameterStore<T>&, const std::string&);          \
  template Tensor<T> iem_forward(const Tensor<T>&, const Tensor<T>&, const ParameterStore<T>&);                  \
  template Tensor<T> simple_gate(const Tensor<T>&);                                                               \
  template Tensor<T> csm_forward(const Tensor<T>&, const ParameterStore<T>&, const std::string&,                 \
                                 const NetworkConfig&);                                                           \
  template std::vector<Tensor<T>> encoder_forward(const Tensor<T>&, const ParameterStore<T>&,                    \
                                                  const NetworkConfig&);                                          \
  template CvmiResult<T> cvmi_forward(const Tensor<T>&, const Tensor<T>&, int, const ParameterStore<T>&,         \
                                      const NetworkConfig&);                                                      \
  template std::vector<Tensor<T>> csfi_forward(const std::vector<Tensor<T>>&, const ParameterStore<T>&,          \
                                               const NetworkConfig&);                                             \
  template Tensor<T> decoder_forward(const std::vector<Tensor<T>>&, const Tensor<T>&, const ParameterStore<T>&,  \
                                     const NetworkConfig&);                                                       \
  template Tensor<T> lowfre_image(const Tensor<T>&, const NetworkConfig&);                                        \
  template NetworkOutput<T> network_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                \
                                            const Tensor<T>&, const ParameterStore<T>&, const NetworkConfig&);   \
  template NetworkOutput<T> network_forward(const Tensor<T>&, const Tensor<T>&, const ParameterStore<T>&,        \
                                            const NetworkConfig&);                                                \
  template double attention_row_error(const AttentionPair<T>&);

LFE_NET_INSTANTIATE(float)
LFE_NET_INSTANTIATE(double)

}  // namespace lfe::net
