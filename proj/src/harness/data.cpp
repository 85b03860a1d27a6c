#include "lfe/harness/data.hpp"

#include <algorithm>

#include "lfe/core/ops.hpp"

namespace lfe::harness {

CropWindow draw_crop(std::int64_t h, std::int64_t w, std::int64_t size, degrade::Rng& rng) {
  if (size < 1) throw ContractViolation("crop size must be positive");
  CropWindow win;
  win.size = size;
  const auto max_top = std::max<std::int64_t>(0, h - size), max_left = std::max<std::int64_t>(0, w - size);
  win.top = std::uniform_int_distribution<std::int64_t>(0, max_top)(rng);
  win.left = std::uniform_int_distribution<std::int64_t>(0, max_left)(rng);
  return win;
}

Tensor<float> apply_crop(const Tensor<float>& image, const CropWindow& window) {
  if (image.rank() != 3) throw ContractViolation("apply_crop expects [C,H,W], got " + shape_str(image.shape()));
  NoGradGuard guard;
  auto x = batch_of_one(image);
  const auto pad_h = std::max<std::int64_t>(0, window.size - x.dim(2));
  const auto pad_w = std::max<std::int64_t>(0, window.size - x.dim(3));
  if (pad_h || pad_w) x = ops::pad_reflect(x, pad_h, pad_w);
  auto out = ops::crop(x, window.top, window.left, window.size, window.size);
  return ops::reshape(out, {out.dim(1), window.size, window.size});
}

degrade::StereoSample random_paired_crop(const degrade::StereoSample& sample, std::int64_t patch, degrade::Rng& rng) {
  const auto& ref = sample.low_left;
  const auto win = draw_crop(ref.dim(1), ref.dim(2), patch, rng);
  degrade::StereoSample out;
  out.id = sample.id;
  out.params = sample.params;
  out.low_left = apply_crop(sample.low_left, win);
  out.low_right = apply_crop(sample.low_right, win);
  out.gt_left = apply_crop(sample.gt_left, win);
  out.gt_right = apply_crop(sample.gt_right, win);
  return out;
}

degrade::StereoSample center_crop(const degrade::StereoSample& sample, std::int64_t size) {
  const auto h = sample.low_left.dim(1), w = sample.low_left.dim(2);
  if (size == 0 || (h <= size && w <= size)) return sample;
  const auto ch = std::min(h, size), cw = std::min(w, size);
  auto cut = [&](const Tensor<float>& t) {
    NoGradGuard guard;
    auto c = ops::crop(batch_of_one(t), (h - ch) / 2, (w - cw) / 2, ch, cw);
    return ops::reshape(c, {t.dim(0), ch, cw});
  };
  degrade::StereoSample out = sample;
  out.low_left = cut(sample.low_left);
  out.low_right = cut(sample.low_right);
  out.gt_left = cut(sample.gt_left);
  out.gt_right = cut(sample.gt_right);
  return out;
}

Tensor<float> stack(const std::vector<Tensor<float>>& images) {
  if (images.empty()) throw ContractViolation("stack of zero images");
  const auto& shape = images.front().shape();
  std::vector<float> data;
  data.reserve(images.size() * images.front().numel());
  for (const auto& im : images) {
    if (im.shape() != shape) throw ContractViolation("stack: mismatched shapes");
    data.insert(data.end(), im.data().begin(), im.data().end());
  }
  Shape out{static_cast<std::int64_t>(images.size())};
  out.insert(out.end(), shape.begin(), shape.end());
  return Tensor<float>(out, std::move(data));
}

Tensor<float> batch_of_one(const Tensor<float>& image) {
  Shape s{1};
  s.insert(s.end(), image.shape().begin(), image.shape().end());
  NoGradGuard guard;
  return ops::reshape(image, s);
}

}  // namespace lfe::harness
