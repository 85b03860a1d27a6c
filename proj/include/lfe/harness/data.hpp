#pragma once

#include <cstdint>
#include <vector>

#include "lfe/degrade/degrade.hpp"

namespace lfe::harness {

struct CropWindow {
  std::int64_t top = 0, left = 0, size = 0;
};

/// Uniform offset for a size x size crop of an h x w image (after any padding).
CropWindow draw_crop(std::int64_t h, std::int64_t w, std::int64_t size, degrade::Rng& rng);

/// Reflect-pads [C,H,W] up to at least `size` in each extent, then crops.
Tensor<float> apply_crop(const Tensor<float>& image, const CropWindow& window);

/// One offset applied to all four images, so rows stay aligned across views.
degrade::StereoSample random_paired_crop(const degrade::StereoSample& sample, std::int64_t patch, degrade::Rng& rng);

/// Centre crop of every image to at most size x size; 0 keeps the sample.
degrade::StereoSample center_crop(const degrade::StereoSample& sample, std::int64_t size);

/// Stacks equally shaped [C,H,W] tensors into [B,C,H,W].
Tensor<float> stack(const std::vector<Tensor<float>>& images);
/// [C,H,W] -> [1,C,H,W] without copying values.
Tensor<float> batch_of_one(const Tensor<float>& image);

}  // namespace lfe::harness
