#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "lfe/core/tensor.hpp"

namespace lfe::filters {

struct SideWindowSpec {
  int radius = 5;
  int iterations = 10;

  /// Throws ConfigError unless radius >= 1 and iterations >= 1.
  void validate() const;
};

/// Row/column offsets (inclusive) of one side window relative to the pixel.
/// The pixel always lies on the window boundary.
struct WindowOffsets {
  int top, bottom, left, right;
};

/// Left, right, up, down, then the NW, NE, SW, SE quadrants. Ties between
/// equally close means resolve to the earliest window in this order.
std::array<WindowOffsets, 8> side_windows(int radius);

/// Edge-preserving smoothing: each iteration replaces every pixel by the
/// side-window mean closest to its current value. Channels are filtered
/// independently with replicate boundaries; input is clipped to [0, 1].
/// Accepts [C,H,W] or [N,C,H,W]; the result is a new leaf tensor.
template <typename T>
Tensor<T> side_window_box_filter(const Tensor<T>& image, const SideWindowSpec& spec);

/// Plain (2r+1)^2 mean filter with replicate boundaries, for comparison.
template <typename T>
Tensor<T> box_filter(const Tensor<T>& image, int radius);

/// Summed-area table of a replicate-padded plane, used for O(1) window sums.
class IntegralImage {
 public:
  IntegralImage(std::span<const double> plane, std::int64_t height, std::int64_t width, int pad);
  /// Sum over rows [y0, y1] and columns [x0, x1] in unpadded coordinates;
  /// coordinates may extend up to `pad` outside the plane.
  double sum(std::int64_t y0, std::int64_t y1, std::int64_t x0, std::int64_t x1) const;

 private:
  std::int64_t stride_;
  int pad_;
  std::vector<double> table_;
};

}  // namespace lfe::filters
