#include "lfe/filters/side_window.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lfe::filters {

void SideWindowSpec::validate() const {
  if (radius < 1) throw ConfigError("side window radius must be >= 1, got " + std::to_string(radius));
  if (iterations < 1) throw ConfigError("side window iterations must be >= 1, got " + std::to_string(iterations));
}

std::array<WindowOffsets, 8> side_windows(int r) {
  return {{
      {-r, r, -r, 0},  // left
      {-r, r, 0, r},   // right
      {-r, 0, -r, r},  // up
      {0, r, -r, r},   // down
      {-r, 0, -r, 0},  // north-west
      {-r, 0, 0, r},   // north-east
      {0, r, -r, 0},   // south-west
      {0, r, 0, r},    // south-east
  }};
}

IntegralImage::IntegralImage(std::span<const double> plane, std::int64_t height, std::int64_t width, int pad)
    : stride_(width + 2 * pad + 1), pad_(pad), table_((height + 2 * pad + 1) * (width + 2 * pad + 1), 0.0) {
  const std::int64_t ph = height + 2 * pad, pw = width + 2 * pad;
  for (std::int64_t y = 0; y < ph; ++y) {
    const std::int64_t sy = std::clamp<std::int64_t>(y - pad, 0, height - 1);
    double row = 0.0;
    for (std::int64_t x = 0; x < pw; ++x) {
      const std::int64_t sx = std::clamp<std::int64_t>(x - pad, 0, width - 1);
      row += plane[sy * width + sx];
      table_[(y + 1) * stride_ + x + 1] = table_[y * stride_ + x + 1] + row;
    }
  }
}

double IntegralImage::sum(std::int64_t y0, std::int64_t y1, std::int64_t x0, std::int64_t x1) const {
  y0 += pad_;
  y1 += pad_ + 1;
  x0 += pad_;
  x1 += pad_ + 1;
  return table_[y1 * stride_ + x1] - table_[y0 * stride_ + x1] - table_[y1 * stride_ + x0] +
         table_[y0 * stride_ + x0];
}

namespace {

template <typename T>
void require_image(const char* op, const Tensor<T>& image) {
  if (image.rank() != 3 && image.rank() != 4) {
    throw ContractViolation(std::string(op) + ": expected [C,H,W] or [N,C,H,W], got " + shape_str(image.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> side_window_box_filter(const Tensor<T>& image, const SideWindowSpec& spec) {
  spec.validate();
  require_image("side_window_box_filter", image);
  const auto& s = image.shape();
  const std::int64_t h = s[s.size() - 2], w = s[s.size() - 1], plane = h * w;
  const std::int64_t planes = plane == 0 ? 0 : image.numel() / plane;
  const auto windows = side_windows(spec.radius);
  std::array<double, 8> count{};
  for (std::size_t k = 0; k < 8; ++k) {
    const auto& o = windows[k];
    count[k] = static_cast<double>((o.bottom - o.top + 1) * (o.right - o.left + 1));
  }

  std::vector<T> out(image.numel());
  std::vector<double> current(plane), next(plane);
  for (std::int64_t p = 0; p < planes; ++p) {
    auto src = image.data().subspan(p * plane, plane);
    for (std::int64_t i = 0; i < plane; ++i) current[i] = std::clamp(static_cast<double>(src[i]), 0.0, 1.0);
    for (int it = 0; it < spec.iterations; ++it) {
      const IntegralImage sat(current, h, w, spec.radius);
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
          const double v = current[y * w + x];
          double best = 0.0, best_dev = INFINITY;
          for (std::size_t k = 0; k < 8; ++k) {
            const auto& o = windows[k];
            const double mean = sat.sum(y + o.top, y + o.bottom, x + o.left, x + o.right) / count[k];
            const double dev = std::abs(mean - v);
            if (dev < best_dev) {
              best_dev = dev;
              best = mean;
            }
          }
          next[y * w + x] = best;
        }
      }
      std::swap(current, next);
    }
    for (std::int64_t i = 0; i < plane; ++i) out[p * plane + i] = static_cast<T>(current[i]);
  }
  return Tensor<T>(s, std::move(out));
}

template <typename T>
Tensor<T> box_filter(const Tensor<T>& image, int radius) {
  if (radius < 1) throw ContractViolation("box_filter: radius must be >= 1");
  require_image("box_filter", image);
  const auto& s = image.shape();
  const std::int64_t h = s[s.size() - 2], w = s[s.size() - 1], plane = h * w;
  const std::int64_t planes = plane == 0 ? 0 : image.numel() / plane;
  const double inv = 1.0 / static_cast<double>((2 * radius + 1) * (2 * radius + 1));
  std::vector<T> out(image.numel());
  std::vector<double> current(plane);
  for (std::int64_t p = 0; p < planes; ++p) {
    for (std::int64_t i = 0; i < plane; ++i) current[i] = image.data()[p * plane + i];
    const IntegralImage sat(current, h, w, radius);
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x)
        out[p * plane + y * w + x] = static_cast<T>(sat.sum(y - radius, y + radius, x - radius, x + radius) * inv);
  }
  return Tensor<T>(s, std::move(out));
}

template Tensor<float> side_window_box_filter(const Tensor<float>&, const SideWindowSpec&);
template Tensor<double> side_window_box_filter(const Tensor<double>&, const SideWindowSpec&);
template Tensor<float> box_filter(const Tensor<float>&, int);
template Tensor<double> box_filter(const Tensor<double>&, int);

}  // namespace lfe::filters
