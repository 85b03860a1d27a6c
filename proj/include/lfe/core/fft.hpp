#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace lfe::fft {

using Complex = std::complex<double>;

/// In-place unnormalized DFT of any length. Powers of two use an iterative
/// radix-2 transform; other lengths go through Bluestein's chirp-z
/// reduction. `inverse` flips the exponent sign without scaling.
void transform(std::span<Complex> data, bool inverse = false);

/// Row-major [rows, cols] plane, transformed along both axes in place.
void transform_2d(std::span<Complex> plane, std::size_t rows, std::size_t cols, bool inverse = false);

}  // namespace lfe::fft
