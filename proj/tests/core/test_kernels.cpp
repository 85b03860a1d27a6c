#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "lfe/core/ops.hpp"
#include "support/kernel_gradients.hpp"
#include "support/oracles.hpp"

namespace lfe {
namespace {

using testing::as_double;
using testing::random_tensor;

TEST(Conv2d, AllOnesCountsOverlap) {
  auto x = Tensor<float>::ones({1, 1, 3, 3});
  auto w = Tensor<float>::ones({1, 1, 3, 3});
  auto b = Tensor<float>::zeros({1});
  auto y = ops::conv2d(x, w, b, 1, 1);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 3, 3}));
  EXPECT_FLOAT_EQ(y.at(0, 0, 1, 1), 9.0f);
  EXPECT_FLOAT_EQ(y.at(0, 0, 0, 0), 4.0f);
  EXPECT_FLOAT_EQ(y.at(0, 0, 2, 2), 4.0f);
  EXPECT_FLOAT_EQ(y.at(0, 0, 0, 1), 6.0f);
}

TEST(Conv2d, UnitKernelIsIdentity) {
  std::mt19937_64 rng(5);
  auto x = random_tensor<float>({2, 1, 5, 7}, rng);
  auto y = ops::conv2d(x, Tensor<float>::ones({1, 1, 1, 1}), Tensor<float>::zeros({1}), 1, 0);
  EXPECT_EQ(as_double(y), as_double(x));
}

TEST(Conv2d, MatchesSevenLoopReference) {
  std::mt19937_64 rng(11);
  auto x = random_tensor<double>({2, 4, 8, 8}, rng);
  auto w = random_tensor<double>({8, 4, 5, 5}, rng);
  auto b = random_tensor<double>({8}, rng);
  Shape ref_shape;
  auto ref = testing::conv2d_reference(as_double(x), x.shape(), as_double(w), w.shape(), as_double(b), 1, 2,
                                       ref_shape);
  auto y = ops::conv2d(x, w, b, 1, 2);
  ASSERT_EQ(y.shape(), ref_shape);
  EXPECT_LE(testing::max_rel_diff(as_double(y), ref, 1e-9), 1e-5);

  // Same problem in 32-bit against the 64-bit reference, relative to scale.
  auto yf = ops::conv2d(x.cast<float>(), w.cast<float>(), b.cast<float>(), 1, 2);
  double peak = 0.0;
  for (double v : ref) peak = std::max(peak, std::abs(v));
  EXPECT_LE(testing::max_abs_diff(as_double(yf), ref) / peak, 1e-5);
}

TEST(Conv2d, NetworkGeometriesMatchReference) {
  // (kernel, stride, padding) combinations the network uses.
  struct Geo { std::int64_t k; int stride, pad; };
  const Geo geos[] = {{1, 1, 0}, {3, 1, 1}, {3, 2, 1}, {5, 1, 2}, {11, 1, 0}};
  std::mt19937_64 rng(12);
  for (const auto& g : geos) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto side = std::max<std::int64_t>(g.k, 8) + trial;
      auto x = random_tensor<double>({1, 3, side, side + 1}, rng);
      auto w = random_tensor<double>({4, 3, g.k, g.k}, rng);
      auto b = random_tensor<double>({4}, rng);
      Shape ref_shape;
      auto ref = testing::conv2d_reference(as_double(x), x.shape(), as_double(w), w.shape(), as_double(b),
                                           g.stride, g.pad, ref_shape);
      auto y = ops::conv2d(x, w, b, g.stride, g.pad);
      ASSERT_EQ(y.shape(), ref_shape);
      EXPECT_LE(testing::max_rel_diff(as_double(y), ref, 1e-9), 1e-9) << "k=" << g.k << " s=" << g.stride;
    }
  }
}

TEST(Conv2d, ChannelMismatchNamesBothShapes) {
  auto x = Tensor<float>::zeros({1, 3, 4, 4});
  auto w = Tensor<float>::zeros({2, 4, 3, 3});
  try {
    ops::conv2d(x, w, Tensor<float>(), 1, 1);
    FAIL() << "expected a contract violation";
  } catch (const ContractViolation& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[1x3x4x4]"), std::string::npos);
    EXPECT_NE(msg.find("[2x4x3x3]"), std::string::npos);
  }
}

TEST(ConvTranspose2d, SinglePixelSpreadsToTwoByTwo) {
  Tensor<float> x(Shape{1, 1, 1, 1}, 0.7f);
  auto y = ops::conv_transpose2d(x, Tensor<float>::ones({1, 1, 4, 4}), Tensor<float>::zeros({1}));
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  for (float v : y.data()) EXPECT_FLOAT_EQ(v, 0.7f);
}

TEST(ConvTranspose2d, ZeroInputGivesBias) {
  std::mt19937_64 rng(6);
  auto w = random_tensor<float>({3, 2, 4, 4}, rng);
  Tensor<float> b(Shape{2}, std::vector<float>{0.25f, -1.5f});
  auto y = ops::conv_transpose2d(Tensor<float>::zeros({2, 3, 3, 5}), w, b);
  ASSERT_EQ(y.shape(), (Shape{2, 2, 6, 10}));
  for (std::int64_t n = 0; n < 2; ++n)
    for (std::int64_t i = 0; i < 6; ++i)
      for (std::int64_t j = 0; j < 10; ++j) {
        EXPECT_EQ(y.at(n, 0, i, j), 0.25f);
        EXPECT_EQ(y.at(n, 1, i, j), -1.5f);
      }
}

TEST(ConvTranspose2d, MatchesScatterReference) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = random_tensor<double>({2, 3, 2 + trial % 3, 3 + trial % 2}, rng);
    auto w = random_tensor<double>({3, 4, 4, 4}, rng);
    auto b = random_tensor<double>({4}, rng);
    auto ref = testing::conv_transpose2d_reference(as_double(x), x.shape(), as_double(w), w.shape(), as_double(b),
                                                   2, 1);
    auto y = ops::conv_transpose2d(x, w, b);
    EXPECT_EQ(y.dim(2), 2 * x.dim(2));
    EXPECT_EQ(y.dim(3), 2 * x.dim(3));
    EXPECT_LE(testing::max_rel_diff(as_double(y), ref, 1e-9), 1e-9);
  }
}

TEST(ConvTranspose2d, SumGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  auto x = random_tensor<double>({1, 2, 3, 3}, rng);
  auto w = random_tensor<double>({2, 3, 4, 4}, rng);
  auto b = random_tensor<double>({3}, rng);
  GradCheckOptions opt;
  opt.step = 1e-5;
  opt.rtol = 1e-4;
  auto report = check_gradients([&] { return ops::sum(ops::conv_transpose2d(x, w, b)); }, {x}, opt);
  EXPECT_TRUE(report.passed) << report.worst;
}

TEST(ConvTranspose2d, RejectsNonDoublingGeometry) {
  auto x = Tensor<float>::zeros({1, 1, 2, 2});
  auto w = Tensor<float>::zeros({1, 1, 4, 4});
  EXPECT_THROW(ops::conv_transpose2d(x, w, Tensor<float>(), 1, 1), ContractViolation);
  EXPECT_THROW(ops::conv_transpose2d(x, Tensor<float>::zeros({1, 1, 3, 3}), Tensor<float>()), ContractViolation);
}

TEST(Softmax, UniformOnEqualInputs) {
  auto y = ops::softmax_lastdim(Tensor<double>::zeros({4}));
  for (double v : y.data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Softmax, LargeLogitDoesNotOverflow) {
  auto y = ops::softmax_lastdim(Tensor<float>(Shape{2}, std::vector<float>{1000.0f, 0.0f}));
  EXPECT_FLOAT_EQ(y[0], 1.0f);
  EXPECT_FLOAT_EQ(y[1], 0.0f);
}

TEST(Softmax, MatchesDirectFormula) {
  std::mt19937_64 rng(9);
  auto x = random_tensor<double>({7}, rng, -3.0, 3.0);
  auto y = ops::softmax_lastdim(x);
  EXPECT_LE(testing::max_abs_diff(as_double(y), testing::softmax_reference(as_double(x))), 1e-12);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> magnitude(0.0, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double m = std::pow(10.0, magnitude(rng));
    auto x = random_tensor<float>({3, 5, 9}, rng, -m, m);
    auto y = ops::softmax_lastdim(x);
    for (std::int64_t r = 0; r < 15; ++r) {
      double total = 0.0;
      for (int j = 0; j < 9; ++j) {
        EXPECT_GE(y[r * 9 + j], 0.0f);
        total += y[r * 9 + j];
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
  auto x = random_tensor<double>({2, 6}, rng);
  auto shifted = ops::softmax_lastdim(ops::add_scalar(x, 12.5));
  EXPECT_LE(testing::max_abs_diff(as_double(ops::softmax_lastdim(x)), as_double(shifted)), 1e-12);
}

TEST(BatchedRowMatmul, IdentityRight) {
  std::mt19937_64 rng(13);
  auto a = random_tensor<double>({2, 3, 4, 4}, rng);
  Tensor<double> eye(Shape{2, 3, 4, 4}, 0.0);
  for (std::int64_t k = 0; k < 6; ++k)
    for (int i = 0; i < 4; ++i) eye.mutable_data()[k * 16 + i * 5] = 1.0;
  EXPECT_EQ(as_double(ops::batched_row_matmul(a, eye)), as_double(a));
}

TEST(BatchedRowMatmul, OnesCountInnerExtent) {
  auto y = ops::batched_row_matmul(Tensor<float>::ones({1, 2, 4, 3}), Tensor<float>::ones({1, 2, 3, 5}));
  ASSERT_EQ(y.shape(), (Shape{1, 2, 4, 5}));
  for (float v : y.data()) EXPECT_EQ(v, 3.0f);
}

TEST(BatchedRowMatmul, MatchesLoopReference) {
  std::mt19937_64 rng(14);
  auto a = random_tensor<float>({1, 2, 4, 3}, rng);
  auto b = random_tensor<float>({1, 2, 3, 4}, rng);
  auto ref = testing::row_matmul_reference(as_double(a), as_double(b), 1, 2, 4, 3, 4);
  EXPECT_LE(testing::max_abs_diff(as_double(ops::batched_row_matmul(a, b)), ref), 1e-6);
}

TEST(BatchedRowMatmul, ExtentMismatchRejected) {
  EXPECT_THROW(ops::batched_row_matmul(Tensor<float>::ones({1, 2, 4, 3}), Tensor<float>::ones({1, 2, 4, 4})),
               ContractViolation);
}

TEST(Fft2, ConstantImageIsDcOnly) {
  auto [re, im] = ops::fft2(Tensor<double>::full({1, 1, 6, 10}, 0.3));
  for (std::int64_t i = 0; i < 60; ++i) {
    EXPECT_NEAR(re[i], i == 0 ? 0.3 * 60 : 0.0, 1e-6);
    EXPECT_NEAR(im[i], 0.0, 1e-6);
  }
}

TEST(Fft2, ImpulseIsFlat) {
  Tensor<double> x(Shape{1, 1, 5, 8}, 0.0);
  x.mutable_data()[0] = 1.0;
  auto [re, im] = ops::fft2(x);
  for (std::int64_t i = 0; i < 40; ++i) {
    EXPECT_NEAR(re[i], 1.0, 1e-12);
    EXPECT_NEAR(im[i], 0.0, 1e-12);
  }
}

TEST(Fft2, MatchesNaiveDft) {
  std::mt19937_64 rng(15);
  for (Shape s : {Shape{1, 1, 6, 10}, Shape{1, 1, 7, 3}, Shape{1, 1, 8, 8}, Shape{1, 1, 1, 13}}) {
    auto x = random_tensor<double>(s, rng);
    auto [re, im] = ops::fft2(x);
    auto ref = testing::naive_dft2(as_double(x), s[2], s[3]);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_NEAR(re[i], ref[i].real(), 1e-6);
      EXPECT_NEAR(im[i], ref[i].imag(), 1e-6);
    }
  }
}

TEST(Fft2, ParsevalAndLinearity) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    Shape s{1, 2, testing::pick(rng, 1, 12), testing::pick(rng, 1, 12)};
    auto x = random_tensor<double>(s, rng);
    auto y = random_tensor<double>(s, rng);
    auto [re, im] = ops::fft2(x);
    double energy = 0.0, spectral = 0.0;
    for (std::int64_t i = 0; i < x.numel(); ++i) {
      energy += x[i] * x[i];
      spectral += re[i] * re[i] + im[i] * im[i];
    }
    EXPECT_NEAR(spectral, static_cast<double>(s[2] * s[3]) * energy, 1e-4 * spectral);

    const double a = 0.7, b = -1.3;
    auto [cre, cim] = ops::fft2(ops::add(ops::scale(x, a), ops::scale(y, b)));
    auto [yre, yim] = ops::fft2(y);
    for (std::int64_t i = 0; i < x.numel(); ++i) {
      EXPECT_NEAR(cre[i], a * re[i] + b * yre[i], 1e-5);
      EXPECT_NEAR(cim[i], a * im[i] + b * yim[i], 1e-5);
    }
  }
}

TEST(ResizeBilinear, ConstantsArePreserved) {
  auto x = Tensor<float>::full({1, 1, 4, 4}, 5.0f);
  auto half = ops::resize_bilinear(x, {1, 2});
  ASSERT_EQ(half.shape(), (Shape{1, 1, 2, 2}));
  for (float v : half.data()) EXPECT_FLOAT_EQ(v, 5.0f);
  auto round_trip = ops::resize_bilinear(ops::resize_bilinear(x, {2, 1}), {1, 2});
  EXPECT_EQ(as_double(round_trip), as_double(x));
}

TEST(ResizeBilinear, UpsampleMatchesHandFormula) {
  Tensor<double> x(Shape{1, 1, 2, 2}, std::vector<double>{0, 1, 2, 3});
  auto y = ops::resize_bilinear(x, {2, 1});
  ASSERT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
  // Output pixel o samples source coordinate (o + 0.5) / 2 - 0.5, clamped to
  // [0, 1]; f(r, c) = 2 r + c is linear so the bilinear value is exact.
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double r = std::clamp((i + 0.5) / 2.0 - 0.5, 0.0, 1.0);
      const double c = std::clamp((j + 0.5) / 2.0 - 0.5, 0.0, 1.0);
      EXPECT_NEAR(y.at(0, 0, i, j), 2.0 * r + c, 1e-12) << i << "," << j;
    }
}

TEST(ResizeBilinear, ZeroExtentRejected) {
  EXPECT_THROW(ops::resize_bilinear(Tensor<float>::zeros({1, 1, 2, 2}), {1, 4}), ContractViolation);
}

TEST(Structural, SplitConcatRoundTrip) {
  std::mt19937_64 rng(17);
  auto x = random_tensor<float>({2, 6, 3, 3}, rng);
  auto halves = ops::split_channels(x, 2);
  EXPECT_EQ(as_double(ops::concat_channels(halves[0], halves[1])), as_double(x));
  EXPECT_THROW(ops::split_channels(Tensor<float>::zeros({1, 5, 2, 2}), 2), ContractViolation);
}

TEST(Structural, ReflectPadThenCropIsIdentity) {
  std::mt19937_64 rng(18);
  auto x = random_tensor<float>({1, 2, 5, 3}, rng);
  auto padded = ops::pad_reflect(x, 3, 5);
  ASSERT_EQ(padded.shape(), (Shape{1, 2, 8, 8}));
  EXPECT_EQ(padded.at(0, 0, 5, 0), x.at(0, 0, 3, 0));  // reflects about the last row
  EXPECT_EQ(as_double(ops::crop(padded, 0, 0, 5, 3)), as_double(x));
}

TEST(Structural, GlobalAvgPoolAndChannelGate) {
  Tensor<double> x(Shape{1, 2, 1, 2}, std::vector<double>{1, 3, 2, 6});
  auto pooled = ops::global_avg_pool(x);
  EXPECT_EQ(pooled.shape(), (Shape{1, 2, 1, 1}));
  EXPECT_DOUBLE_EQ(pooled[0], 2.0);
  EXPECT_DOUBLE_EQ(pooled[1], 4.0);
  auto gated = ops::mul_channels(x, Tensor<double>(Shape{1, 2, 1, 1}, std::vector<double>{0.5, 2.0}));
  EXPECT_EQ(as_double(gated), (std::vector<double>{0.5, 1.5, 4, 12}));
}

TEST(GradientSuite, EveryKernelMatchesFiniteDifferences) {
  std::mt19937_64 rng(2024);
  for (const auto& kernel : testing::kernel_cases()) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      auto report = kernel.run(rng);
      worst = std::max(worst, report.max_rel_error);
      ASSERT_TRUE(report.passed) << kernel.name << " trial " << trial << ": " << report.worst;
    }
    RecordProperty(kernel.name, std::to_string(worst));
  }
}

}  // namespace
}  // namespace lfe
