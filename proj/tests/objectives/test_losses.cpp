#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lfe/core/gradcheck.hpp"
#include "lfe/core/ops.hpp"
#include "lfe/objectives/losses.hpp"
#include "support/oracles.hpp"

namespace lfe::objectives {
namespace {

using testing::as_double;
using testing::random_tensor;

Tensor<double> constant(Shape s, double v) { return Tensor<double>(std::move(s), v); }

TEST(FreLoss, ZeroForIdenticalImages) {
  std::mt19937_64 rng(1);
  auto a = random_tensor<double>({2, 3, 8, 8}, rng), b = random_tensor<double>({2, 3, 8, 8}, rng);
  EXPECT_EQ(fre_loss(a, b, a, b).item(), 0.0);
}

TEST(FreLoss, ConstantOffsetCostsTwiceItsMagnitude) {
  for (double c : {0.25, -0.1}) {
    auto gt = constant({1, 3, 8, 12}, 0.5);
    auto pred = constant({1, 3, 8, 12}, 0.5 + c);
    EXPECT_NEAR(fre_loss(pred, pred, gt, gt).item(), 2 * std::abs(c), 1e-12);
  }
}

TEST(FreLoss, MatchesNaiveTransformOfEachImage) {
  std::mt19937_64 rng(2);
  const std::int64_t c = 2, h = 5, w = 6;
  auto pl = random_tensor<double>({1, c, h, w}, rng), pr = random_tensor<double>({1, c, h, w}, rng);
  auto gl = random_tensor<double>({1, c, h, w}, rng), gr = random_tensor<double>({1, c, h, w}, rng);
  auto view = [&](const Tensor<double>& p, const Tensor<double>& g) {
    const auto pv = as_double(p), gv = as_double(g);
    double total = 0;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      std::vector<double> ps(pv.begin() + ch * h * w, pv.begin() + (ch + 1) * h * w);
      std::vector<double> gs(gv.begin() + ch * h * w, gv.begin() + (ch + 1) * h * w);
      const auto fp = testing::naive_dft2(ps, h, w), fg = testing::naive_dft2(gs, h, w);
      for (std::size_t i = 0; i < fp.size(); ++i) {
        total += std::abs(fp[i].real() - fg[i].real()) + std::abs(fp[i].imag() - fg[i].imag());
      }
    }
    return total / static_cast<double>(c * h * w);
  };
  EXPECT_NEAR(fre_loss(pl, pr, gl, gr).item(), view(pl, gl) + view(pr, gr), 1e-10);
}

TEST(FreLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  auto pl = random_tensor<double>({1, 3, 8, 8}, rng), pr = random_tensor<double>({1, 3, 8, 8}, rng);
  auto gl = random_tensor<double>({1, 3, 8, 8}, rng), gr = random_tensor<double>({1, 3, 8, 8}, rng);
  auto report = check_gradients([&] { return fre_loss(pl, pr, gl, gr); }, {pl, pr});
  EXPECT_TRUE(report.passed) << report.worst;
}

TEST(FreLoss, RejectsShapeMismatch) {
  auto a = constant({1, 3, 8, 8}, 0), b = constant({1, 3, 8, 4}, 0);
  EXPECT_THROW(fre_loss(a, a, b, b), ContractViolation);
}

TEST(Ssim, GaussianWindowIsNormalisedAndSymmetric) {
  const auto g = gaussian_window(11, 1.5);
  ASSERT_EQ(g.size(), 11u);
  double total = 0;
  for (double v : g) total += v;
  EXPECT_NEAR(total, 1.0, 1e-15);
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(g[i], g[10 - i]);
  EXPECT_NEAR(g[5] / g[4], std::exp(1.0 / (2 * 1.5 * 1.5)), 1e-12);
}

TEST(Ssim, IdentityIsOne) {
  std::mt19937_64 rng(4);
  auto a = random_tensor<double>({3, 20, 20}, rng, 0, 1);
  EXPECT_NEAR(ssim(a, a).item(), 1.0, 1e-12);
}

TEST(Ssim, ConstantImagesDependOnlyOnLuminance) {
  // (2 * 0.2 * 0.8 + c1) / (0.2^2 + 0.8^2 + c1); the structure term is c2/c2.
  EXPECT_NEAR(ssim(constant({3, 16, 16}, 0.2), constant({3, 16, 16}, 0.8)).item(), 0.3201 / 0.6801, 1e-10);
  EXPECT_NEAR(0.3201 / 0.6801, 0.47066, 1e-5);
}

TEST(Ssim, IsSymmetric) {
  std::mt19937_64 rng(5);
  auto a = random_tensor<double>({2, 3, 16, 16}, rng, 0, 1), b = random_tensor<double>({2, 3, 16, 16}, rng, 0, 1);
  EXPECT_NEAR(ssim(a, b).item(), ssim(b, a).item(), 1e-14);
}

TEST(Ssim, MatchesSlidingWindowOracle) {
  std::mt19937_64 rng(6);
  const std::int64_t c = 2, h = 15, w = 17, k = 11;
  auto a = random_tensor<double>({c, h, w}, rng, 0, 1), b = random_tensor<double>({c, h, w}, rng, 0, 1);
  std::vector<double> g(k);
  double gsum = 0;
  for (int i = 0; i < k; ++i) gsum += (g[i] = std::exp(-(i - 5) * (i - 5) / (2 * 1.5 * 1.5)));
  for (auto& v : g) v /= gsum;
  const auto av = as_double(a), bv = as_double(b);
  double total = 0;
  int count = 0;
  for (std::int64_t ch = 0; ch < c; ++ch)
    for (std::int64_t y = 0; y + k <= h; ++y)
      for (std::int64_t x = 0; x + k <= w; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const double wt = g[i] * g[j];
            const double pa = av[(ch * h + y + i) * w + x + j], pb = bv[(ch * h + y + i) * w + x + j];
            ma += wt * pa;
            mb += wt * pb;
            saa += wt * pa * pa;
            sbb += wt * pb * pb;
            sab += wt * pa * pb;
          }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        total += (2 * ma * mb + 1e-4) * (2 * cov + 9e-4) / ((ma * ma + mb * mb + 1e-4) * (va + vb + 9e-4));
        ++count;
      }
  EXPECT_NEAR(ssim(a, b).item(), total / count, 1e-5);
}

TEST(Ssim, RejectsImagesSmallerThanTheWindow) {
  EXPECT_THROW(ssim(constant({3, 8, 8}, 0), constant({3, 8, 8}, 0)), ContractViolation);
}

TEST(SpaLoss, ZeroForPerfectPredictions) {
  std::mt19937_64 rng(7);
  auto a = random_tensor<double>({1, 3, 16, 16}, rng, 0, 1), b = random_tensor<double>({1, 3, 16, 16}, rng, 0, 1);
  EXPECT_NEAR(spa_loss(a, b, a, b).item(), 0.0, 1e-12);
}

TEST(SpaLoss, SumsOneMinusSsimOverViews) {
  std::mt19937_64 rng(8);
  auto pl = random_tensor<double>({1, 3, 16, 16}, rng, 0, 1), pr = random_tensor<double>({1, 3, 16, 16}, rng, 0, 1);
  auto gl = random_tensor<double>({1, 3, 16, 16}, rng, 0, 1), gr = random_tensor<double>({1, 3, 16, 16}, rng, 0, 1);
  EXPECT_NEAR(spa_loss(pl, pr, gl, gr).item(), 2 - ssim(pl, gl).item() - ssim(pr, gr).item(), 1e-14);
  auto l = spa_loss(constant({1, 3, 16, 16}, 0.2), constant({1, 3, 16, 16}, 0.2), constant({1, 3, 16, 16}, 0.8),
                    constant({1, 3, 16, 16}, 0.8));
  EXPECT_NEAR(l.item(), 2 * (1 - 0.3201 / 0.6801), 1e-10);
}

TEST(SpaLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  auto pl = random_tensor<double>({1, 3, 16, 16}, rng, 0, 1), pr = random_tensor<double>({1, 3, 16, 16}, rng, 0, 1);
  auto gl = random_tensor<double>({1, 3, 16, 16}, rng, 0, 1), gr = random_tensor<double>({1, 3, 16, 16}, rng, 0, 1);
  GradCheckOptions opt;
  opt.rtol = 1e-3;
  auto report = check_gradients([&] { return spa_loss(pl, pr, gl, gr); }, {pl, pr}, opt);
  EXPECT_TRUE(report.passed) << report.worst << " rel " << report.max_rel_error;
}

TEST(Psnr, KnownValues) {
  auto gt = constant({3, 4, 4}, 0.5);
  EXPECT_NEAR(psnr(constant({3, 4, 4}, 0.6), gt), 20.0, 1e-9);
  EXPECT_NEAR(psnr(constant({3, 4, 4}, 0.0), constant({3, 4, 4}, 1.0)), 0.0, 1e-12);
  EXPECT_EQ(psnr(gt, gt), std::numeric_limits<double>::infinity());
  EXPECT_NEAR(psnr(constant({3, 4, 4}, 60), constant({3, 4, 4}, 50), 255.0), 20 * std::log10(25.5), 1e-9);
}

TEST(Otsu, SeparatesTwoClusters) {
  std::vector<double> v;
  for (int i = 0; i < 50; ++i) v.push_back(0.1 + 0.001 * i);
  for (int i = 0; i < 30; ++i) v.push_back(0.8 + 0.001 * i);
  const double t = otsu_threshold(v);
  EXPECT_GT(t, 0.149);
  EXPECT_LE(t, 0.8);
  EXPECT_EQ(otsu_threshold(std::vector<double>(5, 0.0)), std::numeric_limits<double>::infinity());
}

TEST(MseMap, CheckerboardErrorsAreFlagged) {
  const std::int64_t h = 6, w = 8;
  std::vector<float> pred(3 * h * w, 0.0f);
  for (int ch = 0; ch < 3; ++ch)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x) pred[(ch * h + y) * w + x] = (x + y) % 2 ? 1.0f : 0.0f;
  auto map = mse_map(Tensor<float>(Shape{3, h, w}, pred), Tensor<float>(Shape{3, h, w}, 0.0f));
  ASSERT_EQ(map.shape(), (Shape{h, w}));
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) EXPECT_EQ(map[y * w + x], (x + y) % 2 ? 1.0f : 0.0f);
}

TEST(MseMap, ThresholdIsInclusive) {
  std::vector<float> pred{0.5f, 0.25f, 0.0f, 0.75f};
  auto map = mse_map(Tensor<float>(Shape{1, 2, 2}, pred), Tensor<float>(Shape{1, 2, 2}, 0.0f), 0.0625);
  EXPECT_EQ(as_double(map), (std::vector<double>{1, 1, 0, 1}));
  auto none = mse_map(Tensor<float>(Shape{1, 2, 2}, 0.0f), Tensor<float>(Shape{1, 2, 2}, 0.0f));
  for (float v : none.data()) EXPECT_EQ(v, 0.0f);
}

}  // namespace
}  // namespace lfe::objectives
