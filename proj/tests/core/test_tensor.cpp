#include <gtest/gtest.h>

#include <random>

#include "lfe/core/ops.hpp"
#include "lfe/core/tape.hpp"
#include "support/oracles.hpp"

namespace lfe {
namespace {

TEST(Tensor, BufferMatchesShape) {
  Tensor<float> t(Shape{2, 3, 4, 5}, 1.5f);
  EXPECT_EQ(t.numel(), 120);
  EXPECT_EQ(t.data().size(), 120u);
  EXPECT_THROW(Tensor<float>(Shape{2, 2}, std::vector<float>{1, 2, 3}), ContractViolation);
}

TEST(Tensor, CopiesShareStorageAndCloneDoesNot) {
  Tensor<float> a(Shape{3}, 1.0f);
  Tensor<float> b = a;
  b.mutable_data()[0] = 7.0f;
  EXPECT_EQ(a[0], 7.0f);
  Tensor<float> c = a.clone();
  c.mutable_data()[0] = 0.0f;
  EXPECT_EQ(a[0], 7.0f);
}

TEST(Backward, SumGivesOnes) {
  std::mt19937_64 rng(1);
  auto x = testing::random_tensor<double>({2, 3, 4, 4}, rng);
  x.set_requires_grad(true);
  ops::sum(x).backward();
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, SquareGivesTwoX) {
  std::mt19937_64 rng(2);
  auto x = testing::random_tensor<double>({1, 2, 3, 3}, rng);
  x.set_requires_grad(true);
  ops::sum(ops::mul(x, x)).backward();
  for (std::int64_t i = 0; i < x.numel(); ++i) EXPECT_DOUBLE_EQ(x.grad()[i], 2.0 * x[i]);
}

TEST(Backward, RepeatedCallsAccumulateOnLeaves) {
  Tensor<double> x(Shape{4}, 1.0);
  x.set_requires_grad(true);
  auto loss = ops::sum(ops::scale(x, 3.0));
  loss.backward();
  loss.backward();
  for (double g : x.grad()) EXPECT_DOUBLE_EQ(g, 6.0);
  x.zero_grad();
  loss.backward();
  for (double g : x.grad()) EXPECT_DOUBLE_EQ(g, 3.0);
}

TEST(Backward, NonScalarIsRejected) {
  Tensor<double> x(Shape{2, 2}, 1.0);
  x.set_requires_grad(true);
  auto y = ops::scale(x, 2.0);
  EXPECT_THROW(y.backward(), ContractViolation);
}

TEST(Backward, DiamondGraphSumsBothPaths) {
  Tensor<double> x(Shape{3}, std::vector<double>{1, 2, 3});
  x.set_requires_grad(true);
  auto y = ops::mul(x, x);
  auto z = ops::add(y, ops::scale(y, 2.0));  // 3 x^2
  ops::sum(z).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
  EXPECT_DOUBLE_EQ(x.grad()[2], 18.0);
}

TEST(Tape, ReplayVisitsOperationsInReverseExecutionOrder) {
  std::mt19937_64 rng(3);
  auto a = testing::random_tensor<double>({1, 2, 4, 4}, rng);
  auto b = testing::random_tensor<double>({1, 2, 4, 4}, rng);
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  auto c = ops::mul(a, b);
  auto d = ops::sigmoid(c);
  auto e = ops::add(d, a);
  auto loss = ops::mean(ops::relu(e));

  auto tape = ComputationTape<double>::collect(loss);
  ASSERT_EQ(tape.operations().size(), 5u);
  EXPECT_EQ(tape.leaves().size(), 2u);
  for (std::size_t i = 1; i < tape.operations().size(); ++i) {
    EXPECT_LT(tape.operations()[i - 1]->sequence, tape.operations()[i]->sequence);
  }
  std::vector<std::string> visited;
  tape.replay_backward([&](const auto& node) { visited.push_back(node.op); });
  const std::vector<std::string> expected{"mean", "relu", "add", "sigmoid", "mul"};
  EXPECT_EQ(visited, expected);
  EXPECT_TRUE(a.has_grad());
  EXPECT_TRUE(b.has_grad());
}

TEST(GradMode, NoGradGuardSuppressesRecording) {
  Tensor<double> x(Shape{2}, 1.0);
  x.set_requires_grad(true);
  {
    NoGradGuard guard;
    auto y = ops::scale(x, 2.0);
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(ops::scale(x, 2.0).requires_grad());
}

TEST(RandomNormal, SeedDeterminesValues) {
  auto a = ops::random_normal<float>({3, 5}, 42);
  auto b = ops::random_normal<float>({3, 5}, 42);
  auto c = ops::random_normal<float>({3, 5}, 43);
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  EXPECT_FALSE(std::equal(a.data().begin(), a.data().end(), c.data().begin()));
}

}  // namespace
}  // namespace lfe
