#include <gtest/gtest.h>

#include "cfanet/errors.hpp"
#include "cfanet/layers.hpp"
#include "cfanet/parallel.hpp"
#include "support.hpp"

namespace cfanet {
namespace {

using testing::check_gradient;
using testing::direct_conv2d;
using testing::max_abs_diff;
using testing::random_tensor;

ConvLayer random_conv(std::size_t out, std::size_t in, std::size_t k, std::size_t pad,
                      std::mt19937_64& rng) {
  ConvLayer layer(out, in, k, pad);
  layer.kernel = random_tensor(layer.kernel.shape(), rng);
  for (Real& b : layer.bias) b = random_tensor({1, 1, 1, 1}, rng)[0];
  return layer;
}

TEST(Conv, IdentityScalar) {
  ConvLayer layer(1, 1, 1, 0);
  layer.kernel[0] = 1;
  const Tensor out = conv2d_forward(Tensor({1, 1, 1, 1}, {5}), layer);
  EXPECT_EQ(out[0], 5);
}

TEST(Conv, OnesWithPadding) {
  ConvLayer layer(1, 1, 3, 1);
  layer.kernel.fill(1);
  const Tensor out = conv2d_forward(Tensor({1, 1, 3, 3}, 1), layer);
  EXPECT_EQ(out(0, 0, 1, 1), 9);
  EXPECT_EQ(out(0, 0, 0, 0), 4);
  EXPECT_EQ(out(0, 0, 2, 2), 4);
  EXPECT_EQ(out(0, 0, 0, 1), 6);
  EXPECT_EQ(out(0, 0, 1, 2), 6);
}

TEST(Conv, CrossCorrelationConvention) {
  ConvLayer layer(1, 1, 2, 0);
  layer.kernel = Tensor({1, 1, 2, 2}, {1, 2, 3, 4});
  const Tensor out = conv2d_forward(Tensor({1, 1, 2, 2}, {1, 0, 0, 0}), layer);
  EXPECT_EQ(out[0], 1);  // a flipped kernel would give 4
}

TEST(Conv, MatchesDirectOracle) {
  std::mt19937_64 rng(11);
  const ConvLayer layer = random_conv(4, 3, 3, 1, rng);
  const Tensor input = random_tensor({2, 3, 8, 8}, rng);
  EXPECT_LE(max_abs_diff(conv2d_forward(input, layer), direct_conv2d(input, layer)), 1e-10);
}

TEST(Conv, OutputShapeAndErrors) {
  ConvLayer layer(5, 2, 3, 0);
  EXPECT_EQ(conv2d_output_shape({1, 2, 10, 7}, layer), (Shape{1, 5, 8, 5}));
  try {
    conv2d_output_shape({1, 3, 10, 10}, layer);
    FAIL();
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("(1, 3, 10, 10)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(5, 2, 3, 3)"), std::string::npos) << msg;
  }
  EXPECT_THROW(conv2d_output_shape({1, 2, 2, 2}, layer), ShapeError);
}

TEST(Conv, ScalarBackward) {
  ConvLayer layer(1, 1, 1, 0);
  layer.kernel[0] = 3;
  const ConvGrads g = conv2d_backward(Tensor({1, 1, 1, 1}, {2}), layer, Tensor({1, 1, 1, 1}, {1}));
  EXPECT_EQ(g.input[0], 3);
  EXPECT_EQ(g.kernel[0], 2);
  EXPECT_EQ(g.bias[0], 1);
}

TEST(Conv, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(3);
  const ConvLayer layer = random_conv(2, 2, 3, 1, rng);
  const Tensor input = random_tensor({1, 2, 4, 4}, rng);
  const ConvGrads g = conv2d_backward(input, layer, Tensor({1, 2, 4, 4}));
  for (Real v : g.input.values()) EXPECT_EQ(v, 0);
  for (Real v : g.kernel.values()) EXPECT_EQ(v, 0);
  for (Real v : g.bias) EXPECT_EQ(v, 0);
}

TEST(Conv, BackwardRejectsWrongGradShape) {
  ConvLayer layer(1, 1, 3, 0);
  EXPECT_THROW(conv2d_backward(Tensor({1, 1, 4, 4}), layer, Tensor({1, 1, 4, 4})), ShapeError);
}

TEST(Conv, FiniteDifferenceGradients) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    ConvLayer layer = random_conv(3, 2, 3, seed % 2, rng);
    Tensor input = random_tensor({2, 2, 5, 5}, rng);
    const Shape out_shape = conv2d_output_shape(input.shape(), layer);
    const testing::Probe probe(out_shape.size(), seed + 100);
    auto loss = [&] { return probe(conv2d_forward(input, layer)); };
    const ConvGrads g = conv2d_backward(input, layer, probe.grad(out_shape));
    for (auto r : {check_gradient(loss, input.values(), g.input.values()),
                   check_gradient(loss, layer.kernel.values(), g.kernel.values()),
                   check_gradient(loss, layer.bias, g.bias)}) {
      EXPECT_EQ(r.failures, 0u) << "seed " << seed << ": " << r.detail;
    }
  }
}

TEST(Conv, ThreadCountDoesNotChangeResults) {
  std::mt19937_64 rng(5);
  const ConvLayer layer = random_conv(4, 3, 3, 1, rng);
  const Tensor input = random_tensor({6, 3, 7, 7}, rng);
  const Tensor grad = random_tensor({6, 4, 7, 7}, rng);
  set_num_threads(1);
  const Tensor out1 = conv2d_forward(input, layer);
  const ConvGrads g1 = conv2d_backward(input, layer, grad);
  set_num_threads(3);
  const Tensor out3 = conv2d_forward(input, layer);
  const ConvGrads g3 = conv2d_backward(input, layer, grad);
  set_num_threads(1);
  EXPECT_EQ(out1, out3);
  EXPECT_EQ(g1.kernel, g3.kernel);
  EXPECT_EQ(g1.bias, g3.bias);
  EXPECT_EQ(g1.input, g3.input);
}

TEST(Conv, LargeImageBandingMatchesOracle) {
  std::mt19937_64 rng(9);
  const ConvLayer layer = random_conv(2, 64, 3, 1, rng);
  const Tensor input = random_tensor({1, 64, 40, 300}, rng);
  EXPECT_LE(max_abs_diff(conv2d_forward(input, layer), direct_conv2d(input, layer)), 1e-10);
}

}  // namespace
}  // namespace cfanet
