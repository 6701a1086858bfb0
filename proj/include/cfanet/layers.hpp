#pragma once

#include <cstdint>
#include <vector>

#include "cfanet/tensor.hpp"

namespace cfanet {

// ---------------------------------------------------------------------------
// Convolution (stride 1, zero padding, cross-correlation: no kernel flip)
// ---------------------------------------------------------------------------

struct ConvLayer {
  Tensor kernel;  // (out_channels, in_channels, kh, kw)
  std::vector<Real> bias;
  std::size_t padding = 0;
  /// Multiplier applied to the optimizer learning rate for this layer.
  Real lr_scale = 1;

  ConvLayer() = default;
  ConvLayer(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_size,
            std::size_t padding);

  std::size_t out_channels() const { return kernel.n(); }
  std::size_t in_channels() const { return kernel.c(); }
  std::size_t kernel_h() const { return kernel.h(); }
  std::size_t kernel_w() const { return kernel.w(); }
  std::size_t parameter_count() const { return kernel.size() + bias.size(); }
  void validate() const;
};

/// Output extent (n, outC, h - kh + 1 + 2p, w - kw + 1 + 2p).
Shape conv2d_output_shape(const Shape& input, const ConvLayer& layer);
Tensor conv2d_forward(const Tensor& input, const ConvLayer& layer);

struct ConvGrads {
  Tensor input;
  Tensor kernel;
  std::vector<Real> bias;
};
ConvGrads conv2d_backward(const Tensor& input, const ConvLayer& layer, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

inline constexpr Real kSeluLambda = 1.0507009873554805;
inline constexpr Real kSeluAlpha = 1.6732632423543772;

Tensor relu(const Tensor& input);
/// Passes the gradient where input > 0; zero elsewhere, including at 0.
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

Tensor selu(const Tensor& input);
Tensor selu_backward(const Tensor& input, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// Batch normalization (per channel, over n*h*w)
// ---------------------------------------------------------------------------

enum class NormMode { train, eval };

struct BatchNormLayer {
  std::vector<Real> gamma;
  std::vector<Real> beta;
  std::vector<Real> running_mean;
  std::vector<Real> running_var;
  Real epsilon = 1e-5;
  Real momentum = 0.1;
  NormMode mode = NormMode::train;

  BatchNormLayer() = default;
  explicit BatchNormLayer(std::size_t channels);

  std::size_t channels() const { return gamma.size(); }
  std::size_t parameter_count() const { return gamma.size() + beta.size(); }
  void validate() const;
};

/// Values saved by the forward pass for the backward pass.
struct BatchNormCache {
  NormMode mode = NormMode::train;
  Tensor normalized;          // x_hat
  std::vector<Real> inv_std;  // 1 / sqrt(var + eps), per channel
};

/// Train mode normalizes with batch statistics and updates the running
/// statistics (unbiased variance); eval mode uses the running statistics.
Tensor batchnorm_forward(const Tensor& input, BatchNormLayer& layer,
                         BatchNormCache* cache = nullptr);

struct BatchNormGrads {
  Tensor input;
  std::vector<Real> gamma;
  std::vector<Real> beta;
};
BatchNormGrads batchnorm_backward(const Tensor& grad_out, const BatchNormLayer& layer,
                                  const BatchNormCache& cache);

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

struct LossResult {
  Real loss = 0;
  Tensor grad;
};

/// (1/n) * sum over samples of the squared L2 distance; n is the batch size.
LossResult l2_loss(const Tensor& pred, const Tensor& target);

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// Kernel ~ N(0, stddev^2), bias = 0.
void init_gaussian(ConvLayer& layer, Real stddev, std::uint64_t seed);

enum class MsraScale {
  multiplier,  // stddev = factor * sqrt(2 / fan_in)
  absolute,    // stddev = factor
};

/// Kernel ~ N(0, sigma^2) with fan_in = inC * kh * kw, bias = 0.
void init_msra(ConvLayer& layer, Real factor, std::uint64_t seed,
               MsraScale scale = MsraScale::multiplier);

}  // namespace cfanet
