#include <cmath>
#include <random>
#include <string>

#include "cfanet/errors.hpp"
#include "cfanet/layers.hpp"

namespace cfanet {

// --- activations -----------------------------------------------------------

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (Real& v : out.values()) v = v > 0 ? v : Real(0);
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  require_same_shape(input, grad_out, "relu_backward");
  Tensor grad(input.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = input[i] > 0 ? grad_out[i] : Real(0);
  return grad;
}

Tensor selu(const Tensor& input) {
  Tensor out = input;
  for (Real& v : out.values()) {
    v = v > 0 ? kSeluLambda * v : kSeluLambda * kSeluAlpha * std::expm1(v);
  }
  return out;
}

Tensor selu_backward(const Tensor& input, const Tensor& grad_out) {
  require_same_shape(input, grad_out, "selu_backward");
  Tensor grad(input.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const Real x = input[i];
    const Real d = x > 0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
    grad[i] = d * grad_out[i];
  }
  return grad;
}

// --- batch norm --------------------------------------------------------------

BatchNormLayer::BatchNormLayer(std::size_t channels)
    : gamma(channels, Real(1)),
      beta(channels, Real(0)),
      running_mean(channels, Real(0)),
      running_var(channels, Real(1)) {}

void BatchNormLayer::validate() const {
  const std::size_t c = gamma.size();
  if (beta.size() != c || running_mean.size() != c || running_var.size() != c) {
    throw ShapeError("batchnorm parameter vectors have inconsistent lengths");
  }
  if (!(epsilon > 0)) throw ConfigError("batchnorm epsilon must be positive");
  for (Real v : running_var) {
    if (v < 0) throw ConfigError("batchnorm running variance must be nonnegative");
  }
}

Tensor batchnorm_forward(const Tensor& input, BatchNormLayer& layer, BatchNormCache* cache) {
  const std::size_t channels = layer.channels();
  if (input.c() != channels) {
    throw ShapeError("batchnorm: input shape " + input.shape().str() + " but layer has " +
                     std::to_string(channels) + " channels");
  }
  const std::size_t hw = input.h() * input.w();
  const std::size_t count = input.n() * hw;
  Tensor out(input.shape());
  Tensor normalized(input.shape());
  std::vector<Real> inv_std(channels);

  for (std::size_t c = 0; c < channels; ++c) {
    Real mean = 0;
    Real var = 0;
    if (layer.mode == NormMode::train) {
      if (count < 2) {
        throw DegenerateBatchError("batchnorm: train-mode statistics need at least 2 values per "
                                   "channel, got " + std::to_string(count));
      }
      for (std::size_t n = 0; n < input.n(); ++n) {
        for (Real v : input.plane(n, c)) mean += v;
      }
      mean /= static_cast<Real>(count);
      for (std::size_t n = 0; n < input.n(); ++n) {
        for (Real v : input.plane(n, c)) var += (v - mean) * (v - mean);
      }
      var /= static_cast<Real>(count);
      const Real m = layer.momentum;
      const Real unbiased = var * static_cast<Real>(count) / static_cast<Real>(count - 1);
      layer.running_mean[c] = (1 - m) * layer.running_mean[c] + m * mean;
      layer.running_var[c] = (1 - m) * layer.running_var[c] + m * unbiased;
    } else {
      mean = layer.running_mean[c];
      var = layer.running_var[c];
    }
    const Real is = 1 / std::sqrt(var + layer.epsilon);
    inv_std[c] = is;
    for (std::size_t n = 0; n < input.n(); ++n) {
      auto src = input.plane(n, c);
      auto xh = normalized.plane(n, c);
      auto dst = out.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        xh[i] = (src[i] - mean) * is;
        dst[i] = layer.gamma[c] * xh[i] + layer.beta[c];
      }
    }
  }
  if (cache != nullptr) {
    cache->mode = layer.mode;
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

BatchNormGrads batchnorm_backward(const Tensor& grad_out, const BatchNormLayer& layer,
                                  const BatchNormCache& cache) {
  require_same_shape(grad_out, cache.normalized, "batchnorm_backward");
  const std::size_t channels = layer.channels();
  const std::size_t hw = grad_out.h() * grad_out.w();
  const auto count = static_cast<Real>(grad_out.n() * hw);
  BatchNormGrads grads{Tensor(grad_out.shape()), std::vector<Real>(channels, Real(0)),
                       std::vector<Real>(channels, Real(0))};

  for (std::size_t c = 0; c < channels; ++c) {
    Real sum_dy = 0;
    Real sum_dy_xh = 0;
    for (std::size_t n = 0; n < grad_out.n(); ++n) {
      auto dy = grad_out.plane(n, c);
      auto xh = cache.normalized.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        sum_dy += dy[i];
        sum_dy_xh += dy[i] * xh[i];
      }
    }
    grads.gamma[c] = sum_dy_xh;
    grads.beta[c] = sum_dy;
    const Real scale = layer.gamma[c] * cache.inv_std[c];
    for (std::size_t n = 0; n < grad_out.n(); ++n) {
      auto dy = grad_out.plane(n, c);
      auto xh = cache.normalized.plane(n, c);
      auto dx = grads.input.plane(n, c);
      if (cache.mode == NormMode::train) {
        for (std::size_t i = 0; i < hw; ++i) {
          dx[i] = scale * (dy[i] - sum_dy / count - xh[i] * sum_dy_xh / count);
        }
      } else {
        for (std::size_t i = 0; i < hw; ++i) dx[i] = scale * dy[i];
      }
    }
  }
  return grads;
}

// --- loss ----------------------------------------------------------------------

LossResult l2_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "l2_loss");
  LossResult result{0, Tensor(pred.shape())};
  if (pred.n() == 0) return result;
  const auto n = static_cast<Real>(pred.n());
  Real total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Real d = pred[i] - target[i];
    total += d * d;
    result.grad[i] = 2 * d / n;
  }
  result.loss = total / n;
  return result;
}

// --- initialization --------------------------------------------------------------

void init_gaussian(ConvLayer& layer, Real stddev, std::uint64_t seed) {
  std::fill(layer.bias.begin(), layer.bias.end(), Real(0));
  if (stddev <= 0) {
    layer.kernel.fill(0);
    return;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, static_cast<double>(stddev));
  for (Real& w : layer.kernel.values()) w = static_cast<Real>(dist(rng));
}

void init_msra(ConvLayer& layer, Real factor, std::uint64_t seed, MsraScale scale) {
  const auto fan_in = static_cast<Real>(layer.in_channels() * layer.kernel_h() * layer.kernel_w());
  const Real stddev = scale == MsraScale::multiplier ? factor * std::sqrt(2 / fan_in) : factor;
  init_gaussian(layer, stddev, seed);
}

}  // namespace cfanet
