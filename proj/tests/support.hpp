#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>

#include "cfanet/layers.hpp"
#include "cfanet/tensor.hpp"

namespace cfanet::testing {

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, Real lo = -1, Real hi = 1);

/// Smooth-ish RGB test image in [0,1]: low-frequency sinusoids plus a little
/// pixel noise.
Tensor textured_image(std::size_t h, std::size_t w, std::uint64_t seed);

Real max_abs_diff(const Tensor& a, const Tensor& b);

/// Six-loop reference convolution (cross-correlation, stride 1, zero padding).
Tensor direct_conv2d(const Tensor& input, const ConvLayer& layer);

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst = 0;  // largest |a - n| / (rtol * max(|a|, |n|) + atol)
  std::string detail;
};

/// Central differences (step h) of `loss` with respect to every entry of
/// `params` (or `max_entries` of them spread evenly), compared with the
/// analytic gradient. An entry passes when
/// |a - n| <= rtol * max(|a|, |n|) + atol.
GradCheckResult check_gradient(const std::function<Real()>& loss, std::span<Real> params,
                               std::span<const Real> analytic, double rtol = 1e-4,
                               double atol = 1e-8, double step = 1e-5,
                               std::size_t max_entries = 0);

/// Fresh empty directory under the system temp dir.
std::filesystem::path fresh_dir(const std::string& name);

/// Weighted sum sum_i w_i x_i with fixed pseudo-random weights, and its
/// gradient: a loss that exercises every output element.
struct Probe {
  std::vector<Real> weights;
  explicit Probe(std::size_t size, std::uint64_t seed);
  Real operator()(const Tensor& t) const;
  Tensor grad(const Shape& shape) const;
};

}  // namespace cfanet::testing
