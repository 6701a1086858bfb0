#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cfanet {

#ifdef CFANET_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

/// N x C x H x W extents of a dense tensor.
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t size() const { return n * c * h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense row-major NCHW array. Carries images, feature maps, kernels and
/// their gradients.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = 0);
  Tensor(Shape shape, std::vector<Real> values);

  const Shape& shape() const { return shape_; }
  std::size_t n() const { return shape_.n; }
  std::size_t c() const { return shape_.c; }
  std::size_t h() const { return shape_.h; }
  std::size_t w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  Real& operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[index(n, c, y, x)];
  }
  Real operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[index(n, c, y, x)];
  }
  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }

  /// Contiguous H*W block of channel c in sample n.
  std::span<Real> plane(std::size_t n, std::size_t c);
  std::span<const Real> plane(std::size_t n, std::size_t c) const;

  /// All channels of sample n.
  std::span<Real> sample(std::size_t n);
  std::span<const Real> sample(std::size_t n) const;

  void fill(Real value);
  bool all_finite() const;

  /// Spatial crop [y0, y0+h) x [x0, x0+w) of every sample and channel.
  Tensor crop(std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) const;
  /// Center crop to (h, w).
  Tensor center_crop(std::size_t h, std::size_t w) const;

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

/// Throws ShapeError naming both shapes when they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);

/// Stacks single-sample tensors of equal C x H x W along the batch axis.
Tensor stack_samples(std::span<const Tensor* const> samples);

}  // namespace cfanet
