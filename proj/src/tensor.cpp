#include "cfanet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cfanet/errors.hpp"

namespace cfanet {

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << n << ", " << c << ", " << h << ", " << w << ")";
  return os.str();
}

Tensor::Tensor(Shape shape, Real fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor::Tensor(Shape shape, std::vector<Real> values) : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
  }
}

std::span<Real> Tensor::plane(std::size_t n, std::size_t c) {
  return std::span<Real>(data_).subspan(index(n, c, 0, 0), shape_.h * shape_.w);
}

std::span<const Real> Tensor::plane(std::size_t n, std::size_t c) const {
  return std::span<const Real>(data_).subspan(index(n, c, 0, 0), shape_.h * shape_.w);
}

std::span<Real> Tensor::sample(std::size_t n) {
  return std::span<Real>(data_).subspan(index(n, 0, 0, 0), shape_.c * shape_.h * shape_.w);
}

std::span<const Real> Tensor::sample(std::size_t n) const {
  return std::span<const Real>(data_).subspan(index(n, 0, 0, 0), shape_.c * shape_.h * shape_.w);
}

void Tensor::fill(Real value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

Tensor Tensor::crop(std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) const {
  if (y0 + h > shape_.h || x0 + w > shape_.w) {
    throw ShapeError("crop window exceeds tensor " + shape_.str());
  }
  Tensor out({shape_.n, shape_.c, h, w});
  for (std::size_t n = 0; n < shape_.n; ++n) {
    for (std::size_t c = 0; c < shape_.c; ++c) {
      for (std::size_t y = 0; y < h; ++y) {
        const Real* src = &data_[index(n, c, y0 + y, x0)];
        std::copy(src, src + w, &out(n, c, y, 0));
      }
    }
  }
  return out;
}

Tensor Tensor::center_crop(std::size_t h, std::size_t w) const {
  if (h > shape_.h || w > shape_.w) {
    throw ShapeError("center crop larger than tensor " + shape_.str());
  }
  return crop((shape_.h - h) / 2, (shape_.w - w) / 2, h, w);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "tensor add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "tensor subtract");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor stack_samples(std::span<const Tensor* const> samples) {
  if (samples.empty()) return {};
  const Shape first = samples.front()->shape();
  Tensor out({samples.size(), first.c, first.h, first.w});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Tensor& s = *samples[i];
    if (s.n() != 1 || s.c() != first.c || s.h() != first.h || s.w() != first.w) {
      throw ShapeError("stack_samples: sample " + std::to_string(i) + " has shape " +
                       s.shape().str() + ", expected (1, " + std::to_string(first.c) + ", " +
                       std::to_string(first.h) + ", " + std::to_string(first.w) + ")");
    }
    std::copy(s.values().begin(), s.values().end(), out.sample(i).begin());
  }
  return out;
}

}  // namespace cfanet
