#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unistd.h>

namespace cfanet::testing {

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, Real lo, Real hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (Real& v : t.values()) v = static_cast<Real>(dist(rng));
  return t;
}

Tensor textured_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> freq(0.05, 0.6);
  std::uniform_real_distribution<double> phase(0, 6.283185307179586);
  std::uniform_real_distribution<double> noise(-0.02, 0.02);
  Tensor img({1, 3, h, w});
  for (std::size_t c = 0; c < 3; ++c) {
    double fy[3], fx[3], ph[3];
    for (int k = 0; k < 3; ++k) {
      fy[k] = freq(rng);
      fx[k] = freq(rng);
      ph[k] = phase(rng);
    }
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double v = 0.5;
        for (int k = 0; k < 3; ++k) v += 0.13 * std::sin(fy[k] * y + fx[k] * x + ph[k]);
        v += noise(rng);
        img(0, c, y, x) = static_cast<Real>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

Real max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  Real worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

Tensor direct_conv2d(const Tensor& input, const ConvLayer& layer) {
  const std::size_t pad = layer.padding;
  const std::size_t kh = layer.kernel_h();
  const std::size_t kw = layer.kernel_w();
  const std::size_t oh = input.h() + 2 * pad - kh + 1;
  const std::size_t ow = input.w() + 2 * pad - kw + 1;
  Tensor out({input.n(), layer.out_channels(), oh, ow});
  for (std::size_t n = 0; n < input.n(); ++n) {
    for (std::size_t o = 0; o < layer.out_channels(); ++o) {
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
          Real acc = layer.bias[o];
          for (std::size_t i = 0; i < layer.in_channels(); ++i) {
            for (std::size_t ky = 0; ky < kh; ++ky) {
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const auto iy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(pad);
                const auto ix = static_cast<std::ptrdiff_t>(x + kx) - static_cast<std::ptrdiff_t>(pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(input.h()) ||
                    ix >= static_cast<std::ptrdiff_t>(input.w())) {
                  continue;
                }
                acc += layer.kernel(o, i, ky, kx) *
                       input(n, i, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
              }
            }
          }
          out(n, o, y, x) = acc;
        }
      }
    }
  }
  return out;
}

GradCheckResult check_gradient(const std::function<Real()>& loss, std::span<Real> params,
                               std::span<const Real> analytic, double rtol, double atol,
                               double step, std::size_t max_entries) {
  GradCheckResult result;
  const std::size_t n = params.size();
  std::size_t stride = 1;
  if (max_entries != 0 && n > max_entries) stride = (n + max_entries - 1) / max_entries;
  for (std::size_t i = 0; i < n; i += stride) {
    const Real saved = params[i];
    params[i] = static_cast<Real>(saved + step);
    const double plus = loss();
    params[i] = static_cast<Real>(saved - step);
    const double minus = loss();
    params[i] = saved;
    const double numeric = (plus - minus) / (2 * step);
    const double a = analytic[i];
    const double bound = rtol * std::max(std::abs(a), std::abs(numeric)) + atol;
    const double ratio = std::abs(a - numeric) / bound;
    ++result.checked;
    if (ratio > result.worst) result.worst = ratio;
    if (ratio > 1) {
      ++result.failures;
      if (result.detail.empty()) {
        std::ostringstream os;
        os.precision(10);
        os << "entry " << i << ": analytic " << a << " numeric " << numeric;
        result.detail = os.str();
      }
    }
  }
  return result;
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("cfanet_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Probe::Probe(std::size_t size, std::uint64_t seed) : weights(size) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (Real& w : weights) w = static_cast<Real>(dist(rng));
}

Real Probe::operator()(const Tensor& t) const {
  Real sum = 0;
  for (std::size_t i = 0; i < t.size(); ++i) sum += weights[i] * t[i];
  return sum;
}

Tensor Probe::grad(const Shape& shape) const {
  return Tensor(shape, std::vector<Real>(weights.begin(), weights.begin() + shape.size()));
}

}  // namespace cfanet::testing
