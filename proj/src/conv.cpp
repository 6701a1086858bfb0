#include <algorithm>
#include <string>

#include "cfanet/errors.hpp"
#include "cfanet/layers.hpp"
#include "cfanet/parallel.hpp"

namespace cfanet {
namespace {

struct ConvGeometry {
  std::size_t in_c, in_h, in_w;
  std::size_t kh, kw, pad;
  std::size_t out_h, out_w;

  std::size_t patch_len() const { return in_c * kh * kw; }
  std::size_t out_pixels() const { return out_h * out_w; }
};

ConvGeometry geometry(const Shape& in, const ConvLayer& layer) {
  const Shape out = conv2d_output_shape(in, layer);
  return {in.c, in.h, in.w, layer.kernel_h(), layer.kernel_w(), layer.padding, out.h, out.w};
}

// Unrolls output rows [row0, row0 + rows) of one sample into a
// (inC*kh*kw) x (rows*out_w) matrix.
void im2col(std::span<const Real> src, const ConvGeometry& g, std::size_t row0, std::size_t rows,
            std::vector<Real>& col) {
  const std::size_t band = rows * g.out_w;
  col.assign(g.patch_len() * band, Real(0));
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  std::size_t row = 0;
  for (std::size_t ic = 0; ic < g.in_c; ++ic) {
    const Real* plane = src.data() + ic * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx, ++row) {
        Real* dst = col.data() + row * band;
        for (std::size_t r = 0; r < rows; ++r) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(row0 + r + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          const Real* line = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            dst[r * g.out_w + ox] = line[ix];
          }
        }
      }
    }
  }
}

void im2col(std::span<const Real> src, const ConvGeometry& g, std::vector<Real>& col) {
  im2col(src, g, 0, g.out_h, col);
}

void col2im(const std::vector<Real>& col, const ConvGeometry& g, std::span<Real> dst) {
  std::fill(dst.begin(), dst.end(), Real(0));
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  std::size_t row = 0;
  for (std::size_t ic = 0; ic < g.in_c; ++ic) {
    Real* plane = dst.data() + ic * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx, ++row) {
        const Real* src = col.data() + row * g.out_pixels();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          Real* line = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            line[ix] += src[oy * g.out_w + ox];
          }
        }
      }
    }
  }
}

}  // namespace

ConvLayer::ConvLayer(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_size,
                     std::size_t padding)
    : kernel({out_channels, in_channels, kernel_size, kernel_size}),
      bias(out_channels, Real(0)),
      padding(padding) {
  validate();
}

void ConvLayer::validate() const {
  if (kernel.n() == 0 || kernel.c() == 0 || kernel.h() == 0 || kernel.w() == 0) {
    throw ShapeError("conv kernel must have positive extents, got " + kernel.shape().str());
  }
  if (bias.size() != kernel.n()) {
    throw ShapeError("conv bias length " + std::to_string(bias.size()) +
                     " does not match output channels " + std::to_string(kernel.n()));
  }
}

Shape conv2d_output_shape(const Shape& input, const ConvLayer& layer) {
  const Shape ks = layer.kernel.shape();
  if (input.c != layer.in_channels()) {
    throw ShapeError("conv2d: input shape " + input.str() + " incompatible with kernel " +
                     ks.str() + " (channel mismatch)");
  }
  const std::size_t padded_h = input.h + 2 * layer.padding;
  const std::size_t padded_w = input.w + 2 * layer.padding;
  if (padded_h < ks.h || padded_w < ks.w) {
    throw ShapeError("conv2d: input shape " + input.str() + " smaller than kernel " + ks.str() +
                     " with padding " + std::to_string(layer.padding));
  }
  return {input.n, ks.n, padded_h - ks.h + 1, padded_w - ks.w + 1};
}

Tensor conv2d_forward(const Tensor& input, const ConvLayer& layer) {
  const Shape out_shape = conv2d_output_shape(input.shape(), layer);
  const ConvGeometry g = geometry(input.shape(), layer);
  Tensor out(out_shape);
  const std::size_t k_len = g.patch_len();
  const Real* weights = layer.kernel.values().data();

  // Large images are unrolled a band of output rows at a time to bound the
  // column buffer. Each output element sums its taps in the same order
  // whatever the banding.
  constexpr std::size_t kMaxColumnElements = std::size_t{1} << 22;
  const std::size_t rows_per_band =
      std::clamp<std::size_t>(kMaxColumnElements / std::max<std::size_t>(1, k_len * g.out_w), 1,
                              g.out_h);
  const std::size_t bands = (g.out_h + rows_per_band - 1) / rows_per_band;

  parallel_for(input.n() * bands, [&](std::size_t job) {
    const std::size_t n = job / bands;
    const std::size_t row0 = (job % bands) * rows_per_band;
    const std::size_t rows = std::min(rows_per_band, g.out_h - row0);
    const std::size_t band = rows * g.out_w;
    std::vector<Real> col;
    im2col(input.sample(n), g, row0, rows, col);
    for (std::size_t o = 0; o < out_shape.c; ++o) {
      Real* dst = out.plane(n, o).data() + row0 * g.out_w;
      std::fill(dst, dst + band, layer.bias[o]);
      const Real* w_row = weights + o * k_len;
      for (std::size_t k = 0; k < k_len; ++k) {
        const Real w = w_row[k];
        const Real* src = col.data() + k * band;
        for (std::size_t p = 0; p < band; ++p) dst[p] += w * src[p];
      }
    }
  });
  return out;
}

ConvGrads conv2d_backward(const Tensor& input, const ConvLayer& layer, const Tensor& grad_out) {
  const Shape out_shape = conv2d_output_shape(input.shape(), layer);
  if (grad_out.shape() != out_shape) {
    throw ShapeError("conv2d_backward: grad_out shape " + grad_out.shape().str() +
                     " does not match forward output " + out_shape.str());
  }
  const ConvGeometry g = geometry(input.shape(), layer);
  const std::size_t k_len = g.patch_len();
  const std::size_t pixels = g.out_pixels();
  const std::size_t out_c = out_shape.c;
  const Real* weights = layer.kernel.values().data();

  ConvGrads grads{Tensor(input.shape()), Tensor(layer.kernel.shape()),
                  std::vector<Real>(out_c, Real(0))};

  // Per-sample partial weight gradients, reduced in sample order afterwards.
  std::vector<std::vector<Real>> partial_kernel(input.n());
  std::vector<std::vector<Real>> partial_bias(input.n());

  parallel_for(input.n(), [&](std::size_t n) {
    std::vector<Real> col;
    im2col(input.sample(n), g, col);
    std::vector<Real>& gk = partial_kernel[n];
    std::vector<Real>& gb = partial_bias[n];
    gk.assign(out_c * k_len, Real(0));
    gb.assign(out_c, Real(0));
    std::vector<Real> grad_col(k_len * pixels, Real(0));

    for (std::size_t o = 0; o < out_c; ++o) {
      const Real* go = grad_out.plane(n, o).data();
      Real bsum = 0;
      for (std::size_t p = 0; p < pixels; ++p) bsum += go[p];
      gb[o] = bsum;
      const Real* w_row = weights + o * k_len;
      Real* gk_row = gk.data() + o * k_len;
      for (std::size_t k = 0; k < k_len; ++k) {
        const Real* src = col.data() + k * pixels;
        Real* gc = grad_col.data() + k * pixels;
        const Real w = w_row[k];
        Real acc = 0;
        for (std::size_t p = 0; p < pixels; ++p) {
          acc += go[p] * src[p];
          gc[p] += w * go[p];
        }
        gk_row[k] = acc;
      }
    }
    col2im(grad_col, g, grads.input.sample(n));
  });

  Real* gk_total = grads.kernel.values().data();
  for (std::size_t n = 0; n < input.n(); ++n) {
    for (std::size_t i = 0; i < partial_kernel[n].size(); ++i) gk_total[i] += partial_kernel[n][i];
    for (std::size_t o = 0; o < out_c; ++o) grads.bias[o] += partial_bias[n][o];
  }
  return grads;
}

}  // namespace cfanet
