#include "cfanet/svec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "cfanet/errors.hpp"
#include "cfanet/models.hpp"

namespace cfanet {

void RadianceImage::validate() const {
  if (pixels.c() != 3 || pixels.n() != 1) {
    throw ShapeError("radiance image must be 1x3xHxW, got " + pixels.shape().str());
  }
  for (Real v : pixels.values()) {
    if (!std::isfinite(v) || v < 0) {
      throw NumericError("radiance image contains a negative or non-finite value");
    }
  }
}

Real RadianceImage::min_value() const {
  const auto values = pixels.values();
  if (values.empty()) throw ShapeError("radiance image is empty");
  return *std::min_element(values.begin(), values.end());
}

Real RadianceImage::max_value() const {
  const auto values = pixels.values();
  if (values.empty()) throw ShapeError("radiance image is empty");
  return *std::max_element(values.begin(), values.end());
}

void SvecConfig::validate() const {
  if (!(r_min > 0) || !(r_max > r_min) || !std::isfinite(r_max)) {
    throw ConfigError("svec: need r_max > r_min > 0");
  }
  if (!(exposure_ratio > 1) || !std::isfinite(exposure_ratio)) {
    throw ConfigError("svec: exposure ratio must exceed 1");
  }
  if (bits < 1 || bits > 30) throw ConfigError("svec: bits must be in [1, 30]");
}

Tensor normalize_radiance(const RadianceImage& image, const SvecConfig& cfg) {
  cfg.validate();
  image.validate();
  const Real lo = image.min_value();
  const Real hi = image.max_value();
  if (!(hi > lo)) {
    throw DegenerateRangeError("cannot normalize a constant radiance image (value " +
                               std::to_string(static_cast<double>(lo)) + ")");
  }
  const Real scale = (cfg.r_max - cfg.r_min) / (hi - lo);
  Tensor out(image.pixels.shape());
  auto src = image.pixels.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = std::floor(std::min(scale * (src[i] - lo), cfg.r_max));
  }
  return out;
}

CfaPattern svec_pattern(const SvecConfig& cfg) {
  cfg.validate();
  const Filter red{1, 0, 0};
  const Filter green{0, 1, 0};
  const Filter blue{0, 0, 1};
  const Filter bayer[2][2] = {{green, red}, {blue, green}};
  std::vector<CfaCell> cells;
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      const bool low = (r / 2) == (c / 2);
      cells.push_back({bayer[r % 2][c % 2], low ? Real{1} : cfg.exposure_ratio});
    }
  }
  return CfaPattern("svec", 4, 4, std::move(cells));
}

Real svec_sample(Real normalized, Real exposure, const SvecConfig& cfg) {
  const Real ceiling = std::min(cfg.r_max, std::ldexp(Real{1}, cfg.bits));
  return std::floor(std::min(exposure * normalized, ceiling));
}

PlaneStack svec_mosaic(const Tensor& normalized, const SvecConfig& cfg, std::size_t phase_y,
                       std::size_t phase_x) {
  const CfaPattern pattern = svec_pattern(cfg);
  PlaneStack stack = mosaic(normalized, pattern, phase_y, phase_x);
  const std::size_t h = normalized.h();
  const std::size_t w = normalized.w();
  for (std::size_t n = 0; n < normalized.n(); ++n) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const CfaCell& cell = pattern.cell_at(y + phase_y, x + phase_x);
        const std::size_t k = static_cast<std::size_t>(stack.mask[y * w + x]);
        const Real v = cell.filter[0] * normalized(n, 0, y, x) +
                       cell.filter[1] * normalized(n, 1, y, x) +
                       cell.filter[2] * normalized(n, 2, y, x);
        stack.planes(n, k, y, x) = svec_sample(v, cell.exposure, cfg) / cfg.r_max;
      }
    }
  }
  return stack;
}

ModelGraph build_svec_model(SvecArch arch, std::uint64_t seed, std::size_t depth,
                            std::size_t width) {
  const CfaPattern pattern = svec_pattern(SvecConfig{});
  if (arch == SvecArch::dmcnn) {
    ModelGraph model = build_dmcnn(seed, pattern.plane_count());
    model.arch = "svec_dmcnn";
    return model;
  }
  VdOptions options;
  options.depth = depth;
  options.width = width;
  ModelGraph model = build_dmcnn_vd_for_pattern(pattern, seed, options);
  model.arch = "svec_dmcnn_vd";
  return model;
}

Real mse_radiance(const Tensor& pred, const Tensor& truth) {
  require_same_shape(pred, truth, "mse_radiance");
  const auto a = pred.values();
  const auto b = truth.values();
  if (a.empty()) throw ShapeError("mse_radiance: empty tensors");
  Real sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Real d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<Real>(a.size());
}

// --- PFM ----------------------------------------------------------------------

namespace {

std::string next_token(std::istream& in, const std::string& source) {
  std::string token;
  if (!(in >> token)) throw TruncatedFileError("PFM " + source + ": header is truncated");
  return token;
}

}  // namespace

RadianceImage read_pfm(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path.string());
  const std::string source = path.string();
  const std::string magic = next_token(file, source);
  std::size_t channels = 0;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    throw FormatError("PFM " + source + ": bad magic '" + magic + "'");
  }
  std::size_t w = 0;
  std::size_t h = 0;
  double scale = 0;
  try {
    w = std::stoul(next_token(file, source));
    h = std::stoul(next_token(file, source));
    scale = std::stod(next_token(file, source));
  } catch (const std::logic_error&) {
    throw FormatError("PFM " + source + ": malformed header");
  }
  if (w == 0 || h == 0 || scale == 0 || w > (1u << 16) || h > (1u << 16)) {
    throw FormatError("PFM " + source + ": invalid dimensions or scale");
  }
  file.get();  // single whitespace byte ends the header
  const bool little = scale < 0;
  const std::size_t count = w * h * channels;
  std::vector<unsigned char> raw(count * 4);
  file.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(file.gcount()) != raw.size()) {
    throw TruncatedFileError("PFM " + source + ": pixel data is truncated");
  }
  RadianceImage image{Tensor({1, 3, h, w})};
  for (std::size_t row = 0; row < h; ++row) {
    const std::size_t y = h - 1 - row;
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        const unsigned char* b = &raw[((row * w + x) * channels + c) * 4];
        std::uint32_t bits = little ? (std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
                                       std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24)
                                    : (std::uint32_t(b[3]) | std::uint32_t(b[2]) << 8 |
                                       std::uint32_t(b[1]) << 16 | std::uint32_t(b[0]) << 24);
        const Real v = static_cast<Real>(std::bit_cast<float>(bits));
        if (channels == 1) {
          for (std::size_t k = 0; k < 3; ++k) image.pixels(0, k, y, x) = v;
        } else {
          image.pixels(0, c, y, x) = v;
        }
      }
    }
  }
  image.validate();
  return image;
}

void write_pfm(const Tensor& rgb, const std::filesystem::path& path) {
  if (rgb.n() != 1 || rgb.c() != 3) {
    throw ShapeError("write_pfm: expected 1x3xHxW, got " + rgb.shape().str());
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path.string());
  file << "PF\n" << rgb.w() << " " << rgb.h() << "\n-1.0\n";
  std::vector<char> row(rgb.w() * 3 * 4);
  for (std::size_t r = 0; r < rgb.h(); ++r) {
    const std::size_t y = rgb.h() - 1 - r;
    for (std::size_t x = 0; x < rgb.w(); ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(rgb(0, c, y, x)));
        char* out = &row[(x * 3 + c) * 4];
        for (int i = 0; i < 4; ++i) out[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
      }
    }
    file.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!file) throw IoError("failed writing " + path.string());
}

}  // namespace cfanet
