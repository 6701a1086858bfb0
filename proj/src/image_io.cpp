#include "cfanet/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "cfanet/errors.hpp"

namespace cfanet {
namespace {

constexpr std::array<unsigned char, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

std::uint8_t to_byte(Real v) {
  const Real clamped = std::clamp(v, Real{0}, Real{1});
  return static_cast<std::uint8_t>(std::lround(clamped * 255));
}

void require_rgb_image(const Tensor& rgb, const std::filesystem::path& path) {
  if (rgb.n() != 1 || rgb.c() != 3 || rgb.h() == 0 || rgb.w() == 0) {
    throw ShapeError("cannot write " + path.string() + ": expected 1x3xHxW, got " +
                     rgb.shape().str());
  }
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(file), {});
}

// --- PPM --------------------------------------------------------------------------

class PpmHeader {
 public:
  PpmHeader(const std::string& data, const std::string& source) : data_(data), source_(source) {}

  std::size_t number() {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(data_[pos_] - '0');
      if (value > (1u << 24)) throw FormatError("PPM " + source_ + ": header value too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) {
      if (pos_ >= data_.size()) throw TruncatedFileError("PPM " + source_ + ": header is truncated");
      throw FormatError("PPM " + source_ + ": malformed header");
    }
    return value;
  }
  std::size_t end_of_header() {
    if (pos_ >= data_.size()) throw TruncatedFileError("PPM " + source_ + ": header is truncated");
    return pos_ + 1;  // one whitespace byte
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(data_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }
  const std::string& data_;
  std::string source_;
  std::size_t pos_ = 2;
};

Tensor decode_ppm(const std::string& data, const std::string& source) {
  PpmHeader header(data, source);
  const std::size_t w = header.number();
  const std::size_t h = header.number();
  const std::size_t maxval = header.number();
  if (w == 0 || h == 0) throw FormatError("PPM " + source + ": zero dimension");
  if (maxval != 255) {
    throw UnsupportedFormatError("PPM " + source + ": only 8-bit (maxval 255) is supported, got " +
                                 std::to_string(maxval));
  }
  const std::size_t start = header.end_of_header();
  if (data.size() < start || data.size() - start < w * h * 3) {
    throw TruncatedFileError("PPM " + source + ": pixel data is truncated");
  }
  Tensor out({1, 3, h, w});
  const auto* px = reinterpret_cast<const unsigned char*>(data.data() + start);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        out(0, c, y, x) = static_cast<Real>(px[(y * w + x) * 3 + c]) / 255;
      }
    }
  }
  return out;
}

// --- PNG --------------------------------------------------------------------------

struct MemoryReader {
  const std::string* data;
  std::size_t pos;
};

struct PngErrorState {
  std::string message;
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  state->message = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void png_read_fn(png_structp png, png_bytep out, png_size_t length) {
  auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (reader->data->size() - reader->pos < length) png_error(png, "unexpected end of file");
  std::copy_n(reader->data->data() + reader->pos, length, reinterpret_cast<char*>(out));
  reader->pos += length;
}

// libpng unwinds with longjmp, so nothing with a destructor may live in the
// frame that calls setjmp. decode_png_raw only touches POD state.
struct PngImage {
  png_uint_32 w = 0;
  png_uint_32 h = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<unsigned char>* pixels = nullptr;  // RGB8 after transforms
};

bool decode_png_raw(png_structp png, png_infop info, PngImage* image, bool* unsupported_depth) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_info(png, info);
  image->w = png_get_image_width(png, info);
  image->h = png_get_image_height(png, info);
  image->bit_depth = png_get_bit_depth(png, info);
  image->color_type = png_get_color_type(png, info);
  if (image->bit_depth > 8) {
    *unsupported_depth = true;
    return true;
  }
  if (image->color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (image->color_type == PNG_COLOR_TYPE_GRAY && image->bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (image->color_type == PNG_COLOR_TYPE_GRAY || image->color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  const int passes = png_set_interlace_handling(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(image->w) * 3) {
    png_error(png, "unexpected row layout");
  }
  image->pixels->resize(static_cast<std::size_t>(image->w) * image->h * 3);
  for (int pass = 0; pass < passes; ++pass) {
    for (png_uint_32 y = 0; y < image->h; ++y) {
      png_read_row(png, image->pixels->data() + static_cast<std::size_t>(y) * image->w * 3,
                   nullptr);
    }
  }
  png_read_end(png, nullptr);
  return true;
}

Tensor decode_png(const std::string& data, const std::string& source) {
  PngErrorState errors;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &errors, png_error_fn, png_warning_fn);
  if (png == nullptr) throw IoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialization failed");
  }
  MemoryReader reader{&data, 0};
  png_set_read_fn(png, &reader, png_read_fn);
  std::vector<unsigned char> pixels;
  PngImage image;
  image.pixels = &pixels;
  bool unsupported_depth = false;
  const bool ok = decode_png_raw(png, info, &image, &unsupported_depth);
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) {
    if (errors.message.find("end of file") != std::string::npos ||
        errors.message.find("Not enough") != std::string::npos) {
      throw TruncatedFileError("PNG " + source + " is truncated");
    }
    throw FormatError("PNG " + source + ": " + errors.message);
  }
  if (unsupported_depth) {
    throw UnsupportedFormatError("PNG " + source + " has " + std::to_string(image.bit_depth) +
                                 "-bit samples; only 8-bit images are supported");
  }
  Tensor out({1, 3, image.h, image.w});
  for (std::size_t y = 0; y < image.h; ++y) {
    for (std::size_t x = 0; x < image.w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        out(0, c, y, x) = static_cast<Real>(pixels[(y * image.w + x) * 3 + c]) / 255;
      }
    }
  }
  return out;
}

struct PngWriteState {
  std::vector<unsigned char>* out;
};

void png_write_fn(png_structp png, png_bytep data, png_size_t length) {
  auto* state = static_cast<PngWriteState*>(png_get_io_ptr(png));
  state->out->insert(state->out->end(), data, data + length);
}

void png_flush_fn(png_structp) {}

bool encode_png_raw(png_structp png, png_infop info, png_uint_32 w, png_uint_32 h,
                    const std::vector<unsigned char>* rgb) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_write_row(png, const_cast<png_bytep>(rgb->data() + static_cast<std::size_t>(y) * w * 3));
  }
  png_write_end(png, nullptr);
  return true;
}

std::vector<unsigned char> interleave(const Tensor& rgb) {
  std::vector<unsigned char> out(rgb.h() * rgb.w() * 3);
  for (std::size_t y = 0; y < rgb.h(); ++y) {
    for (std::size_t x = 0; x < rgb.w(); ++x) {
      for (std::size_t c = 0; c < 3; ++c) out[(y * rgb.w() + x) * 3 + c] = to_byte(rgb(0, c, y, x));
    }
  }
  return out;
}

void write_bytes(const std::filesystem::path& path, const void* data, std::size_t size,
                 const std::string& prefix = {}) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path.string());
  file << prefix;
  file.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!file) throw IoError("failed writing " + path.string());
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

}  // namespace

Tensor load_image(const std::filesystem::path& path) {
  const std::string data = read_all(path);
  const std::string source = path.string();
  if (data.size() >= kPngSignature.size() &&
      std::equal(kPngSignature.begin(), kPngSignature.end(),
                 reinterpret_cast<const unsigned char*>(data.data()))) {
    return decode_png(data, source);
  }
  if (data.size() >= 2 && data[0] == 'P' && data[1] == '6') return decode_ppm(data, source);
  if (data.size() >= 2 && data[0] == 'P' && (data[1] == 'F' || data[1] == 'f')) {
    throw UnsupportedFormatError(source + " is a PFM radiance file; use the HDR commands");
  }
  if (data.empty()) throw TruncatedFileError(source + " is empty");
  throw UnsupportedFormatError(source + " is neither PNG nor binary PPM");
}

void save_png(const Tensor& rgb, const std::filesystem::path& path) {
  require_rgb_image(rgb, path);
  const std::vector<unsigned char> pixels = interleave(rgb);
  std::vector<unsigned char> encoded;
  PngErrorState errors;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &errors, png_error_fn, png_warning_fn);
  if (png == nullptr) throw IoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialization failed");
  }
  PngWriteState state{&encoded};
  png_set_write_fn(png, &state, png_write_fn, png_flush_fn);
  const bool ok = encode_png_raw(png, info, static_cast<png_uint_32>(rgb.w()),
                                 static_cast<png_uint_32>(rgb.h()), &pixels);
  png_destroy_write_struct(&png, &info);
  if (!ok) throw IoError("PNG encoding of " + path.string() + " failed: " + errors.message);
  write_bytes(path, encoded.data(), encoded.size());
}

void save_ppm(const Tensor& rgb, const std::filesystem::path& path) {
  require_rgb_image(rgb, path);
  const std::vector<unsigned char> pixels = interleave(rgb);
  const std::string header =
      "P6\n" + std::to_string(rgb.w()) + " " + std::to_string(rgb.h()) + "\n255\n";
  write_bytes(path, pixels.data(), pixels.size(), header);
}

void save_image(const Tensor& rgb, const std::filesystem::path& path) {
  if (lower_extension(path) == ".ppm") {
    save_ppm(rgb, path);
  } else {
    save_png(rgb, path);
  }
}

bool is_image_file(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".png" || ext == ".ppm";
}

}  // namespace cfanet
