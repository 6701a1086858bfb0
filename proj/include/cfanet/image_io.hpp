#pragma once

#include <filesystem>

#include "cfanet/tensor.hpp"

namespace cfanet {

/// Reads an 8-bit PNG (gray, gray+alpha, RGB, RGBA, palette) or binary PPM
/// (P6, maxval 255) into a 1 x 3 x H x W tensor with values v / 255. The
/// format is detected from the file contents. Alpha is dropped.
/// Throws UnsupportedFormatError (unknown format, 16-bit data),
/// TruncatedFileError, FormatError, IoError.
Tensor load_image(const std::filesystem::path& path);

/// Writes 1 x 3 x H x W values clamped to [0,1] and rounded to 8 bits.
void save_png(const Tensor& rgb, const std::filesystem::path& path);
void save_ppm(const Tensor& rgb, const std::filesystem::path& path);
/// Picks PNG or PPM from the extension (.png, .ppm); anything else is PNG.
void save_image(const Tensor& rgb, const std::filesystem::path& path);

/// True for extensions load_image understands (.png, .ppm), case-insensitive.
bool is_image_file(const std::filesystem::path& path);

}  // namespace cfanet
