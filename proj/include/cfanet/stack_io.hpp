#pragma once

#include <filesystem>

#include "cfanet/cfa.hpp"

namespace cfanet {

/// A single-image mosaic together with the pattern that produced it.
struct MosaicFile {
  CfaPattern pattern;
  std::size_t phase_y = 0;
  std::size_t phase_x = 0;
  PlaneStack stack;  // N = 1
};

// Layout (little-endian):
//   magic "CFASTACK", u32 version 1
//   u32 height, width, planes, phase_y, phase_x
//   pattern: u32 name length + bytes, u32 tile_h, tile_w, u32 grouping
//            (0 merged, 1 per_cell), then tile_h*tile_w cells of
//            f64 r, g, b, exposure
//   f64 plane values, planes x height x width, row-major
void write_mosaic_file(const MosaicFile& file, const std::filesystem::path& path);
/// Throws FormatError, VersionError, TruncatedFileError, IoError.
MosaicFile read_mosaic_file(const std::filesystem::path& path);

/// RGB view of the sampled sites: each pixel shows its filter color scaled
/// by the sample divided by the exposure, clamped to [0,1].
Tensor mosaic_preview(const PlaneStack& stack);

}  // namespace cfanet
