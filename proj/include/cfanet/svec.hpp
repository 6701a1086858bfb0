#pragma once

#include <cstdint>
#include <filesystem>

#include "cfanet/cfa.hpp"
#include "cfanet/tensor.hpp"

namespace cfanet {

struct ModelGraph;

/// Linear-radiance HDR image, 1 x 3 x H x W, nonnegative and finite.
struct RadianceImage {
  Tensor pixels;

  void validate() const;
  Real min_value() const;
  Real max_value() const;
};

/// Sensor simulation constants for spatially varying exposure and color.
struct SvecConfig {
  Real r_max = 4096;         // 2^12
  Real r_min = 1.0 / 64.0;   // 2^-6
  Real exposure_ratio = 64;  // e2 / e1
  int bits = 12;

  void validate() const;
};

/// floor(min((r_max - r_min) / (I_max - I_min) * (I - I_min), r_max)) per
/// element. Throws DegenerateRangeError when I_max == I_min.
Tensor normalize_radiance(const RadianceImage& image, const SvecConfig& cfg);

/// 4x4 tile: Bayer colors [G R; B G] repeated, exposure e1 = 1 on the 2x2
/// blocks at (0,0) and (2,2), e2 = exposure_ratio on the other two blocks.
/// Six planes (three colors x two exposures).
CfaPattern svec_pattern(const SvecConfig& cfg);

/// Raw sensor count floor(min(exposure * v, r_max)) for normalized radiance v.
Real svec_sample(Real normalized, Real exposure, const SvecConfig& cfg);

/// Simulates the SVEC sensor on normalized radiance (values in [0, r_max]).
/// Plane values are raw counts divided by r_max, so they lie in [0, 1].
PlaneStack svec_mosaic(const Tensor& normalized, const SvecConfig& cfg, std::size_t phase_y = 0,
                       std::size_t phase_x = 0);

enum class SvecArch { dmcnn, dmcnn_vd };

/// Six-plane input, three unclamped radiance channels out. The VD variant
/// uses the exposure-compensated least-squares baseline.
ModelGraph build_svec_model(SvecArch arch, std::uint64_t seed, std::size_t depth = 20,
                            std::size_t width = 64);

/// Mean squared error over all elements.
Real mse_radiance(const Tensor& pred, const Tensor& truth);

// --- portable float map -------------------------------------------------------

/// Reads color ("PF") or grayscale ("Pf") PFM, either endianness. Rows are
/// stored bottom-to-top in the file and returned top-to-bottom.
RadianceImage read_pfm(const std::filesystem::path& path);
/// Writes little-endian color PFM (scale -1.0).
void write_pfm(const Tensor& rgb, const std::filesystem::path& path);

}  // namespace cfanet
