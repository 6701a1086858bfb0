#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cfanet/tensor.hpp"

namespace cfanet {

using Filter = std::array<Real, 3>;

/// One cell of a CFA tile: an RGB response in [0,1]^3 and an exposure gain.
struct CfaCell {
  Filter filter{};
  Real exposure = 1;

  bool operator==(const CfaCell&) const = default;
};

enum class PlaneGrouping {
  merge_identical,  // cells with equal filter and exposure share a plane
  per_cell,         // every tile cell owns a plane (pattern layer)
};

/// Repeating m x n tile of color filters. Cells are stored row-major.
class CfaPattern {
 public:
  CfaPattern() = default;
  CfaPattern(std::string name, std::size_t tile_h, std::size_t tile_w, std::vector<CfaCell> cells,
             PlaneGrouping grouping = PlaneGrouping::merge_identical);

  const std::string& name() const { return name_; }
  std::size_t tile_h() const { return tile_h_; }
  std::size_t tile_w() const { return tile_w_; }
  PlaneGrouping grouping() const { return grouping_; }
  std::span<const CfaCell> cells() const { return cells_; }

  /// Cell covering absolute pixel (y, x).
  const CfaCell& cell_at(std::size_t y, std::size_t x) const {
    return cells_[(y % tile_h_) * tile_w_ + x % tile_w_];
  }
  /// Plane index of absolute pixel (y, x).
  int plane_at(std::size_t y, std::size_t x) const {
    return cell_plane_[(y % tile_h_) * tile_w_ + x % tile_w_];
  }

  /// Number of distinct planes K.
  std::size_t plane_count() const { return planes_.size(); }
  /// Filter/exposure of each plane, in order of first appearance in the tile.
  std::span<const CfaCell> planes() const { return planes_; }

  /// Same tile rolled so that pixel (0, 0) sees cell (dy, dx).
  CfaPattern shifted(std::size_t dy, std::size_t dx) const;

 private:
  std::string name_;
  std::size_t tile_h_ = 0;
  std::size_t tile_w_ = 0;
  PlaneGrouping grouping_ = PlaneGrouping::merge_identical;
  std::vector<CfaCell> cells_;
  std::vector<CfaCell> planes_;
  std::vector<int> cell_plane_;
};

/// bayer, diagonal_stripe, cygm, hirakawa, svec.
CfaPattern builtin_pattern(const std::string& name);
std::vector<std::string> builtin_pattern_names();

/// Sparse mosaic encoding: K planes, exactly one of which is populated at
/// each pixel. The mask is shared by every sample of the batch.
struct PlaneStack {
  Tensor planes;          // N x K x H x W
  std::vector<int> mask;  // H x W plane index
  std::size_t tile_h = 1;
  std::size_t tile_w = 1;
  std::vector<CfaCell> plane_cells;  // descriptor of each plane

  std::size_t plane_count() const { return planes.c(); }
  int mask_at(std::size_t y, std::size_t x) const { return mask[y * planes.w() + x]; }
};

/// Sample-site map for an H x W image whose pixel (0, 0) sits on tile cell
/// (phase_y, phase_x).
std::vector<int> sample_mask(const CfaPattern& pattern, std::size_t h, std::size_t w,
                             std::size_t phase_y = 0, std::size_t phase_x = 0);

/// Samples dot(filter, rgb) * exposure at each pixel into that cell's plane.
PlaneStack mosaic(const Tensor& image, const CfaPattern& pattern, std::size_t phase_y = 0,
                  std::size_t phase_x = 0);

/// Sampled value at every pixel, read back through the mask (N x 1 x H x W).
Tensor sampled_values(const PlaneStack& stack);

/// Per-plane interpolation from sample sites. A missing pixel is the
/// tent-weighted average of the same plane's samples within one tile period
/// on each axis, weight (tile_h - |dy|) * (tile_w - |dx|). On rectangular
/// lattices this is bilinear interpolation between the enclosing samples;
/// on the Bayer green quincunx it is the 4-neighbour mean. Only in-image
/// samples contribute, so borders replicate the nearest sample geometry.
/// Sample sites keep their values exactly.
class BilinearFill {
 public:
  BilinearFill(std::span<const int> mask, std::size_t h, std::size_t w, std::size_t planes,
               std::size_t tile_h, std::size_t tile_w);

  /// N x K x H x W sparse planes -> dense planes.
  Tensor apply(const Tensor& sparse) const;
  /// Adjoint of apply(); gradient lands on sample sites only.
  Tensor backward(const Tensor& grad_dense) const;

 private:
  struct Tap {
    std::uint32_t src;
    std::uint32_t weight;
  };
  struct Stencil {
    std::uint32_t begin;  // into taps_
    std::uint32_t end;
    std::uint32_t total_weight;  // 0 marks a sample site (copy)
  };
  std::size_t h_, w_, planes_;
  std::vector<Stencil> stencils_;  // planes x h x w
  std::vector<Tap> taps_;
};

Tensor bilinear_fill(const PlaneStack& stack, const CfaPattern& pattern);

/// Bilinear fill of a stack whose K=3 planes are the R, G and B one-hot
/// filters (in any order), returned as RGB.
Tensor bilinear_demosaic_bayer(const PlaneStack& stack);

/// Per-pixel least-squares color recovery min ||A c - b|| where the rows of A
/// are the plane filters and b holds each plane's value divided by its
/// exposure. Built once per pattern; throws DegeneratePatternError when A
/// has rank < 3.
class LsqColorSolver {
 public:
  LsqColorSolver(std::span<const CfaCell> planes, const std::string& label);

  std::size_t plane_count() const { return exposure_.size(); }

  /// N x K x H x W -> N x 3 x H x W, unclamped.
  Tensor solve(const Tensor& filled) const;

  struct Grads {
    Tensor filled;             // dL/db
    std::vector<Real> filters;  // dL/dA, K x 3 row-major
  };
  Grads backward(const Tensor& filled, const Tensor& solution, const Tensor& grad_rgb) const;

 private:
  std::vector<Real> a_;         // K x 3
  std::vector<Real> exposure_;  // K
  std::array<Real, 9> gram_inv_{};
  std::vector<Real> pinv_;  // 3 x K, exposure folded in
};

/// Least-squares RGB from K filled planes, clamped to [0,1] when clamp is set.
Tensor lsq_color_baseline(const Tensor& filled, const CfaPattern& pattern, bool clamp = true);

// --- pattern text files -----------------------------------------------------

/// Text form:
///   # comment
///   name <label>                     (optional)
///   tile <rows> <cols>
///   planes merged|per_cell           (optional, default merged)
///   <r> <g> <b> [exposure]           (rows*cols lines, row-major)
std::string format_pattern(const CfaPattern& pattern);
CfaPattern parse_pattern(const std::string& text);
CfaPattern load_pattern_file(const std::filesystem::path& path);
void save_pattern_file(const CfaPattern& pattern, const std::filesystem::path& path);

/// Builtin name, or a path to a pattern file.
CfaPattern resolve_pattern(const std::string& name_or_path);

/// True when the planes are exactly the three RGB one-hot filters at unit
/// exposure.
bool is_rgb_identity_basis(const CfaPattern& pattern);

}  // namespace cfanet
