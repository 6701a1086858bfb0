#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "cfanet/tensor.hpp"

namespace cfanet {

/// PSNR of identical images.
inline constexpr Real kInfiniteDb = std::numeric_limits<Real>::infinity();

/// Mean squared error of two same-shape tensors.
Real mse(const Tensor& pred, const Tensor& truth);

/// 10 log10(max_val^2 / MSE) over every element; kInfiniteDb when MSE is 0.
Real psnr(const Tensor& pred, const Tensor& truth, Real max_val = 255);

Real psnr_from_mse(Real mse, Real max_val = 255);

/// PSNR from the MSE averaged over the three channels, after cropping
/// border_crop pixels from each side. Throws ShapeError when the crop leaves
/// nothing.
Real cpsnr(const Tensor& pred, const Tensor& truth, Real max_val = 255,
           std::size_t border_crop = 0);

struct MetricReport {
  std::string name;
  Real psnr_r = 0;
  Real psnr_g = 0;
  Real psnr_b = 0;
  Real cpsnr = 0;
  Real mse = 0;  // mean over the three channels, [0, max_val] units
  std::size_t pixel_count = 0;
  std::size_t border_crop = 0;
};

/// Full report for one RGB image pair (1 x 3 x H x W each) on the
/// [0, max_val] scale.
MetricReport evaluate_rgb(const Tensor& pred, const Tensor& truth, Real max_val = 255,
                          std::size_t border_crop = 0);

/// Convenience for [0,1] images: scales both by 255 first.
MetricReport evaluate_unit_rgb(const Tensor& pred, const Tensor& truth,
                               std::size_t border_crop = 0);

/// Arithmetic mean of each dB column and of the MSE. Infinite entries
/// propagate.
MetricReport mean_report(const std::vector<MetricReport>& reports);

/// "filename,psnr_r,psnr_g,psnr_b,cpsnr,mse"
std::string metric_csv_header();
std::string metric_csv_row(const MetricReport& report);
/// Fixed-precision decibel text; "inf" for the sentinel.
std::string format_db(Real value);

}  // namespace cfanet
