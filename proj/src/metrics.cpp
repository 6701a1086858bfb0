#include "cfanet/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "cfanet/errors.hpp"

namespace cfanet {
namespace {

Real channel_mse(const Tensor& a, const Tensor& b, std::size_t c) {
  Real sum = 0;
  for (std::size_t n = 0; n < a.n(); ++n) {
    const auto pa = a.plane(n, c);
    const auto pb = b.plane(n, c);
    for (std::size_t i = 0; i < pa.size(); ++i) {
      const Real d = pa[i] - pb[i];
      sum += d * d;
    }
  }
  return sum / static_cast<Real>(a.n() * a.h() * a.w());
}

void require_rgb(const Tensor& t, const char* what) {
  if (t.c() != 3) throw ShapeError(std::string(what) + ": expected 3 channels, got " + t.shape().str());
}

std::pair<Tensor, Tensor> crop_pair(const Tensor& pred, const Tensor& truth, std::size_t border,
                                    const char* what) {
  require_same_shape(pred, truth, what);
  if (2 * border >= pred.h() || 2 * border >= pred.w()) {
    throw ShapeError(std::string(what) + ": border crop " + std::to_string(border) +
                     " leaves nothing of a " + pred.shape().str() + " image");
  }
  if (border == 0) return {pred, truth};
  const std::size_t h = pred.h() - 2 * border;
  const std::size_t w = pred.w() - 2 * border;
  return {pred.crop(border, border, h, w), truth.crop(border, border, h, w)};
}

}  // namespace

Real mse(const Tensor& pred, const Tensor& truth) {
  require_same_shape(pred, truth, "mse");
  const auto a = pred.values();
  const auto b = truth.values();
  if (a.empty()) throw ShapeError("mse: empty tensors");
  Real sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Real d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<Real>(a.size());
}

Real psnr_from_mse(Real value, Real max_val) {
  if (value == 0) return kInfiniteDb;
  return 10 * std::log10(max_val * max_val / value);
}

Real psnr(const Tensor& pred, const Tensor& truth, Real max_val) {
  return psnr_from_mse(mse(pred, truth), max_val);
}

Real cpsnr(const Tensor& pred, const Tensor& truth, Real max_val, std::size_t border_crop) {
  require_rgb(pred, "cpsnr");
  auto [a, b] = crop_pair(pred, truth, border_crop, "cpsnr");
  const Real m = (channel_mse(a, b, 0) + channel_mse(a, b, 1) + channel_mse(a, b, 2)) / 3;
  return psnr_from_mse(m, max_val);
}

MetricReport evaluate_rgb(const Tensor& pred, const Tensor& truth, Real max_val,
                          std::size_t border_crop) {
  require_rgb(pred, "evaluate_rgb");
  auto [a, b] = crop_pair(pred, truth, border_crop, "evaluate_rgb");
  MetricReport report;
  const Real mr = channel_mse(a, b, 0);
  const Real mg = channel_mse(a, b, 1);
  const Real mb = channel_mse(a, b, 2);
  report.psnr_r = psnr_from_mse(mr, max_val);
  report.psnr_g = psnr_from_mse(mg, max_val);
  report.psnr_b = psnr_from_mse(mb, max_val);
  report.mse = (mr + mg + mb) / 3;
  report.cpsnr = psnr_from_mse(report.mse, max_val);
  report.pixel_count = a.n() * a.h() * a.w();
  report.border_crop = border_crop;
  return report;
}

MetricReport evaluate_unit_rgb(const Tensor& pred, const Tensor& truth, std::size_t border_crop) {
  Tensor a = pred;
  Tensor b = truth;
  for (Real& v : a.values()) v *= 255;
  for (Real& v : b.values()) v *= 255;
  return evaluate_rgb(a, b, 255, border_crop);
}

MetricReport mean_report(const std::vector<MetricReport>& reports) {
  MetricReport mean;
  mean.name = "MEAN";
  if (reports.empty()) return mean;
  for (const MetricReport& r : reports) {
    mean.psnr_r += r.psnr_r;
    mean.psnr_g += r.psnr_g;
    mean.psnr_b += r.psnr_b;
    mean.cpsnr += r.cpsnr;
    mean.mse += r.mse;
    mean.pixel_count += r.pixel_count;
    mean.border_crop = r.border_crop;
  }
  const auto n = static_cast<Real>(reports.size());
  mean.psnr_r /= n;
  mean.psnr_g /= n;
  mean.psnr_b /= n;
  mean.cpsnr /= n;
  mean.mse /= n;
  return mean;
}

std::string format_db(Real value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", static_cast<double>(value));
  return buf;
}

std::string metric_csv_header() { return "filename,psnr_r,psnr_g,psnr_b,cpsnr,mse"; }

std::string metric_csv_row(const MetricReport& report) {
  char mse_text[64];
  std::snprintf(mse_text, sizeof mse_text, "%.6g", static_cast<double>(report.mse));
  return report.name + "," + format_db(report.psnr_r) + "," + format_db(report.psnr_g) + "," +
         format_db(report.psnr_b) + "," + format_db(report.cpsnr) + "," + mse_text;
}

}  // namespace cfanet
