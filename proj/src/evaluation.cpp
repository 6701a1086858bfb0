#include "cfanet/evaluation.hpp"

#include <algorithm>
#include <fstream>

#include "cfanet/data.hpp"
#include "cfanet/errors.hpp"
#include "cfanet/image_io.hpp"

namespace cfanet {

Tensor reconstruct(ModelGraph* model, const Tensor& rgb, const CfaPattern& pattern) {
  const CfaPattern active = model != nullptr ? effective_pattern(*model, pattern) : pattern;
  const PlaneStack stack = mosaic(rgb, active);
  Tensor out;
  if (model != nullptr) {
    model->set_mode(NormMode::eval);
    out = forward_demosaic(*model, stack, active);
  } else {
    out = baseline_demosaic(stack, active);
  }
  for (Real& v : out.values()) v = std::clamp(v, Real{0}, Real{1});
  return out;
}

EvaluationReport batch_evaluate(ModelGraph* model, const std::filesystem::path& dir,
                                const CfaPattern& pattern, std::size_t border_crop) {
  EvaluationReport report;
  for (const auto& file : list_images(dir)) {
    const std::string name = file.filename().string();
    Tensor truth;
    try {
      truth = load_image(file);
    } catch (const Error& e) {
      report.skipped.push_back({name, e.what()});
      continue;
    }
    const Tensor out = reconstruct(model, truth, pattern);
    MetricReport m =
        evaluate_unit_rgb(out, truth.center_crop(out.h(), out.w()), border_crop);
    m.name = name;
    report.images.push_back(std::move(m));
  }
  report.mean = mean_report(report.images);
  return report;
}

std::string format_report_csv(const EvaluationReport& report) {
  std::string text = metric_csv_header() + "\n";
  for (const MetricReport& m : report.images) text += metric_csv_row(m) + "\n";
  if (!report.images.empty()) text += metric_csv_row(report.mean) + "\n";
  for (const SkippedFile& s : report.skipped) {
    text += "# skipped: " + s.name + " (" + s.reason + ")\n";
  }
  return text;
}

void write_report_csv(const EvaluationReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write report " + path.string());
  out << format_report_csv(report);
  if (!out) throw IoError("failed writing report " + path.string());
}

}  // namespace cfanet
