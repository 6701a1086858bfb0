#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cfanet/cfa.hpp"
#include "cfanet/metrics.hpp"
#include "cfanet/models.hpp"

namespace cfanet {

struct SkippedFile {
  std::string name;
  std::string reason;
};

struct EvaluationReport {
  std::vector<MetricReport> images;  // sorted by filename
  MetricReport mean;                 // only meaningful when images is non-empty
  std::vector<SkippedFile> skipped;
};

/// Mosaics one [0,1] RGB image with the model's pattern, reconstructs it
/// (the baseline alone when model is null) and clamps to [0,1]. The output
/// may be smaller than the input for unpadded models.
Tensor reconstruct(ModelGraph* model, const Tensor& rgb, const CfaPattern& pattern);

/// Scores every image of dir. Unreadable files are skipped and listed.
/// Truth is center-cropped to the reconstruction size before scoring.
EvaluationReport batch_evaluate(ModelGraph* model, const std::filesystem::path& dir,
                                const CfaPattern& pattern, std::size_t border_crop = 0);

/// Header, one row per image, a MEAN row when there are images, and a
/// "# skipped: <name> (<reason>)" line per skipped file.
std::string format_report_csv(const EvaluationReport& report);
void write_report_csv(const EvaluationReport& report, const std::filesystem::path& path);

}  // namespace cfanet
