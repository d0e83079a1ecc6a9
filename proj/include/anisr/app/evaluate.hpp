#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "anisr/core/volume.hpp"
#include "anisr/data/normalization.hpp"
#include "anisr/metrics/metrics.hpp"
#include "anisr/metrics/report.hpp"

namespace anisr::app {

struct EvaluateOptions {
  std::string method = "sr";
  /// Voxel axes whose perpendicular slices are scored.
  std::vector<int> slice_axes{0, 1};
  /// Slices whose HR has fewer nonzero voxels than this fraction are skipped.
  double min_foreground = 0.01;
  metrics::SsimParams ssim;
};

/// Per-slice PSNR/SSIM rows for one volume pair, both mapped through `norm`
/// and scored with data range 1.
std::vector<metrics::MetricRow> score_volume(const Volume& sr, const Volume& hr, const data::NormalizationRecord& norm,
                                             const std::string& volume_id, const EvaluateOptions& options);

/// Loads aligned SR/HR lists (and optional LR volumes that anchor the
/// intensity frame; the HR min/max is used otherwise). DataError on empty or
/// misaligned lists and unreadable volumes.
metrics::MetricsReport evaluate(const std::vector<std::filesystem::path>& sr, const std::vector<std::filesystem::path>& hr,
                                const EvaluateOptions& options, const std::vector<std::filesystem::path>& lr = {});

}  // namespace anisr::app
