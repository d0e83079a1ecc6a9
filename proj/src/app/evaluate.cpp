#include "anisr/app/evaluate.hpp"

#include "anisr/core/error.hpp"
#include "anisr/data/nifti.hpp"
#include "anisr/data/slicing.hpp"

namespace anisr::app {

namespace {

data::NormalizationRecord record_of(const Volume& v) {
  return data::NormalizationRecord::from_lr(
      Eigen::Map<const Image>(v.voxels.values().data(), 1, static_cast<Eigen::Index>(v.voxels.size())));
}

}  // namespace

std::vector<metrics::MetricRow> score_volume(const Volume& sr, const Volume& hr, const data::NormalizationRecord& norm,
                                             const std::string& volume_id, const EvaluateOptions& options) {
  if (sr.voxels.dims() != hr.voxels.dims()) throw DataError("volume '" + volume_id + "': SR and HR shapes differ");
  metrics::SsimParams sp = options.ssim;
  sp.data_range = 1.0;
  std::vector<metrics::MetricRow> rows;
  for (int axis : options.slice_axes) {
    if (axis < 0 || axis > 2) throw ConfigError("slice axis out of range");
    for (std::size_t i = 0; i < hr.voxels.dim(axis); ++i) {
      const Image h = data::slice_of(hr.voxels, axis, i);
      const double foreground = static_cast<double>((h != 0.0).count()) / static_cast<double>(h.size());
      if (foreground < options.min_foreground) continue;
      const Image hn = norm.apply(h), sn = norm.apply(data::slice_of(sr.voxels, axis, i));
      rows.push_back({volume_id, static_cast<int>(i), std::string(to_string(hr.orientation[static_cast<std::size_t>(axis)])),
                      options.method, metrics::psnr(hn, sn, 1.0), metrics::ssim(hn, sn, sp)});
    }
  }
  return rows;
}

metrics::MetricsReport evaluate(const std::vector<std::filesystem::path>& sr, const std::vector<std::filesystem::path>& hr,
                                const EvaluateOptions& options, const std::vector<std::filesystem::path>& lr) {
  if (sr.empty()) throw DataError("no volumes to evaluate");
  if (sr.size() != hr.size()) throw DataError("SR and HR path lists differ in length");
  if (!lr.empty() && lr.size() != sr.size()) throw DataError("LR path list is misaligned with the SR list");
  std::vector<metrics::MetricRow> rows;
  for (std::size_t i = 0; i < sr.size(); ++i) {
    const Volume s = data::load_volume(sr[i]);
    const Volume h = data::load_volume(hr[i]);
    const data::NormalizationRecord norm = lr.empty() ? record_of(h) : record_of(data::load_volume(lr[i]));
    auto r = score_volume(s, h, norm, sr[i].filename().string(), options);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (rows.empty()) throw DataError("no slice passed the foreground threshold");
  return metrics::aggregate_report(std::move(rows), 1.0);
}

}  // namespace anisr::app
