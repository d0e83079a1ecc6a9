#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace anisr::metrics {

struct MetricRow {
  std::string volume_id;
  int slice_index = 0;
  std::string orientation;
  std::string method;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct Aggregate {
  std::string method;
  std::string volume_id;  ///< empty for per-method aggregates
  std::size_t count = 0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

struct MetricsReport {
  std::vector<MetricRow> rows;
  std::vector<Aggregate> per_method;
  std::vector<Aggregate> per_volume;
  double data_range = 1.0;

  const Aggregate& method(const std::string& name) const;
};

/// Arithmetic means per method and per (method, volume), in first-seen order.
MetricsReport aggregate_report(std::vector<MetricRow> rows, double data_range);

/// Long-format rows: volume_id,slice_index,orientation,method,psnr_db,ssim.
void write_csv(const MetricsReport& report, std::ostream& os);
void write_csv(const MetricsReport& report, const std::string& path);
/// Per-method and per-volume means.
void write_summary(const MetricsReport& report, std::ostream& os);

}  // namespace anisr::metrics
