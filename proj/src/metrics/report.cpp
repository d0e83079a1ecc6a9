#include "anisr/metrics/report.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include "anisr/core/error.hpp"

namespace anisr::metrics {

const Aggregate& MetricsReport::method(const std::string& name) const {
  for (const Aggregate& a : per_method)
    if (a.method == name) return a;
  throw DataError("no rows for method " + name);
}

namespace {

Aggregate& find_or_add(std::vector<Aggregate>& list, const std::string& method, const std::string& volume) {
  for (Aggregate& a : list)
    if (a.method == method && a.volume_id == volume) return a;
  list.push_back({method, volume, 0, 0.0, 0.0});
  return list.back();
}

}  // namespace

MetricsReport aggregate_report(std::vector<MetricRow> rows, double data_range) {
  if (rows.empty()) throw DataError("cannot aggregate an empty metric table");
  MetricsReport rep;
  rep.data_range = data_range;
  for (const MetricRow& r : rows) {
    for (Aggregate* a : {&find_or_add(rep.per_method, r.method, ""), &find_or_add(rep.per_volume, r.method, r.volume_id)}) {
      ++a->count;
      a->mean_psnr += r.psnr_db;
      a->mean_ssim += r.ssim;
    }
  }
  for (auto* list : {&rep.per_method, &rep.per_volume})
    for (Aggregate& a : *list) {
      a.mean_psnr /= static_cast<double>(a.count);
      a.mean_ssim /= static_cast<double>(a.count);
    }
  rep.rows = std::move(rows);
  return rep;
}

void write_csv(const MetricsReport& report, std::ostream& os) {
  os << "volume_id,slice_index,orientation,method,psnr_db,ssim\n";
  os << std::setprecision(10);
  for (const MetricRow& r : report.rows)
    os << r.volume_id << ',' << r.slice_index << ',' << r.orientation << ',' << r.method << ',' << r.psnr_db << ','
       << r.ssim << '\n';
}

void write_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  write_csv(report, os);
}

void write_summary(const MetricsReport& report, std::ostream& os) {
  os << std::fixed << std::setprecision(4);
  for (const Aggregate& a : report.per_method)
    os << a.method << ": mean PSNR " << a.mean_psnr << " dB, mean SSIM " << a.mean_ssim << " over " << a.count
       << " slices\n";
  for (const Aggregate& a : report.per_volume)
    os << "  " << a.method << " / " << a.volume_id << ": " << a.mean_psnr << " dB, " << a.mean_ssim << '\n';
}

}  // namespace anisr::metrics
