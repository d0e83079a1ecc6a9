#include "anisr/metrics/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>

#include <fftw3.h>

#include "anisr/core/error.hpp"

namespace anisr::metrics {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Image fourier_magnitude(const Image& img, bool centered) {
  const int n = static_cast<int>(img.rows()), m = static_cast<int>(img.cols());
  if (n == 0 || m == 0) throw DataError("spectrum of an empty image");
  fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(n) * m);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_2d(n, m, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    buf[i][0] = img.data()[i];
    buf[i][1] = 0.0;
  }
  fftw_execute(plan);
  Image out(n, m);
  const int sr = centered ? n / 2 : 0, sc = centered ? m / 2 : 0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c) {
      const fftw_complex& v = buf[static_cast<std::size_t>(r) * m + c];
      out((r + sr) % n, (c + sc) % m) = std::hypot(v[0], v[1]);
    }
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return out;
}

Image fourier_spectrum(const Image& img) {
  const Image logmag = fourier_magnitude(img, true).log1p();
  const double lo = logmag.minCoeff(), hi = logmag.maxCoeff();
  if (hi - lo <= 0.0) return Image::Zero(img.rows(), img.cols());
  return (logmag - lo) / (hi - lo);
}

void write_pgm(const Image& img, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  os << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const double v = std::clamp(img(r, c), 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  if (!os) throw DataError("failed writing " + path);
}

}  // namespace anisr::metrics
