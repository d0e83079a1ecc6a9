#include "anisr/metrics/metrics.hpp"

#include <cmath>
#include <vector>

#include "anisr/core/error.hpp"

namespace anisr::metrics {

namespace {

void require_same_shape(const Image& a, const Image& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DataError("metric inputs differ in shape");
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    w[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= sum;
  return w;
}

/// Separable filtering keeping only positions where the window fits.
Image filter_valid(const Image& img, const std::vector<double>& w) {
  const Eigen::Index k = static_cast<Eigen::Index>(w.size());
  const Eigen::Index rows = img.rows() - k + 1, cols = img.cols() - k + 1;
  Image tmp(img.rows(), cols);
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) s += w[static_cast<std::size_t>(i)] * img(r, c + i);
      tmp(r, c) = s;
    }
  Image out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) s += w[static_cast<std::size_t>(i)] * tmp(r + i, c);
      out(r, c) = s;
    }
  return out;
}

}  // namespace

double psnr(const Image& ref, const Image& test, double data_range) {
  require_same_shape(ref, test);
  if (!(data_range > 0.0)) throw DataError("psnr data_range must be positive");
  if (ref.size() == 0) throw DataError("psnr of empty images");
  const double mse = (ref - test).square().mean();
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(data_range * data_range / mse));
}

double ssim(const Image& ref, const Image& test, const SsimParams& p) {
  require_same_shape(ref, test);
  if (p.window < 1 || p.window % 2 == 0) throw DataError("ssim window must be odd");
  if (ref.rows() < p.window || ref.cols() < p.window) throw DataError("image smaller than the ssim window");
  if (!(p.data_range > 0.0)) throw DataError("ssim data_range must be positive");
  const std::vector<double> w = gaussian_window(p.window, p.sigma);
  const double c1 = (p.k1 * p.data_range) * (p.k1 * p.data_range);
  const double c2 = (p.k2 * p.data_range) * (p.k2 * p.data_range);
  // Every second moment goes through the same expression so equal inputs give bit-identical terms.
  const Image mu1 = filter_valid(ref, w);
  const Image mu2 = filter_valid(test, w);
  const Image s11 = filter_valid(ref * ref, w) - mu1 * mu1;
  const Image s22 = filter_valid(test * test, w) - mu2 * mu2;
  const Image s12 = filter_valid(ref * test, w) - mu1 * mu2;
  const Image num = (2.0 * mu1 * mu2 + c1) * (2.0 * s12 + c2);
  const Image den = (mu1 * mu1 + mu2 * mu2 + c1) * (s11 + s22 + c2);
  return (num / den).mean();
}

}  // namespace anisr::metrics
