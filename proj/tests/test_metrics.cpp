#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "anisr/core/error.hpp"
#include "anisr/core/rng.hpp"
#include "anisr/metrics/metrics.hpp"
#include "anisr/metrics/report.hpp"
#include "anisr/metrics/spectrum.hpp"

using namespace anisr;
using namespace anisr::metrics;

namespace {

/// Unnormalized 2D DFT magnitude straight from the definition, DC at index 0.
Image naive_dft_magnitude(const Image& x) {
  const auto n = x.rows(), m = x.cols();
  Image out(n, m);
  for (Eigen::Index u = 0; u < n; ++u)
    for (Eigen::Index v = 0; v < m; ++v) {
      std::complex<double> s = 0;
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < m; ++c) {
          const double ang = -2.0 * std::numbers::pi * (double(u * r) / n + double(v * c) / m);
          s += x(r, c) * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      out(u, v) = std::abs(s);
    }
  return out;
}

}  // namespace

TEST_CASE("psnr oracles") {
  const Image zero = Image::Zero(8, 8);
  const Image half = Image::Constant(8, 8, 0.5);
  CHECK(psnr(zero, half, 1.0) == doctest::Approx(6.0206).epsilon(1e-3 / 6.0206));
  CHECK(psnr(zero, half, 1.0) == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-12));
  CHECK(psnr(half, half, 1.0) == kPsnrCap);
  CHECK_THROWS_AS(psnr(zero, Image::Zero(4, 8), 1.0), DataError);
  CHECK_THROWS_AS(psnr(zero, half, 0.0), DataError);
}

TEST_CASE("psnr and ssim are symmetric") {
  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    const Image a = gaussian_image(20, 24, rng), b = gaussian_image(20, 24, rng);
    CHECK(psnr(a, b) == psnr(b, a));
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-14));
  }
}

TEST_CASE("psnr decreases with growing noise") {
  Rng rng(2);
  const Image ref = gaussian_image(32, 32, rng);
  const Image noise = gaussian_image(32, 32, rng);
  double last = kPsnrCap + 1;
  for (double s : {0.01, 0.02, 0.05, 0.1, 0.3}) {
    const double p = psnr(ref, ref + s * noise);
    CHECK(p < last);
    last = p;
  }
}

TEST_CASE("ssim of constants reduces to the luminance term") {
  const Image a = Image::Zero(16, 16), b = Image::Ones(16, 16);
  const double c1 = 1e-4;
  CHECK(ssim(a, b) == doctest::Approx(c1 / (1.0 + c1)).epsilon(1e-8 / (c1 / (1.0 + c1))));
  CHECK(std::abs(ssim(a, b) - c1 / (1.0 + c1)) <= 1e-8);
}

TEST_CASE("ssim self-similarity is exact") {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Image a = gaussian_image(12 + i, 30 - i, rng).abs();
    CHECK(ssim(a, a) == 1.0);
  }
}

TEST_CASE("ssim stays in range and rejects tiny images") {
  Rng rng(4);
  const Image a = 0.5 + 0.1 * gaussian_image(20, 20, rng), b = gaussian_image(20, 20, rng);
  const double s = ssim(a, 1.0 - a);
  CHECK(s >= -1.0);
  CHECK(s < 0.0);
  CHECK(ssim(a, b) <= 1.0);
  CHECK_THROWS_AS(ssim(Image::Zero(10, 20), Image::Zero(10, 20)), DataError);
}

TEST_CASE("fourier magnitude matches a direct DFT and satisfies Parseval") {
  Rng rng(5);
  for (int i = 0; i < 3; ++i) {
    const Image x = gaussian_image(16, 16, rng);
    const Image mag = fourier_magnitude(x, /*centered=*/false);
    const Image want = naive_dft_magnitude(x);
    CHECK(((mag - want).abs() < 1e-9).all());
    CHECK(mag.square().mean() == doctest::Approx(x.square().sum()).epsilon(1e-12));
    CHECK(std::abs(mag.square().mean() - x.square().sum()) < 1e-8);
  }
}

TEST_CASE("spectrum of a constant image concentrates at DC") {
  const Image c = Image::Constant(9, 12, 3.0);
  const Image mag = fourier_magnitude(c);
  const Eigen::Index r0 = 9 / 2, c0 = 12 / 2;
  CHECK(mag(r0, c0) == doctest::Approx(3.0 * 108));
  double off = 0.0;
  for (Eigen::Index r = 0; r < 9; ++r)
    for (Eigen::Index k = 0; k < 12; ++k)
      if (r != r0 || k != c0) off = std::max(off, mag(r, k));
  CHECK(off < 1e-9);
  const Image s = fourier_spectrum(c);
  CHECK(s(r0, c0) == 1.0);
  CHECK(s.minCoeff() == 0.0);
}

TEST_CASE("single cosine gives two symmetric peaks") {
  Image x(16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) x(r, c) = std::cos(2 * std::numbers::pi * 3 * c / 16.0);
  const Image mag = fourier_magnitude(x);
  CHECK(mag(8, 8 + 3) == doctest::Approx(128.0));
  CHECK(mag(8, 8 - 3) == doctest::Approx(128.0));
  CHECK((mag > 1e-6).count() == 2);
}

TEST_CASE("spectrum is point symmetric about DC") {
  Rng rng(6);
  for (auto [n, m] : {std::pair{16, 16}, std::pair{15, 20}}) {
    const Image s = fourier_spectrum(gaussian_image(n, m, rng));
    const int r0 = n / 2, c0 = m / 2;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < m; ++c) {
        const int rr = ((2 * r0 - r) % n + n) % n, cc = ((2 * c0 - c) % m + m) % m;
        REQUIRE(std::abs(s(r, c) - s(rr, cc)) < 1e-9);
      }
    CHECK(s.minCoeff() >= 0.0);
    CHECK(s.maxCoeff() <= 1.0);
  }
}

TEST_CASE("report aggregation") {
  std::vector<MetricRow> rows{{"v1", 0, "sagittal", "cubic", 20.0, 0.5}, {"v1", 1, "sagittal", "cubic", 30.0, 0.7},
                              {"v2", 0, "coronal", "AniRes2D", 28.0, 0.9}};
  const MetricsReport rep = aggregate_report(rows, 1.0);
  REQUIRE(rep.per_method.size() == 2);
  const auto& cubic = rep.method("cubic");
  CHECK(cubic.mean_psnr == doctest::Approx(25.0));
  CHECK(cubic.mean_ssim == doctest::Approx(0.6));
  CHECK(cubic.count == 2);
  CHECK(rep.method("AniRes2D").mean_psnr == 28.0);
  CHECK(rep.per_volume.size() == 2);
  CHECK_THROWS_AS(aggregate_report({}, 1.0), DataError);

  const MetricsReport single = aggregate_report({rows[2]}, 1.0);
  CHECK(single.method("AniRes2D").mean_ssim == 0.9);

  std::ostringstream os;
  write_csv(rep, os);
  const std::string csv = os.str();
  CHECK(csv.rfind("volume_id,slice_index,orientation,method,psnr_db,ssim\n", 0) == 0);
  CHECK(csv.find("v2,0,coronal,AniRes2D,28") != std::string::npos);
}
