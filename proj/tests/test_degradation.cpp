#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "anisr/core/error.hpp"
#include "anisr/core/rng.hpp"
#include "anisr/degradation/acquisition.hpp"
#include "anisr/degradation/fir_design.hpp"
#include "anisr/degradation/slice_profile.hpp"

using namespace anisr;
using namespace anisr::degradation;

namespace {

/// |sum_n h[n] e^{-i 2 pi f n}| evaluated directly.
double dtft_magnitude(const std::vector<double>& h, double f) {
  double re = 0.0, im = 0.0;
  for (std::size_t n = 0; n < h.size(); ++n) {
    re += h[n] * std::cos(2 * std::numbers::pi * f * n);
    im -= h[n] * std::sin(2 * std::numbers::pi * f * n);
  }
  return std::hypot(re, im);
}

/// Interpolating cubic B-spline with mirror extension, via a dense solve on
/// a generously mirrored copy of the samples.
std::vector<double> dense_spline_upsample(const std::vector<double>& s, int k) {
  const int n = static_cast<int>(s.size());
  const int ext = std::max(3 * n, 40);  // end effects of the truncated system decay as 0.268^ext
  const int m = n + 2 * ext;
  auto mirror = [n](int i) {
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
  };
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    a(i, i) = 4.0 / 6.0;
    if (i > 0) a(i, i - 1) = 1.0 / 6.0;
    if (i + 1 < m) a(i, i + 1) = 1.0 / 6.0;
    rhs(i) = s[static_cast<std::size_t>(mirror(i - ext))];
  }
  const Eigen::VectorXd c = a.fullPivLu().solve(rhs);
  auto b3 = [](double d) {
    d = std::abs(d);
    if (d < 1) return 2.0 / 3.0 - d * d + d * d * d / 2;
    if (d < 2) return (2 - d) * (2 - d) * (2 - d) / 6;
    return 0.0;
  };
  std::vector<double> out(static_cast<std::size_t>(n * k));
  for (int p = 0; p < n * k; ++p) {
    const double x = double(p) / k;
    double acc = 0.0;
    for (int j = int(std::floor(x)) - 2; j <= int(std::floor(x)) + 3; ++j) acc += c(j + ext) * b3(x - j);
    out[static_cast<std::size_t>(p)] = acc;
  }
  return out;
}

Image row_image(const std::vector<double>& v) {
  Image img(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) img(0, static_cast<Eigen::Index>(i)) = v[i];
  return img;
}

}  // namespace

TEST_CASE("acquisition geometry") {
  const AcquisitionSpec spec = AcquisitionSpec::from_geometry(3, 1, 1.0, 2);
  CHECK(spec.k == 4);
  CHECK(degraded_length(256, 4) == 64);
  CHECK(degraded_length(257, 4) == 65);
  CHECK(upsampled_crop(256, 4) == 0);
  CHECK(upsampled_crop(257, 4) == 3);
  CHECK_THROWS_AS(AcquisitionSpec::from_geometry(3, 0.5, 1.0, 2), ConfigError);
  CHECK_THROWS_AS(AcquisitionSpec::from_geometry(1, 0, 1.0, 2), ConfigError);
  CHECK_THROWS_AS(AcquisitionSpec::from_geometry(0, 1, 1.0, 2), ConfigError);
  CHECK_THROWS_AS(AcquisitionSpec::from_geometry(3, -1, 1.0, 2), ConfigError);
}

TEST_CASE("profile invariants for every method") {
  for (auto method : {ProfileMethod::slr, ProfileMethod::gaussian, ProfileMethod::windowed_sinc}) {
    for (double t : {2.0, 3.0, 4.0, 5.0}) {
      const SliceProfile p = design_slice_profile(t, 1.0, method);
      double sum = 0.0;
      for (double w : p.kernel) sum += w;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(p.kernel.size() % 2 == 1);
      for (std::size_t i = 0; i < p.kernel.size(); ++i)
        CHECK(std::abs(p.kernel[i] - p.kernel[p.kernel.size() - 1 - i]) < 1e-9);
      // FWHM within one sample: the kernel at +-(t/2 - 1) is above half the peak, at +-(t/2 + 1) below.
      const double peak = p.response(0.0);
      CHECK(p.response(t / 2 - 1.0) >= 0.5 * peak);
      CHECK(p.response(t / 2 + 1.0) <= 0.5 * peak);
    }
  }
}

TEST_CASE("gaussian profile is at half maximum at +-t/2") {
  const SliceProfile p = design_slice_profile(3.0, 1.0, ProfileMethod::gaussian);
  CHECK(p.response(1.5) == doctest::Approx(0.5 * p.response(0.0)).epsilon(1e-12));
  CHECK(p.response(-1.5) == doctest::Approx(0.5 * p.response(0.0)).epsilon(1e-12));
}

TEST_CASE("slr pulse meets its own ripple specification") {
  const SliceProfile p = design_slice_profile(3.0, 1.0, ProfileMethod::slr);
  REQUIRE(!p.pulse.empty());
  REQUIRE(p.pass_edge < p.stop_edge);
  // Direct DTFT of the pulse on a dense grid, normalized by the DC response.
  const double dc = dtft_magnitude(p.pulse, 0.0);
  double pass_err = 0.0, stop_gain = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double f = 0.5 * i / 4000;
    const double a = dtft_magnitude(p.pulse, f);
    if (f <= p.pass_edge) pass_err = std::max(pass_err, std::abs(a - 1.0));
    if (f >= p.stop_edge) stop_gain = std::max(stop_gain, a);
  }
  CHECK(std::abs(dc - 1.0) <= p.params.pass_ripple);
  CHECK(pass_err <= p.params.pass_ripple * 1.0001);
  CHECK(stop_gain <= p.params.stop_ripple * 1.0001);
}

TEST_CASE("profile design errors") {
  CHECK_THROWS_AS(design_slice_profile(0.5, 1.0, ProfileMethod::gaussian), ConfigError);
  CHECK_THROWS_AS(design_slice_profile(2.5, 1.0, ProfileMethod::slr), ConfigError);
  CHECK_THROWS_AS(design_slice_profile(-1.0, 1.0, ProfileMethod::gaussian), ConfigError);
  CHECK_THROWS_AS(parse_profile_method("bloch"), ConfigError);
}

TEST_CASE("degradation of a 256-long axis at t=3, g=1") {
  const AcquisitionSpec spec = AcquisitionSpec::from_geometry(3, 1, 1.0, 2);
  const SliceProfile prof = design_slice_profile(3.0, 1.0, ProfileMethod::slr);
  Volume vol = make_volume(VoxelGrid({4, 3, 256}, 7.25), {1.0, 1.0, 1.0});
  const Volume lr = degrade_volume(vol, prof, spec);
  CHECK(lr.voxels.dim(2) == 64);
  CHECK(lr.voxels.dim(0) == 4);
  CHECK(lr.spacing[2] == 4.0);
  CHECK(lr.anisotropic_axis() == 2);
  for (double v : lr.voxels.values()) REQUIRE(v == 7.25);
  Volume aniso = vol;
  aniso.spacing[2] = 2.0;
  CHECK_THROWS_AS(degrade_volume(aniso, prof, spec), DataError);
}

TEST_CASE("impulse response equals the kernel at stride k") {
  for (auto method : {ProfileMethod::slr, ProfileMethod::gaussian}) {
    const SliceProfile prof = design_slice_profile(3.0, 1.0, method);
    const int k = 4;
    const int n = 65;
    const int pos = 32;
    std::vector<double> sig(n, 0.0);
    sig[pos] = 1.0;
    const Image lr = degrade(row_image(sig), prof, k, 1);
    // Direct convolution oracle: out[i] = sum_j w[j] x[i k + j].
    const int half = prof.half_width();
    for (Eigen::Index i = 0; i < lr.cols(); ++i) {
      const long off = pos - i * k;
      const double want = std::abs(off) <= half ? prof.kernel[static_cast<std::size_t>(off + half)] : 0.0;
      CHECK(std::abs(lr(0, i) - want) <= 1e-10);
    }
  }
}

TEST_CASE("above-Nyquist sinusoid is attenuated at least by the stopband gain") {
  const int k = 4;
  for (auto method : {ProfileMethod::slr, ProfileMethod::gaussian, ProfileMethod::windowed_sinc}) {
    const SliceProfile prof = design_slice_profile(3.0, 1.0, method);
    const double gain = prof.stopband_gain(k);
    for (double f : {0.15, 0.2, 0.3, 0.45}) {
      const int n = 4001;
      std::vector<double> sig(n);
      for (int i = 0; i < n; ++i) sig[i] = std::cos(2 * std::numbers::pi * f * i);
      const Image lr = degrade(row_image(sig), prof, k, 1);
      double amp = 0.0;
      for (Eigen::Index i = 5; i < lr.cols() - 5; ++i) amp = std::max(amp, std::abs(lr(0, i)));
      CHECK(amp <= gain + 1e-12);
    }
  }
}

TEST_CASE("cubic upsampling") {
  Rng rng(1);
  const Image img = gaussian_image(5, 9, rng);
  CHECK((upsample(img, 1, 1) == img).all());
  const Image up = upsample(img, 4, 1);
  CHECK(up.cols() == 36);
  for (Eigen::Index i = 0; i < 9; ++i) CHECK((up.col(4 * i) == img.col(i)).all());
  const Image upr = upsample(img, 3, 0);
  CHECK(upr.rows() == 15);
  for (Eigen::Index i = 0; i < 5; ++i) CHECK((upr.row(3 * i) == img.row(i)).all());

  const Image c = upsample(Image::Constant(3, 8, 2.5), 4, 1);
  CHECK(((c - 2.5).abs() < 1e-12).all());

  // The mirror boundary bends the ramp at its ends; that influence decays by 0.268 per knot.
  std::vector<double> ramp(64);
  for (int i = 0; i < 64; ++i) ramp[i] = 0.5 + 0.25 * i;
  const Image r = upsample(row_image(ramp), 4, 1);
  for (int p = 4 * 12; p <= 4 * (64 - 12); ++p) CHECK(std::abs(r(0, p) - (0.5 + 0.25 * p / 4.0)) < 1e-6);

  CHECK_THROWS(upsample(img, 0, 1));
  CHECK_THROWS(upsample(img, 2, 2));
}

TEST_CASE("cubic upsampling matches a dense spline solve") {
  Rng rng(2);
  for (int n : {2, 3, 7, 16}) {
    std::vector<double> s(static_cast<std::size_t>(n));
    for (double& v : s) v = std::normal_distribution<double>()(rng);
    const Image up = upsample(row_image(s), 4, 1);
    const std::vector<double> want = dense_spline_upsample(s, 4);
    for (int p = 0; p < 4 * n; ++p) CHECK(std::abs(up(0, p) - want[static_cast<std::size_t>(p)]) < 1e-10);
  }
}

TEST_CASE("volume upsampling reproduces knots along the chosen axis") {
  VoxelGrid g({3, 4, 5});
  Rng rng(3);
  for (double& v : g.values()) v = std::normal_distribution<double>()(rng);
  for (int axis = 0; axis < 3; ++axis) {
    const VoxelGrid up = upsample(g, 2, axis);
    CHECK(up.dim(axis) == 2 * g.dim(axis));
    for (std::size_t x = 0; x < g.dim(0); ++x)
      for (std::size_t y = 0; y < g.dim(1); ++y)
        for (std::size_t z = 0; z < g.dim(2); ++z) {
          std::array<std::size_t, 3> q{x, y, z};
          q[static_cast<std::size_t>(axis)] *= 2;
          REQUIRE(up(q[0], q[1], q[2]) == g(x, y, z));
        }
  }
}
