#include "anisr/data/phantom.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Geometry>

namespace anisr::data {
namespace {

std::vector<double> gaussian_taps(double sigma) {
  const int half = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) sum += taps[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& w : taps) w /= sum;
  return taps;
}

/// Filters `n` samples spaced `stride` apart starting at `base`.
void blur_line(double* base, std::size_t n, std::size_t stride, const std::vector<double>& taps,
               std::vector<double>& scratch) {
  const int half = static_cast<int>(taps.size() / 2);
  scratch.resize(n);
  for (std::size_t i = 0; i < n; ++i) scratch[i] = base[i * stride];
  const auto len = static_cast<Eigen::Index>(n);
  for (Eigen::Index i = 0; i < len; ++i) {
    double acc = 0.0;
    for (int j = -half; j <= half; ++j)
      acc += taps[static_cast<std::size_t>(j + half)] * scratch[static_cast<std::size_t>(reflect_index(i + j, len))];
    base[static_cast<std::size_t>(i) * stride] = acc;
  }
}

struct Ellipse {
  double cy, cx, ry, rx, cos_t, sin_t;
  bool contains(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double u = dx * cos_t + dy * sin_t, v = -dx * sin_t + dy * cos_t;
    return (u / rx) * (u / rx) + (v / ry) * (v / ry) <= 1.0;
  }
};

Ellipse ellipse(double cy, double cx, double ry, double rx, double theta) {
  return {cy, cx, ry, rx, std::cos(theta), std::sin(theta)};
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double intensity(Rng& rng, double lo, double hi, int levels) {
  if (levels < 2) return uniform(rng, lo, hi);
  const int i = std::uniform_int_distribution<int>(0, levels - 1)(rng);
  return lo + (hi - lo) * i / (levels - 1);
}

}  // namespace

PhantomConfig PhantomConfig::sharp() {
  PhantomConfig c;
  c.shell_intensity_min = 700.0;
  c.shell_intensity_max = 900.0;
  c.interior_intensity_min = 200.0;
  c.interior_intensity_max = 350.0;
  c.inclusion_intensity_min = 50.0;
  c.inclusion_intensity_max = 1000.0;
  c.inclusion_radius_min = 5.0;
  c.inclusion_radius_max = 12.0;
  c.blur_sigma = 0.0;
  c.intensity_levels = 3;
  return c;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  const auto taps = gaussian_taps(sigma);
  Image out = img;
  std::vector<double> scratch;
  const auto rows = static_cast<std::size_t>(out.rows()), cols = static_cast<std::size_t>(out.cols());
  for (std::size_t r = 0; r < rows; ++r) blur_line(out.data() + r * cols, cols, 1, taps, scratch);
  for (std::size_t c = 0; c < cols; ++c) blur_line(out.data() + c, rows, cols, taps, scratch);
  return out;
}

VoxelGrid gaussian_blur(const VoxelGrid& grid, double sigma) {
  if (sigma <= 0.0) return grid;
  const auto taps = gaussian_taps(sigma);
  VoxelGrid out = grid;
  std::vector<double> scratch;
  const auto& d = out.dims();
  for (int axis = 0; axis < 3; ++axis) {
    const int a = axis == 0 ? 1 : 0, b = axis == 2 ? 1 : 2;
    for (std::size_t i = 0; i < d[static_cast<std::size_t>(a)]; ++i)
      for (std::size_t j = 0; j < d[static_cast<std::size_t>(b)]; ++j) {
        std::array<std::size_t, 3> at{0, 0, 0};
        at[static_cast<std::size_t>(a)] = i;
        at[static_cast<std::size_t>(b)] = j;
        blur_line(out.values().data() + out.index(at[0], at[1], at[2]), d[static_cast<std::size_t>(axis)],
                  out.stride(axis), taps, scratch);
      }
  }
  return out;
}

Image phantom_slice(Eigen::Index rows, Eigen::Index cols, const PhantomConfig& c, Rng& rng) {
  std::normal_distribution<double> jitter(0.0, 2.0);
  const double cy = rows / 2.0 + jitter(rng), cx = cols / 2.0 + jitter(rng);
  const double ry = uniform(rng, 0.28, 0.47) * rows, rx = uniform(rng, 0.34, 0.47) * cols;
  const double theta = uniform(rng, 0.0, std::numbers::pi);
  const double shell = intensity(rng, c.shell_intensity_min, c.shell_intensity_max, c.intensity_levels);
  const double interior = intensity(rng, c.interior_intensity_min, c.interior_intensity_max, c.intensity_levels);
  const Ellipse outer = ellipse(cy, cx, ry, rx, theta);
  const Ellipse inner = ellipse(cy, cx, ry - c.shell_width, rx - c.shell_width, theta);

  std::vector<std::pair<Ellipse, double>> inclusions;
  const int count = std::uniform_int_distribution<int>(c.inclusions_min, c.inclusions_max)(rng);
  for (int i = 0; i < count; ++i) {
    const double ey = cy + uniform(rng, -ry / 2, ry / 2), ex = cx + uniform(rng, -rx / 2, rx / 2);
    const double a = uniform(rng, c.inclusion_radius_min, c.inclusion_radius_max);
    const double b = uniform(rng, c.inclusion_radius_min, c.inclusion_radius_max);
    const double t = uniform(rng, 0.0, std::numbers::pi);
    inclusions.emplace_back(ellipse(ey, ex, a, b, t), intensity(rng, c.inclusion_intensity_min, c.inclusion_intensity_max, c.intensity_levels));
  }

  Image img = Image::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index col = 0; col < cols; ++col) {
      const double y = static_cast<double>(r), x = static_cast<double>(col);
      double v = 0.0;
      if (outer.contains(y, x)) v = inner.contains(y, x) ? interior : shell;
      for (const auto& [e, value] : inclusions)
        if (e.contains(y, x)) v = value;
      img(r, col) = v;
    }
  return gaussian_blur(img, c.blur_sigma);
}

std::vector<SlicePair> phantom_slice_pairs(int count, int size, const PhantomConfig& config,
                                           const degradation::SliceProfile& profile, int k, std::uint64_t seed) {
  std::vector<SlicePair> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(i)}));
    out.push_back(make_slice_pair(phantom_slice(size, size, config, rng), profile, k, 1, Plane::coronal));
  }
  return out;
}

Volume phantom_volume(VoxelGrid::Dims dims, const PhantomConfig& c, Rng& rng) {
  struct Ellipsoid {
    std::array<double, 3> centre, radii;
    Eigen::Matrix3d rot;
    bool contains(const Eigen::Vector3d& p) const {
      const Eigen::Vector3d q = rot.transpose() * (p - Eigen::Vector3d(centre[0], centre[1], centre[2]));
      return std::pow(q[0] / radii[0], 2) + std::pow(q[1] / radii[1], 2) + std::pow(q[2] / radii[2], 2) <= 1.0;
    }
  };
  auto rotation = [&rng] {
    Eigen::Vector3d axis(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    if (axis.norm() < 1e-6) axis = Eigen::Vector3d::UnitZ();
    return Eigen::AngleAxisd(uniform(rng, 0.0, std::numbers::pi), axis.normalized()).toRotationMatrix();
  };
  const std::array<double, 3> n{static_cast<double>(dims[0]), static_cast<double>(dims[1]),
                                static_cast<double>(dims[2])};
  std::normal_distribution<double> jitter(0.0, 2.0);
  const std::array<double, 3> centre{n[0] / 2 + jitter(rng), n[1] / 2 + jitter(rng), n[2] / 2 + jitter(rng)};
  const std::array<double, 3> radii{uniform(rng, 0.34, 0.47) * n[0], uniform(rng, 0.34, 0.47) * n[1],
                                    uniform(rng, 0.34, 0.47) * n[2]};
  const Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  const Ellipsoid outer{centre, radii, rot};
  const Ellipsoid inner{centre, {radii[0] - c.shell_width, radii[1] - c.shell_width, radii[2] - c.shell_width}, rot};
  const double shell = intensity(rng, c.shell_intensity_min, c.shell_intensity_max, c.intensity_levels);
  const double interior = intensity(rng, c.interior_intensity_min, c.interior_intensity_max, c.intensity_levels);

  std::vector<std::pair<Ellipsoid, double>> inclusions;
  const int count = 4 * std::uniform_int_distribution<int>(c.inclusions_min, c.inclusions_max)(rng);
  for (int i = 0; i < count; ++i) {
    Ellipsoid e;
    for (std::size_t a = 0; a < 3; ++a) {
      e.centre[a] = centre[a] + uniform(rng, -radii[a] / 2, radii[a] / 2);
      e.radii[a] = uniform(rng, c.inclusion_radius_min, c.inclusion_radius_max);
    }
    e.rot = rotation();
    inclusions.emplace_back(e, intensity(rng, c.inclusion_intensity_min, c.inclusion_intensity_max, c.intensity_levels));
  }

  VoxelGrid grid(dims);
  for (std::size_t z = 0; z < dims[2]; ++z)
    for (std::size_t y = 0; y < dims[1]; ++y)
      for (std::size_t x = 0; x < dims[0]; ++x) {
        const Eigen::Vector3d p(static_cast<double>(x), static_cast<double>(y), static_cast<double>(z));
        double v = 0.0;
        if (outer.contains(p)) v = inner.contains(p) ? interior : shell;
        for (const auto& [e, value] : inclusions)
          if (e.contains(p)) v = value;
        grid(x, y, z) = v;
      }
  return make_volume(gaussian_blur(grid, c.blur_sigma), {1.0, 1.0, 1.0});
}

}  // namespace anisr::data
