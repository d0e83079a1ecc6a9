#include "anisr/degradation/acquisition.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "anisr/core/error.hpp"

namespace anisr::degradation {

namespace {

// Strided view over one line of a 2D/3D array.
struct Line {
  const double* base;
  std::ptrdiff_t stride;
  std::ptrdiff_t n;
  double operator[](std::ptrdiff_t i) const { return base[i * stride]; }
};

void degrade_line(const Line& in, const std::vector<double>& kernel, int k, double* out, std::ptrdiff_t out_stride,
                  std::ptrdiff_t out_n) {
  const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  for (std::ptrdiff_t i = 0; i < out_n; ++i) {
    const std::ptrdiff_t centre = i * k;
    // Unit-sum kernel: weighting deviations from the centre sample keeps constant lines bit-exact.
    const double c = in[reflect_index(centre, in.n)];
    double acc = 0.0;
    for (std::ptrdiff_t j = -half; j <= half; ++j) {
      acc += kernel[static_cast<std::size_t>(j + half)] * (in[reflect_index(centre + j, in.n)] - c);
    }
    out[i * out_stride] = c + acc;
  }
}

double bspline3(double d) {
  d = std::abs(d);
  if (d < 1.0) return 2.0 / 3.0 - d * d + 0.5 * d * d * d;
  if (d < 2.0) {
    const double e = 2.0 - d;
    return e * e * e / 6.0;
  }
  return 0.0;
}

// Interpolating cubic B-spline coefficients with mirror-symmetric extension,
// via the tridiagonal system (c[i-1] + 4 c[i] + c[i+1]) / 6 = s[i].
std::vector<double> spline_coefficients(const Line& s) {
  const std::ptrdiff_t n = s.n;
  std::vector<double> c(static_cast<std::size_t>(n));
  if (n == 1) {
    c[0] = s[0];
    return c;
  }
  std::vector<double> upper(static_cast<std::size_t>(n));
  std::vector<double> rhs(static_cast<std::size_t>(n));
  auto sub = [n](std::ptrdiff_t i) { return i == n - 1 ? 2.0 : 1.0; };
  auto sup = [](std::ptrdiff_t i) { return i == 0 ? 2.0 : 1.0; };
  double denom = 4.0;
  upper[0] = sup(0) / denom;
  rhs[0] = 6.0 * s[0] / denom;
  for (std::ptrdiff_t i = 1; i < n; ++i) {
    denom = 4.0 - sub(i) * upper[static_cast<std::size_t>(i - 1)];
    upper[static_cast<std::size_t>(i)] = i + 1 < n ? sup(i) / denom : 0.0;
    rhs[static_cast<std::size_t>(i)] = (6.0 * s[i] - sub(i) * rhs[static_cast<std::size_t>(i - 1)]) / denom;
  }
  c[static_cast<std::size_t>(n - 1)] = rhs[static_cast<std::size_t>(n - 1)];
  for (std::ptrdiff_t i = n - 2; i >= 0; --i) {
    c[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(i)] - upper[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i + 1)];
  }
  return c;
}

void upsample_line(const Line& in, int k, double* out, std::ptrdiff_t out_stride) {
  const std::vector<double> c = spline_coefficients(in);
  const std::ptrdiff_t out_n = in.n * k;
  for (std::ptrdiff_t p = 0; p < out_n; ++p) {
    if (p % k == 0) {
      out[p * out_stride] = in[p / k];
      continue;
    }
    const double x = static_cast<double>(p) / k;
    const auto i0 = static_cast<std::ptrdiff_t>(std::floor(x));
    double acc = 0.0;
    for (std::ptrdiff_t j = i0 - 1; j <= i0 + 2; ++j) {
      acc += c[static_cast<std::size_t>(reflect_index(j, in.n))] * bspline3(x - static_cast<double>(j));
    }
    out[p * out_stride] = acc;
  }
}

void check_axis_2d(int axis) {
  if (axis < 0 || axis > 1) throw std::invalid_argument("image axis out of range");
}

}  // namespace

std::size_t degraded_length(std::size_t n, int k) {
  if (n == 0 || k < 1) throw std::invalid_argument("degraded_length needs n >= 1 and k >= 1");
  return (n - 1) / static_cast<std::size_t>(k) + 1;
}

std::size_t upsampled_crop(std::size_t hr_length, int k) {
  return degraded_length(hr_length, k) * static_cast<std::size_t>(k) - hr_length;
}

Image degrade(const Image& hr, const SliceProfile& profile, int k, int axis) {
  check_axis_2d(axis);
  if (k < 1) throw std::invalid_argument("SR factor must be >= 1");
  const Eigen::Index n = axis == 0 ? hr.rows() : hr.cols();
  const auto out_n = static_cast<Eigen::Index>(degraded_length(static_cast<std::size_t>(n), k));
  Image out(axis == 0 ? out_n : hr.rows(), axis == 0 ? hr.cols() : out_n);
  const Eigen::Index lines = axis == 0 ? hr.cols() : hr.rows();
  for (Eigen::Index l = 0; l < lines; ++l) {
    if (axis == 0) {
      degrade_line(Line{hr.data() + l, hr.cols(), n}, profile.kernel, k, out.data() + l, out.cols(), out_n);
    } else {
      degrade_line(Line{hr.data() + l * hr.cols(), 1, n}, profile.kernel, k, out.data() + l * out.cols(), 1, out_n);
    }
  }
  return out;
}

Volume degrade_volume(const Volume& vol, const SliceProfile& profile, const AcquisitionSpec& spec) {
  const int axis = spec.through_plane_axis;
  if (axis < 0 || axis > 2) throw std::invalid_argument("through-plane axis out of range");
  const double s = vol.spacing[static_cast<std::size_t>(axis)];
  for (int a = 0; a < 3; ++a) {
    if (std::abs(vol.spacing[static_cast<std::size_t>(a)] - s) > 1e-6 * s) {
      throw DataError("input volume is anisotropic along the chosen axis");
    }
  }
  if (std::abs(profile.spacing_mm - s) > 1e-6 * s) {
    throw ConfigError("slice profile was designed for a different sample spacing (axis mismatch)");
  }
  if (std::abs((spec.thickness_mm + spec.gap_mm) / s - spec.k) > 1e-6 * spec.k) {
    throw ConfigError("acquisition k does not match (t + g) / spacing");
  }

  const auto& dims = vol.voxels.dims();
  auto out_dims = dims;
  const std::size_t n = dims[static_cast<std::size_t>(axis)];
  const std::size_t out_n = degraded_length(n, spec.k);
  out_dims[static_cast<std::size_t>(axis)] = out_n;

  Volume out = vol;
  out.voxels = VoxelGrid(out_dims);
  const auto in_stride = static_cast<std::ptrdiff_t>(vol.voxels.stride(axis));
  const auto out_stride = static_cast<std::ptrdiff_t>(out.voxels.stride(axis));
  const int a1 = axis == 0 ? 1 : 0;
  const int a2 = axis == 2 ? 1 : 2;
  for (std::size_t j = 0; j < dims[static_cast<std::size_t>(a2)]; ++j) {
    for (std::size_t i = 0; i < dims[static_cast<std::size_t>(a1)]; ++i) {
      const std::size_t in_off = i * vol.voxels.stride(a1) + j * vol.voxels.stride(a2);
      const std::size_t out_off = i * out.voxels.stride(a1) + j * out.voxels.stride(a2);
      degrade_line(Line{vol.voxels.values().data() + in_off, in_stride, static_cast<std::ptrdiff_t>(n)}, profile.kernel,
                   spec.k, out.voxels.values().data() + out_off, out_stride, static_cast<std::ptrdiff_t>(out_n));
    }
  }
  out.spacing[static_cast<std::size_t>(axis)] = s * spec.k;
  out.affine.col(axis).head<3>() *= static_cast<double>(spec.k);
  out.acquisition = spec;
  return out;
}

Image upsample(const Image& img, int k, int axis) {
  check_axis_2d(axis);
  if (k < 1) throw std::invalid_argument("upsampling factor must be >= 1");
  if (k == 1) return img;
  const Eigen::Index n = axis == 0 ? img.rows() : img.cols();
  Image out(axis == 0 ? n * k : img.rows(), axis == 0 ? img.cols() : n * k);
  const Eigen::Index lines = axis == 0 ? img.cols() : img.rows();
  for (Eigen::Index l = 0; l < lines; ++l) {
    if (axis == 0) {
      upsample_line(Line{img.data() + l, img.cols(), n}, k, out.data() + l, out.cols());
    } else {
      upsample_line(Line{img.data() + l * img.cols(), 1, n}, k, out.data() + l * out.cols(), 1);
    }
  }
  return out;
}

VoxelGrid upsample(const VoxelGrid& grid, int k, int axis) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("volume axis out of range");
  if (k < 1) throw std::invalid_argument("upsampling factor must be >= 1");
  if (k == 1) return grid;
  auto dims = grid.dims();
  const std::size_t n = dims[static_cast<std::size_t>(axis)];
  dims[static_cast<std::size_t>(axis)] = n * static_cast<std::size_t>(k);
  VoxelGrid out(dims);
  const int a1 = axis == 0 ? 1 : 0;
  const int a2 = axis == 2 ? 1 : 2;
  for (std::size_t j = 0; j < dims[static_cast<std::size_t>(a2)]; ++j) {
    for (std::size_t i = 0; i < dims[static_cast<std::size_t>(a1)]; ++i) {
      const std::size_t in_off = i * grid.stride(a1) + j * grid.stride(a2);
      const std::size_t out_off = i * out.stride(a1) + j * out.stride(a2);
      upsample_line(Line{grid.values().data() + in_off, static_cast<std::ptrdiff_t>(grid.stride(axis)),
                         static_cast<std::ptrdiff_t>(n)},
                    k, out.values().data() + out_off, static_cast<std::ptrdiff_t>(out.stride(axis)));
    }
  }
  return out;
}

}  // namespace anisr::degradation
