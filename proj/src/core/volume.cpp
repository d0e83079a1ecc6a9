#include "anisr/core/volume.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "anisr/core/error.hpp"

namespace anisr {

std::string_view to_string(Plane p) {
  switch (p) {
    case Plane::sagittal: return "sagittal";
    case Plane::coronal: return "coronal";
    case Plane::axial: return "axial";
  }
  return "unknown";
}

Plane parse_plane(std::string_view name) {
  if (name == "sagittal") return Plane::sagittal;
  if (name == "coronal") return Plane::coronal;
  if (name == "axial") return Plane::axial;
  throw ConfigError("unknown plane '" + std::string(name) + "'");
}

AcquisitionSpec AcquisitionSpec::from_geometry(double thickness_mm, double gap_mm, double in_plane_spacing_mm,
                                               int through_plane_axis) {
  if (!(thickness_mm > 0.0)) throw ConfigError("slice thickness must be positive");
  if (!(gap_mm >= 0.0)) throw ConfigError("slice gap must be non-negative");
  if (!(in_plane_spacing_mm > 0.0)) throw ConfigError("in-plane spacing must be positive");
  if (through_plane_axis < 0 || through_plane_axis > 2) throw ConfigError("through-plane axis out of range");
  const double ratio = (thickness_mm + gap_mm) / in_plane_spacing_mm;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-6 * std::max(1.0, ratio)) {
    throw ConfigError("(t + g) / spacing = " + std::to_string(ratio) + " is not an integer");
  }
  if (rounded < 2.0) throw ConfigError("SR factor k must be at least 2");
  return AcquisitionSpec{thickness_mm, gap_mm, static_cast<int>(rounded), through_plane_axis};
}

std::optional<int> Volume::anisotropic_axis() const {
  const auto largest = std::max_element(spacing.begin(), spacing.end());
  const int axis = static_cast<int>(largest - spacing.begin());
  for (int a = 0; a < 3; ++a) {
    if (a == axis) continue;
    if (*largest <= spacing[static_cast<std::size_t>(a)] * (1.0 + 1e-6)) return std::nullopt;
  }
  return axis;
}

int Volume::axis_of(Plane plane) const {
  for (int a = 0; a < 3; ++a) {
    if (orientation[static_cast<std::size_t>(a)] == plane) return a;
  }
  throw DataError("orientation labels do not contain plane " + std::string(to_string(plane)));
}

void Volume::validate() const {
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DataError("voxel spacing must be positive and finite");
  }
  std::array<Plane, 3> sorted = orientation;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != std::array<Plane, 3>{Plane::sagittal, Plane::coronal, Plane::axial}) {
    throw DataError("orientation labels must be a permutation of sagittal/coronal/axial");
  }
  if (voxels.size() != voxels.dim(0) * voxels.dim(1) * voxels.dim(2) || voxels.size() == 0) {
    throw DataError("voxel grid is empty or inconsistent");
  }
}

Volume make_volume(VoxelGrid grid, std::array<double, 3> spacing) {
  Volume v;
  v.voxels = std::move(grid);
  v.spacing = spacing;
  for (int a = 0; a < 3; ++a) v.affine(a, a) = spacing[static_cast<std::size_t>(a)];
  return v;
}

}  // namespace anisr
