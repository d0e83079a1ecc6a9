#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace anisr {

/// Anatomical plane of the slices taken perpendicular to a voxel axis.
enum class Plane { sagittal, coronal, axial };

std::string_view to_string(Plane p);
Plane parse_plane(std::string_view name);

/// Thickness/gap description of a 2D multi-slice acquisition (t||g).
struct AcquisitionSpec {
  double thickness_mm = 3.0;
  double gap_mm = 1.0;
  int k = 4;  ///< SR factor, (t + g) / in-plane spacing
  int through_plane_axis = 2;

  /// Validates t > 0, g >= 0 and that (t + g) / spacing is an integer >= 2.
  static AcquisitionSpec from_geometry(double thickness_mm, double gap_mm, double in_plane_spacing_mm,
                                       int through_plane_axis);
};

/// Dense 3D voxel grid, first index fastest (NIfTI storage order).
class VoxelGrid {
 public:
  using Dims = std::array<std::size_t, 3>;

  VoxelGrid() = default;
  explicit VoxelGrid(Dims dims, double fill = 0.0) : dims_(dims), data_(dims[0] * dims[1] * dims[2], fill) {}

  const Dims& dims() const { return dims_; }
  std::size_t dim(int axis) const { return dims_[static_cast<std::size_t>(axis)]; }
  std::size_t size() const { return data_.size(); }

  std::size_t stride(int axis) const {
    return axis == 0 ? 1 : axis == 1 ? dims_[0] : dims_[0] * dims_[1];
  }
  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const { return x + dims_[0] * (y + dims_[1] * z); }

  double& operator()(std::size_t x, std::size_t y, std::size_t z) { return data_[index(x, y, z)]; }
  double operator()(std::size_t x, std::size_t y, std::size_t z) const { return data_[index(x, y, z)]; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool operator==(const VoxelGrid&) const = default;

 private:
  Dims dims_{0, 0, 0};
  std::vector<double> data_;
};

struct Volume {
  VoxelGrid voxels;
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  /// orientation[a] is the plane of slices perpendicular to voxel axis a.
  std::array<Plane, 3> orientation{Plane::sagittal, Plane::coronal, Plane::axial};
  /// voxel index -> world millimetres
  Eigen::Matrix4d affine = Eigen::Matrix4d::Identity();
  std::optional<AcquisitionSpec> acquisition;

  /// Axis whose spacing exceeds the other two (relative tolerance 1e-6), if any.
  std::optional<int> anisotropic_axis() const;
  /// Voxel axis whose perpendicular slices are `plane`.
  int axis_of(Plane plane) const;
  /// Throws std::invalid_argument when the structural invariants are violated.
  void validate() const;
};

/// Volume with default (identity-scaled) geometry for the given spacing.
Volume make_volume(VoxelGrid grid, std::array<double, 3> spacing);

}  // namespace anisr
