#pragma once

#include <cstddef>
#include <vector>

#include "anisr/core/image.hpp"
#include "anisr/core/volume.hpp"

namespace anisr::data {

/// All slices perpendicular to one voxel axis.
struct OrientedSlices {
  Plane plane = Plane::axial;
  int normal_axis = 2;
  /// In-slice index (0 = rows, 1 = cols) of the through-plane direction.
  int aniso_axis = 1;
  std::vector<Image> slices;
};

/// Slice `index` perpendicular to `normal_axis`. Rows follow the lower of the
/// two remaining voxel axes, columns the higher.
Image slice_of(const VoxelGrid& grid, int normal_axis, std::size_t index);
void put_slice(VoxelGrid& grid, int normal_axis, std::size_t index, const Image& slice);

/// In-slice position (0 or 1) of `axis` for slices perpendicular to `normal_axis`.
int in_slice_axis(int normal_axis, int axis);

/// Slices from the two planes that contain `through_plane_axis`, in ascending
/// normal-axis order; each plane's slices in ascending index order.
std::vector<OrientedSlices> extract_slices(const Volume& vol, int through_plane_axis);

/// Inverse of slicing along one axis.
VoxelGrid restack(const std::vector<Image>& slices, int normal_axis);

}  // namespace anisr::data
