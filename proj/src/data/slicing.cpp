#include "anisr/data/slicing.hpp"

#include <stdexcept>

namespace anisr::data {

namespace {

std::pair<int, int> remaining_axes(int normal_axis) {
  switch (normal_axis) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    case 2: return {0, 1};
    default: throw std::invalid_argument("normal axis out of range");
  }
}

}  // namespace

int in_slice_axis(int normal_axis, int axis) {
  const auto [r, c] = remaining_axes(normal_axis);
  if (axis == r) return 0;
  if (axis == c) return 1;
  throw std::invalid_argument("axis is not contained in the slice plane");
}

Image slice_of(const VoxelGrid& grid, int normal_axis, std::size_t index) {
  const auto [ra, ca] = remaining_axes(normal_axis);
  if (index >= grid.dim(normal_axis)) throw std::out_of_range("slice index out of range");
  const std::size_t rows = grid.dim(ra), cols = grid.dim(ca);
  Image out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const std::size_t base = index * grid.stride(normal_axis);
  const std::size_t rs = grid.stride(ra), cs = grid.stride(ca);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = grid.values()[base + r * rs + c * cs];
    }
  }
  return out;
}

void put_slice(VoxelGrid& grid, int normal_axis, std::size_t index, const Image& slice) {
  const auto [ra, ca] = remaining_axes(normal_axis);
  if (index >= grid.dim(normal_axis)) throw std::out_of_range("slice index out of range");
  if (static_cast<std::size_t>(slice.rows()) != grid.dim(ra) || static_cast<std::size_t>(slice.cols()) != grid.dim(ca)) {
    throw std::invalid_argument("slice shape does not match the volume");
  }
  const std::size_t base = index * grid.stride(normal_axis);
  const std::size_t rs = grid.stride(ra), cs = grid.stride(ca);
  for (Eigen::Index r = 0; r < slice.rows(); ++r) {
    for (Eigen::Index c = 0; c < slice.cols(); ++c) {
      grid.values()[base + static_cast<std::size_t>(r) * rs + static_cast<std::size_t>(c) * cs] = slice(r, c);
    }
  }
}

std::vector<OrientedSlices> extract_slices(const Volume& vol, int through_plane_axis) {
  if (through_plane_axis < 0 || through_plane_axis > 2) throw std::invalid_argument("through-plane axis out of range");
  std::vector<OrientedSlices> out;
  for (int normal = 0; normal < 3; ++normal) {
    if (normal == through_plane_axis) continue;
    OrientedSlices o;
    o.plane = vol.orientation[static_cast<std::size_t>(normal)];
    o.normal_axis = normal;
    o.aniso_axis = in_slice_axis(normal, through_plane_axis);
    o.slices.reserve(vol.voxels.dim(normal));
    for (std::size_t i = 0; i < vol.voxels.dim(normal); ++i) o.slices.push_back(slice_of(vol.voxels, normal, i));
    out.push_back(std::move(o));
  }
  return out;
}

VoxelGrid restack(const std::vector<Image>& slices, int normal_axis) {
  if (slices.empty()) throw std::invalid_argument("cannot restack an empty slice list");
  const auto [ra, ca] = remaining_axes(normal_axis);
  VoxelGrid::Dims dims{};
  dims[static_cast<std::size_t>(normal_axis)] = slices.size();
  dims[static_cast<std::size_t>(ra)] = static_cast<std::size_t>(slices.front().rows());
  dims[static_cast<std::size_t>(ca)] = static_cast<std::size_t>(slices.front().cols());
  VoxelGrid grid(dims);
  for (std::size_t i = 0; i < slices.size(); ++i) put_slice(grid, normal_axis, i, slices[i]);
  return grid;
}

}  // namespace anisr::data
