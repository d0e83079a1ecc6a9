#pragma once

#include <filesystem>

#include "anisr/core/volume.hpp"

namespace anisr::data {

/// Reads a NIfTI-1 file (.nii or .nii.gz). Intensities stay in native units
/// (scl_slope/scl_inter applied); orientation labels come from the
/// sform/qform direction cosines. Throws DataError on unreadable files,
/// non-3D payloads or missing spacing.
Volume load_volume(const std::filesystem::path& path);

/// Writes a float32 NIfTI-1 file; gzip-compressed when the name ends in .gz.
void save_volume(const Volume& vol, const std::filesystem::path& path);

/// Plane labels for each voxel axis from voxel->world direction cosines
/// (RAS world: x -> sagittal normal, y -> coronal, z -> axial).
std::array<Plane, 3> orientation_from_affine(const Eigen::Matrix4d& affine);

}  // namespace anisr::data
