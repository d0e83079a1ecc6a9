#pragma once

#include <cstddef>

#include "anisr/core/image.hpp"
#include "anisr/core/volume.hpp"
#include "anisr/degradation/slice_profile.hpp"

namespace anisr::degradation {

/// Through-plane length after t||g subsampling: floor((n - 1) / k) + 1.
std::size_t degraded_length(std::size_t n, int k);

/// Trailing samples to drop from a k-fold upsampled LR axis to get back to
/// an HR axis of length `hr_length`.
std::size_t upsampled_crop(std::size_t hr_length, int k);

/// Profile-weighted slice averages centred at 0, k, 2k, ... along `axis`
/// (reflect boundary).
Image degrade(const Image& hr, const SliceProfile& profile, int k, int axis);

/// Simulates a 2D multi-slice acquisition of an isotropic volume.
Volume degrade_volume(const Volume& vol, const SliceProfile& profile, const AcquisitionSpec& spec);

/// k-fold cubic B-spline interpolation along `axis`, LR sample i landing on
/// output index i * k. Mirror boundary; knots are reproduced exactly.
Image upsample(const Image& img, int k, int axis);
VoxelGrid upsample(const VoxelGrid& grid, int k, int axis);

}  // namespace anisr::degradation
