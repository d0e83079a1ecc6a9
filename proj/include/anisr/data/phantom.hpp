#pragma once

#include <cstdint>
#include <vector>

#include "anisr/core/image.hpp"
#include "anisr/core/rng.hpp"
#include "anisr/core/volume.hpp"
#include "anisr/data/slice_pair.hpp"
#include "anisr/degradation/slice_profile.hpp"

namespace anisr::data {

/// Head-like synthetic anatomy: an outer shell ellipse, a darker interior
/// and a handful of random inclusions, smoothed by a Gaussian.
struct PhantomConfig {
  double shell_intensity_min = 600.0;
  double shell_intensity_max = 900.0;
  double interior_intensity_min = 200.0;
  double interior_intensity_max = 400.0;
  double inclusion_intensity_min = 100.0;
  double inclusion_intensity_max = 1000.0;
  double inclusion_radius_min = 3.0;  ///< voxels
  double inclusion_radius_max = 10.0;
  int inclusions_min = 3;
  int inclusions_max = 7;
  double shell_width = 2.0;
  double blur_sigma = 1.0;
  /// 0 draws intensities uniformly from each range; n >= 2 draws from n evenly
  /// spaced levels spanning it.
  int intensity_levels = 0;

  /// Unblurred, larger inclusions on a few discrete intensity levels: edges
  /// that cubic interpolation smears but a learned prior can restore.
  static PhantomConfig sharp();
};

Image phantom_slice(Eigen::Index rows, Eigen::Index cols, const PhantomConfig& config, Rng& rng);

/// Ellipsoidal analogue, isotropic 1 mm spacing.
Volume phantom_volume(VoxelGrid::Dims dims, const PhantomConfig& config, Rng& rng);

/// `count` independent square phantom slices of side `size`, degraded along
/// the columns with `profile` at factor k. Item i uses its own derived stream.
std::vector<SlicePair> phantom_slice_pairs(int count, int size, const PhantomConfig& config,
                                           const degradation::SliceProfile& profile, int k, std::uint64_t seed);

/// Separable Gaussian smoothing with reflect boundaries; sigma <= 0 is a no-op.
Image gaussian_blur(const Image& img, double sigma);
VoxelGrid gaussian_blur(const VoxelGrid& grid, double sigma);

}  // namespace anisr::data
