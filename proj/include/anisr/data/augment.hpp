#pragma once

#include <string_view>

#include "anisr/core/rng.hpp"
#include "anisr/data/slice_pair.hpp"
#include "anisr/degradation/slice_profile.hpp"

namespace anisr::data {

enum class AugmentPolicy { none, flip_only, full };

std::string_view to_string(AugmentPolicy p);
AugmentPolicy parse_augment_policy(std::string_view name);

struct AugmentParams {
  double max_rotation_deg = 10.0;
  double min_scale = 0.9;
  double max_scale = 1.1;
  double max_shear_deg = 5.0;
  int elastic_grid = 4;
  double elastic_max_px = 4.0;
};

/// One sampled spatial transform. Output pixel p reads the source at
/// centre + A (p + d(p) - centre), then the flips are applied.
struct SpatialTransform {
  bool flip_rows = false;
  bool flip_cols = false;
  double rotation_rad = 0.0;
  double scale = 1.0;
  double shear_rad = 0.0;
  /// Elastic control displacements, grid x grid x {row, col}; empty = none.
  int elastic_grid = 0;
  std::vector<double> elastic;

  bool is_identity() const;
};

SpatialTransform sample_transform(AugmentPolicy policy, Rng& rng, const AugmentParams& params = {});

/// Warps an image with bilinear interpolation and reflect boundary.
Image warp(const Image& img, const SpatialTransform& tf);

/// Applies `tf` to hr, then re-derives lr by degrading the warped hr and
/// recomputes U(lr); the record is composed so that it still maps to native units.
SlicePair apply_transform(const SlicePair& pair, const SpatialTransform& tf, const degradation::SliceProfile& profile);

SlicePair augment(const SlicePair& pair, AugmentPolicy policy, const degradation::SliceProfile& profile, Rng& rng,
                  const AugmentParams& params = {});

}  // namespace anisr::data
