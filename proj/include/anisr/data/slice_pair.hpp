#pragma once

#include "anisr/core/image.hpp"
#include "anisr/core/volume.hpp"
#include "anisr/data/normalization.hpp"
#include "anisr/data/padding.hpp"
#include "anisr/degradation/slice_profile.hpp"

namespace anisr::data {

/// Aligned HR / LR / U(LR) slices in the LR-anchored intensity frame.
struct SlicePair {
  Image hr;
  Image lr;
  Image up_lr;  ///< upsample(lr, k, aniso_axis), cropped to hr's extent
  Plane plane = Plane::sagittal;
  int aniso_axis = 1;
  int k = 4;
  NormalizationRecord norm;
  PadRecord pad;
  /// Trailing samples dropped from U(lr) along the anisotropic axis.
  Eigen::Index crop = 0;
};

/// U(lr) cropped to `hr_extent` samples along `aniso_axis`.
Image conditioning_image(const Image& lr, int k, int aniso_axis, Eigen::Index hr_extent);

/// Normalizes by the LR min/max and derives U(lr). Inputs in native units.
SlicePair make_slice_pair(const Image& hr, const Image& lr, int k, int aniso_axis, Plane plane);

/// Same, simulating the LR slice from `hr` with `profile`.
SlicePair make_slice_pair(const Image& hr, const degradation::SliceProfile& profile, int k, int aniso_axis,
                          Plane plane);

/// Reflect-pads hr and up_lr to a multiple of `multiple`; lr is left as is.
SlicePair pad_pair(const SlicePair& pair, int multiple);

}  // namespace anisr::data
