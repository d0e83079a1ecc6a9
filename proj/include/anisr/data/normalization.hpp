#pragma once

#include "anisr/core/image.hpp"

namespace anisr::data {

/// Affine intensity frame anchored on the LR image: lr_min -> 0, lr_max -> 1.
struct NormalizationRecord {
  double lr_min = 0.0;
  double lr_max = 1.0;

  double range() const { return lr_max - lr_min; }
  double apply(double v) const { return (v - lr_min) / range(); }
  double invert(double v) const { return v * range() + lr_min; }
  Image apply(const Image& img) const { return (img - lr_min) / range(); }
  Image invert(const Image& img) const { return img * range() + lr_min; }

  /// Record spanning the values of `lr`; DataError if `lr` is constant.
  static NormalizationRecord from_lr(const Image& lr);
  static NormalizationRecord from_range(double lr_min, double lr_max);
};

struct NormalizedPair {
  Image hr;
  Image lr;
  NormalizationRecord record;
};

/// Maps both images with the LR min/max. HR values outside the LR range are
/// kept (no clamping).
NormalizedPair normalize_pair(const Image& hr, const Image& lr);

}  // namespace anisr::data
