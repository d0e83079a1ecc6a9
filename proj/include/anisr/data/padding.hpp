#pragma once

#include "anisr/core/image.hpp"

namespace anisr::data {

struct PadRecord {
  Eigen::Index top = 0, bottom = 0, left = 0, right = 0;
  Eigen::Index rows = 0, cols = 0;  ///< shape before padding

  bool is_identity() const { return top == 0 && bottom == 0 && left == 0 && right == 0; }
};

struct PaddedImage {
  Image image;
  PadRecord pad;
};

/// Reflect-pads (edge sample not repeated) each axis up to the next multiple
/// of `multiple`, splitting evenly with the extra pixel on the trailing edge.
PaddedImage pad_reflect(const Image& img, int multiple);

/// Pads with an explicit record (used to pad companion images identically).
Image apply_pad(const Image& img, const PadRecord& pad);

Image unpad(const Image& img, const PadRecord& pad);

}  // namespace anisr::data
