#pragma once

#include "anisr/core/image.hpp"

namespace anisr::metrics {

/// Reported in place of +inf when the images are identical.
inline constexpr double kPsnrCap = 100.0;

double psnr(const Image& ref, const Image& test, double data_range = 1.0);

struct SsimParams {
  double sigma = 1.5;
  int window = 11;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Mean of the local SSIM map over window positions fully inside the image.
double ssim(const Image& ref, const Image& test, const SsimParams& params = {});

}  // namespace anisr::metrics
