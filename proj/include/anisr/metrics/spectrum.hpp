#pragma once

#include <string>

#include "anisr/core/image.hpp"

namespace anisr::metrics {

/// |DFT| without normalization; with `centered` the DC bin sits at (rows/2, cols/2).
Image fourier_magnitude(const Image& img, bool centered = true);

/// log(1 + centered |DFT|) rescaled to [0, 1].
Image fourier_spectrum(const Image& img);

/// Binary 8-bit grayscale PGM of `img` clamped to [0, 1].
void write_pgm(const Image& img, const std::string& path);

}  // namespace anisr::metrics
