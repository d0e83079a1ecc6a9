#pragma once

#include <filesystem>

#include "anisr/app/checkpoint.hpp"
#include "anisr/volume/volume_sr.hpp"

namespace anisr::app {

/// Orientation model backed by a checkpoint's network. k follows from the
/// stored acquisition (t + g) and the LR in-plane spacing.
volume::OrientationModel orientation_model(const LoadedModel& model, double in_plane_spacing_mm, int batch = 16);

}  // namespace anisr::app
