#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "anisr/core/volume.hpp"
#include "anisr/data/augment.hpp"
#include "anisr/degradation/slice_profile.hpp"
#include "anisr/diffusion/sampler.hpp"
#include "anisr/diffusion/schedule.hpp"
#include "anisr/diffusion/variant.hpp"
#include "anisr/nn/unet.hpp"

namespace anisr::app {

struct DataConfig {
  std::filesystem::path manifest;
  double thickness_mm = 3.0;
  double gap_mm = 1.0;
  int through_plane_axis = 2;
  degradation::ProfileMethod profile = degradation::ProfileMethod::slr;
  /// Orientation the model is trained on; must contain the through-plane axis.
  Plane plane = Plane::sagittal;
  data::AugmentPolicy augmentation = data::AugmentPolicy::full;
  /// 0 selects the network's divisibility requirement.
  int pad_multiple = 0;
  /// Slices with fewer nonzero HR voxels than this fraction are skipped.
  double min_foreground = 0.01;
};

struct TrainConfig {
  std::int64_t steps = 200000;
  int batch = 8;
  /// Square training crop in pixels; 0 trains on whole padded slices.
  int crop = 0;
  double learning_rate = 1e-4;
  double clip_norm = 1.0;
  double ema_decay = 0.9999;
  std::int64_t validate_every = 5000;
  std::int64_t checkpoint_every = 5000;
  int validation_slices = 16;
  int validation_sampler_steps = 50;
  std::int64_t log_every = 100;
};

struct RunConfig {
  diffusion::VariantConfig variant;
  diffusion::ScheduleConfig schedule;
  diffusion::SamplerConfig sampler;
  nn::NetConfig net;
  DataConfig data;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "run";

  /// Defaults with the small test network and short schedule of steps.
  static RunConfig tiny();
  int pad_multiple() const { return data.pad_multiple > 0 ? data.pad_multiple : net.divisor(); }
  /// ConfigError on any inconsistent field.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Missing keys keep their defaults; unknown keys and bad values raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& c, const std::filesystem::path& path);

/// Applies `a.b.c=value` overrides; value is parsed as JSON when possible,
/// otherwise taken as a string.
RunConfig apply_overrides(const RunConfig& c, const std::vector<std::string>& overrides);

/// $ANISR_SCRATCH if set, otherwise <tmp>/anisr.
std::filesystem::path scratch_dir();

}  // namespace anisr::app
