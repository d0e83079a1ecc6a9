#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <vector>

#include "anisr/app/config.hpp"
#include "anisr/core/volume.hpp"
#include "anisr/data/slice_pair.hpp"
#include "anisr/degradation/slice_profile.hpp"
#include "anisr/nn/optim.hpp"
#include "anisr/nn/unet.hpp"

namespace anisr::app {

/// Unpadded slice pairs in the LR-anchored frame plus the profile that made them.
struct TrainingData {
  std::vector<data::SlicePair> train;
  std::vector<data::SlicePair> val;
  degradation::SliceProfile profile;
  int k = 4;
};

/// HR slices of `config.data.plane` from an isotropic volume, paired with
/// their simulated LR. Slices below the foreground fraction or with a
/// constant LR are skipped.
std::vector<data::SlicePair> slice_pairs_from_volume(const Volume& hr, const RunConfig& config,
                                                     const degradation::SliceProfile& profile);

/// Reads the manifest and builds train/val pairs. DataError (before any
/// training compute) when the manifest or a volume is unreadable.
TrainingData load_training_data(const RunConfig& config);

struct ValidationRecord {
  std::int64_t step = 0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double baseline_psnr_db = 0.0;
  double baseline_ssim = 0.0;
};

struct TrainResult {
  std::int64_t step = 0;
  double last_loss = 0.0;
  std::vector<ValidationRecord> validation;
};

/// Owns the network, its EMA shadow and the optimizer for one run. Every
/// random draw of step s, item b comes from derive_seed({seed, s, b}), so a
/// resumed run replays exactly the draws of an uninterrupted one.
class Trainer {
 public:
  Trainer(RunConfig config, TrainingData data);
  ~Trainer();

  /// Loads params, EMA and optimizer state from the output directory when it
  /// holds a checkpoint. Returns whether it did.
  bool resume();
  /// Trains until `until_step` (default: config.train.steps), validating and
  /// checkpointing at the configured cadences and at the end. A non-finite
  /// loss throws DivergenceError without touching the last checkpoint.
  TrainResult run(std::int64_t until_step = -1, std::ostream* log = nullptr);
  /// One optimizer step on the batch for the current step index; returns the loss.
  double step();
  ValidationRecord validate();
  void save() const;

  std::int64_t current_step() const { return step_; }
  const nn::UNet<float>& net() const { return *net_; }
  const nn::UNet<float>& ema() const { return *ema_; }
  std::shared_ptr<const nn::UNet<float>> ema_snapshot() const;
  const RunConfig& config() const { return config_; }

 private:
  struct Item;
  Item draw_item(std::int64_t step, int b, std::size_t index) const;
  std::vector<std::size_t> draw_batch_indices(std::int64_t step) const;

  RunConfig config_;
  TrainingData data_;
  diffusion::NoiseSchedule schedule_;
  std::unique_ptr<nn::UNet<float>> net_, ema_;
  nn::Adam<float> adam_;
  std::int64_t step_ = 0;
  double last_loss_ = 0.0;
  /// Training indices grouped by padded shape (whole-slice training only).
  std::map<std::pair<Eigen::Index, Eigen::Index>, std::vector<std::size_t>> buckets_;
};

/// load_training_data + Trainer with directory lock, resume and run.
TrainResult train(const RunConfig& config, std::ostream* log = nullptr);

}  // namespace anisr::app
