#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "anisr/app/config.hpp"
#include "anisr/nn/optim.hpp"
#include "anisr/nn/unet.hpp"

namespace anisr::app {

/// Checkpoint directory layout: config.json, state.json, params.bin,
/// ema.bin, optimizer.bin. state.json is written last and names the hashes
/// of the parameter files it belongs to.
struct TrainState {
  std::int64_t step = 0;
  double last_loss = 0.0;
  std::string param_hash;
  std::string ema_hash;
};

/// 64-bit FNV-1a over parameter names and raw values, as 16 hex digits.
std::string parameter_hash(const std::vector<const nn::Param<float>*>& params);

bool has_checkpoint(const std::filesystem::path& dir);

void save_checkpoint(const std::filesystem::path& dir, const RunConfig& config, const TrainState& state,
                     const nn::UNet<float>& net, const nn::UNet<float>& ema, const nn::Adam<float>& adam);

TrainState load_train_state(const std::filesystem::path& dir);

/// Restores all three parameter sets; DataError on hash or layout mismatch.
TrainState restore_training(const std::filesystem::path& dir, nn::UNet<float>& net, nn::UNet<float>& ema,
                            nn::Adam<float>& adam);

struct LoadedModel {
  RunConfig config;
  TrainState state;
  std::shared_ptr<const nn::UNet<float>> net;
};

/// Inference view of a checkpoint, using the EMA weights by default.
LoadedModel load_model(const std::filesystem::path& dir, bool use_ema = true);

/// Exclusive ownership of a checkpoint directory for one training process.
class DirectoryLock {
 public:
  /// ConfigError if another process holds the lock.
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace anisr::app
