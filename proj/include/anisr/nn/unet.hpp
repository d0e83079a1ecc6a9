#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "anisr/nn/layers.hpp"
#include "anisr/nn/tensor.hpp"

namespace anisr::nn {

struct NetConfig {
  int base_channels = 64;
  /// Channel multiplier per resolution level; level l uses the entry min(l, size-1).
  std::vector<int> channel_multipliers{1, 2, 4, 8};
  /// Number of stride-2 downsamplings; levels are 0..depth with depth the bottleneck.
  int depth = 4;
  /// Levels (0..depth) that carry a self-attention block after each residual block.
  std::vector<int> attention_levels{3, 4};
  int res_blocks = 2;
  int embedding_dim = 256;
  int norm_groups = 32;
  int in_channels = 2;
  int out_channels = 1;
  /// Scales the noise level tau onto the timestep axis before embedding.
  double tau_embedding_scale = 1000.0;
  /// Zero-initialise the last conv of each residual and attention branch and the output conv.
  bool zero_init_branches = true;

  static NetConfig tiny();
  int channels_at(int level) const;
  int divisor() const { return 1 << depth; }
  void validate() const;
};

template <class T>
class UNet {
 public:
  UNet(const NetConfig& config, std::uint64_t seed);
  ~UNet();
  UNet(UNet&&) noexcept;
  UNet& operator=(UNet&&) noexcept;
  UNet(const UNet&) = delete;
  UNet& operator=(const UNet&) = delete;

  const NetConfig& config() const { return config_; }

  /// x has config.in_channels channels; timesteps and optional tau have one entry per sample.
  Tensor<T> forward(const Tensor<T>& x, std::span<const double> timesteps,
                    std::optional<std::span<const double>> tau = std::nullopt) const;
  /// Forward pass that records the activations needed by the following backward().
  Tensor<T> forward_train(const Tensor<T>& x, std::span<const double> timesteps,
                          std::optional<std::span<const double>> tau = std::nullopt);
  /// Accumulates parameter gradients of the loss whose output gradient is dy, for the last forward_train.
  void backward(const Tensor<T>& dy);

  ParamList<T> parameters();
  std::vector<const Param<T>*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

 private:
  struct Impl;
  struct Trace;
  NetConfig config_;
  std::unique_ptr<Impl> impl_;
  std::unique_ptr<Trace> trace_;

  Tensor<T> run(const Tensor<T>& x, std::span<const double> timesteps,
                std::optional<std::span<const double>> tau, Trace& trace) const;
};

/// Copies parameter values between models of identical configuration.
template <class T>
void copy_parameters(const UNet<T>& from, UNet<T>& to);

}  // namespace anisr::nn
