#pragma once

#include <memory>

#include "anisr/diffusion/denoiser.hpp"
#include "anisr/nn/unet.hpp"

namespace anisr::nn {

/// Packs (z_t, cond) into the two input channels of a U-net. Queries sharing a
/// shape run as one batch of at most `max_batch` items.
template <class T>
class UNetDenoiser : public diffusion::DenoiserModel {
 public:
  explicit UNetDenoiser(std::shared_ptr<const UNet<T>> net, int max_batch = 16)
      : net_(std::move(net)), max_batch_(max_batch) {}

  std::vector<Image> predict(std::span<const diffusion::DenoiseQuery> queries) const override;
  using diffusion::DenoiserModel::predict;

  const UNet<T>& net() const { return *net_; }

 private:
  std::shared_ptr<const UNet<T>> net_;
  int max_batch_;
};

/// Stacks images into channel `channel` of consecutive samples of `out`.
template <class T>
void pack_channel(std::span<const Image* const> images, int channel, Tensor<T>& out);

}  // namespace anisr::nn
