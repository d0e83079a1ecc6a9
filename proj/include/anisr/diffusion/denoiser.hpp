#pragma once

#include <optional>
#include <span>
#include <vector>

#include "anisr/core/image.hpp"

namespace anisr::diffusion {

struct DenoiseQuery {
  const Image* z_t = nullptr;
  const Image* cond = nullptr;
  int t = 0;
  std::optional<double> tau;
};

/// Noise predictor eps_hat = f(z_t, cond, t[, tau]); output shape equals z_t.
class DenoiserModel {
 public:
  virtual ~DenoiserModel() = default;
  virtual std::vector<Image> predict(std::span<const DenoiseQuery> queries) const = 0;

  Image predict(const Image& z_t, const Image& cond, int t, std::optional<double> tau = std::nullopt) const;
};

}  // namespace anisr::diffusion
