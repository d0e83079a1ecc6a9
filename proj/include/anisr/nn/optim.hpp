#pragma once

#include <cstdint>
#include <vector>

#include "anisr/nn/layers.hpp"

namespace anisr::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global L2 gradient norm limit; non-positive disables clipping.
  double clip_norm = 1.0;
};

/// Adam with bias correction. Moment buffers follow the parameter list order.
template <class T>
class Adam {
 public:
  Adam() = default;
  Adam(const AdamConfig& config, const ParamList<T>& params);

  /// Applies one update from the accumulated gradients; returns the pre-clip gradient norm.
  double step(const ParamList<T>& params);

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::int64_t steps() const { return steps_; }
  void set_steps(std::int64_t s) { steps_ = s; }
  std::vector<std::vector<double>>& first_moments() { return m_; }
  std::vector<std::vector<double>>& second_moments() { return v_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::int64_t steps_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// shadow <- decay * shadow + (1 - decay) * params, elementwise over matching lists.
template <class T>
void ema_update(const std::vector<const Param<T>*>& params, const std::vector<Param<T>*>& shadow, double decay);

}  // namespace anisr::nn
