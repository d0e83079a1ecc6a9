#pragma once

#include <optional>

#include "anisr/core/image.hpp"
#include "anisr/core/rng.hpp"
#include "anisr/data/slice_pair.hpp"
#include "anisr/diffusion/denoiser.hpp"
#include "anisr/diffusion/schedule.hpp"
#include "anisr/diffusion/variant.hpp"

namespace anisr::diffusion {

/// sqrt(alpha_bar[t]) z0 + sqrt(1 - alpha_bar[t]) eps.
Image q_sample(const Image& z0, int t, const Image& eps, const NoiseSchedule& sched);

struct TrainingTarget {
  Image z0;
  Image cond;
};

TrainingTarget training_target(const Image& hr, const Image& up_lr, const VariantConfig& variant);
TrainingTarget training_target(const data::SlicePair& pair, const VariantConfig& variant);

/// cond + tau * eps; tau must lie in [0, tau_max].
Image apply_nca(const Image& cond, double tau, const Image& eps, double tau_max);
double sample_tau(const VariantConfig& variant, Rng& rng);

/// One draw of the epsilon-prediction objective: network input and regression target.
struct TrainingDraw {
  int t = 0;
  Image eps;
  Image z_t;
  Image cond_in;
  std::optional<double> tau;
};

/// Draw order from rng: t, eps, then (nca only) tau and the conditioning noise.
TrainingDraw draw_training_sample(const TrainingTarget& target, const NoiseSchedule& sched,
                                  const VariantConfig& variant, Rng& rng);

/// Mean squared error between the model's prediction and the drawn noise.
/// DivergenceError on a non-finite prediction.
double loss_step(const DenoiserModel& model, const data::SlicePair& pair, const NoiseSchedule& sched,
                 const VariantConfig& variant, Rng& rng);

/// Residual variants add the clean conditioning image; direct variants pass through.
Image reconstruct_output(const Image& z0_hat, const Image& cond, const VariantConfig& variant);

/// Removes padding and maps back to native intensities.
Image to_native(const Image& sr, const data::SlicePair& pair);

}  // namespace anisr::diffusion
