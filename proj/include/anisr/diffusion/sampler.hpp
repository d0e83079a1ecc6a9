#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "anisr/core/image.hpp"
#include "anisr/core/rng.hpp"
#include "anisr/diffusion/denoiser.hpp"
#include "anisr/diffusion/schedule.hpp"
#include "anisr/diffusion/variant.hpp"

namespace anisr::diffusion {

enum class SamplerKind { ddpm, ddim };

SamplerKind parse_sampler_kind(const std::string& s);
std::string to_string(SamplerKind k);

struct SamplerConfig {
  SamplerKind kind = SamplerKind::ddim;
  int steps = 100;
  double eta = 0.0;
  std::uint64_t seed = 0;
  /// When positive, each step's x0 estimate is clamped to [-clip_x0, clip_x0]
  /// and the noise estimate re-derived from it. Bounds the first step of
  /// schedules whose alpha_bar[T] is near zero.
  double clip_x0 = 0.0;

  void validate(int T) const;
};

/// Gaussian transition z_prev ~ N(mean, stddev^2 I).
struct StepStats {
  Image mean;
  double variance = 0.0;
};

StepStats ddpm_step(const Image& z_t, const Image& eps_hat, int t, const NoiseSchedule& sched);
StepStats ddim_step(const Image& z_t, const Image& eps_hat, int t, int t_prev, double eta, const NoiseSchedule& sched);

/// Uniform-stride subsequence floor(i T / S) for i = 1..S, ascending.
std::vector<int> ddim_timesteps(int T, int S);

/// eps_hat consistent with clamping its x0 estimate to [-bound, bound].
Image clip_eps(const Image& z_t, const Image& eps_hat, int t, double bound, const NoiseSchedule& sched);

/// Batched samplers: one rng stream per item, used for the initial noise, the
/// inference-time conditioning noise (if any) and the per-step noise, in that order.
/// clip_x0 <= 0 disables clipping.
std::vector<Image> sample_ddpm(const DenoiserModel& model, std::span<const Image> conds, const NoiseSchedule& sched,
                               const VariantConfig& variant, std::span<Rng> rngs, double clip_x0 = 0.0);
std::vector<Image> sample_ddim(const DenoiserModel& model, std::span<const Image> conds, const NoiseSchedule& sched,
                               int steps, double eta, const VariantConfig& variant, std::span<Rng> rngs,
                               double clip_x0 = 0.0);

Image sample_ddpm(const DenoiserModel& model, const Image& cond, const NoiseSchedule& sched,
                  const VariantConfig& variant, Rng& rng, double clip_x0 = 0.0);
Image sample_ddim(const DenoiserModel& model, const Image& cond, const NoiseSchedule& sched, int steps, double eta,
                  const VariantConfig& variant, Rng& rng, double clip_x0 = 0.0);

/// Dispatches on config.kind.
std::vector<Image> sample(const DenoiserModel& model, std::span<const Image> conds, const NoiseSchedule& sched,
                          const SamplerConfig& config, const VariantConfig& variant, std::span<Rng> rngs);

}  // namespace anisr::diffusion
