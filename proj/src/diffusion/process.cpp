#include "anisr/diffusion/process.hpp"

#include <cmath>
#include <stdexcept>

#include "anisr/core/error.hpp"
#include "anisr/data/padding.hpp"

namespace anisr::diffusion {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace

Image DenoiserModel::predict(const Image& z_t, const Image& cond, int t, std::optional<double> tau) const {
  const DenoiseQuery q{&z_t, &cond, t, tau};
  return std::move(predict(std::span<const DenoiseQuery>(&q, 1)).front());
}

Image q_sample(const Image& z0, int t, const Image& eps, const NoiseSchedule& sched) {
  if (t < 0 || t > sched.T) throw std::out_of_range("q_sample: timestep outside 0..T");
  require_same_shape(z0, eps, "q_sample");
  if (t == 0) return z0;
  const double ab = sched.alpha_bar[static_cast<std::size_t>(t)];
  return std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * eps;
}

TrainingTarget training_target(const Image& hr, const Image& up_lr, const VariantConfig& variant) {
  require_same_shape(hr, up_lr, "training_target");
  if (variant.residual) return {hr - up_lr, up_lr};
  return {hr, up_lr};
}

TrainingTarget training_target(const data::SlicePair& pair, const VariantConfig& variant) {
  return training_target(pair.hr, pair.up_lr, variant);
}

Image apply_nca(const Image& cond, double tau, const Image& eps, double tau_max) {
  if (!(tau >= 0.0 && tau <= tau_max)) throw std::out_of_range("apply_nca: tau outside [0, tau_max]");
  require_same_shape(cond, eps, "apply_nca");
  if (tau == 0.0) return cond;
  return cond + tau * eps;
}

double sample_tau(const VariantConfig& variant, Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, variant.tau_max);
  return dist(rng);
}

TrainingDraw draw_training_sample(const TrainingTarget& target, const NoiseSchedule& sched,
                                  const VariantConfig& variant, Rng& rng) {
  TrainingDraw d;
  std::uniform_int_distribution<int> steps(1, sched.T);
  d.t = steps(rng);
  d.eps = gaussian_image(target.z0.rows(), target.z0.cols(), rng);
  d.z_t = q_sample(target.z0, d.t, d.eps, sched);
  if (variant.nca) {
    d.tau = sample_tau(variant, rng);
    d.cond_in = apply_nca(target.cond, *d.tau, gaussian_image(target.cond.rows(), target.cond.cols(), rng),
                          variant.tau_max);
  } else {
    d.cond_in = target.cond;
  }
  return d;
}

double loss_step(const DenoiserModel& model, const data::SlicePair& pair, const NoiseSchedule& sched,
                 const VariantConfig& variant, Rng& rng) {
  const TrainingDraw d = draw_training_sample(training_target(pair, variant), sched, variant, rng);
  const Image eps_hat = model.predict(d.z_t, d.cond_in, d.t, d.tau);
  require_same_shape(eps_hat, d.eps, "loss_step");
  if (!eps_hat.isFinite().all()) throw DivergenceError("denoiser produced a non-finite prediction");
  return (eps_hat - d.eps).square().mean();
}

Image reconstruct_output(const Image& z0_hat, const Image& cond, const VariantConfig& variant) {
  require_same_shape(z0_hat, cond, "reconstruct_output");
  if (variant.residual) return z0_hat + cond;
  return z0_hat;
}

Image to_native(const Image& sr, const data::SlicePair& pair) {
  return pair.norm.invert(data::unpad(sr, pair.pad));
}

}  // namespace anisr::diffusion
