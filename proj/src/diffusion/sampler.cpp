#include "anisr/diffusion/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "anisr/core/error.hpp"
#include "anisr/diffusion/process.hpp"

namespace anisr::diffusion {

SamplerKind parse_sampler_kind(const std::string& s) {
  if (s == "ddpm") return SamplerKind::ddpm;
  if (s == "ddim") return SamplerKind::ddim;
  throw ConfigError("unknown sampler kind '" + s + "'");
}

std::string to_string(SamplerKind k) { return k == SamplerKind::ddpm ? "ddpm" : "ddim"; }

void SamplerConfig::validate(int T) const {
  if (steps < 1 || steps > T) throw ConfigError("sampler steps must lie in [1, T]");
  if (kind == SamplerKind::ddpm && steps != T) throw ConfigError("ddpm sampling requires steps == T");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
  if (!(clip_x0 >= 0.0)) throw ConfigError("clip_x0 must be >= 0");
}

Image clip_eps(const Image& z_t, const Image& eps_hat, int t, double bound, const NoiseSchedule& s) {
  const double ab = s.alpha_bar[t];
  const Image x0 = ((z_t - std::sqrt(1.0 - ab) * eps_hat) / std::sqrt(ab)).max(-bound).min(bound);
  return (z_t - std::sqrt(ab) * x0) / std::sqrt(1.0 - ab);
}

StepStats ddpm_step(const Image& z_t, const Image& eps_hat, int t, const NoiseSchedule& s) {
  if (t < 1 || t > s.T) throw std::out_of_range("ddpm_step: timestep outside 1..T");
  const double coef = s.beta[t] / std::sqrt(1.0 - s.alpha_bar[t]);
  return {(z_t - coef * eps_hat) / std::sqrt(s.alpha[t]), s.beta_tilde(t)};
}

StepStats ddim_step(const Image& z_t, const Image& eps_hat, int t, int t_prev, double eta, const NoiseSchedule& s) {
  if (t < 1 || t > s.T || t_prev < 0 || t_prev >= t) throw std::out_of_range("ddim_step: invalid timestep pair");
  const double ab = s.alpha_bar[t];
  const double ab_prev = s.alpha_bar[t_prev];
  const double var = eta * eta * (1.0 - ab_prev) / (1.0 - ab) * (1.0 - ab / ab_prev);
  const Image x0 = (z_t - std::sqrt(1.0 - ab) * eps_hat) / std::sqrt(ab);
  const double dir = std::sqrt(std::max(0.0, 1.0 - ab_prev - var));
  return {std::sqrt(ab_prev) * x0 + dir * eps_hat, var};
}

std::vector<int> ddim_timesteps(int T, int S) {
  if (S < 1 || S > T) throw std::invalid_argument("ddim steps must lie in [1, T]");
  std::vector<int> ts;
  ts.reserve(static_cast<std::size_t>(S));
  for (int i = 1; i <= S; ++i) ts.push_back(static_cast<int>(static_cast<long long>(i) * T / S));
  return ts;
}

namespace {

/// Shared driver: `stats(z, eps_hat, i)` returns the transition for the i-th
/// (descending) step of `ts`.
template <class Step>
std::vector<Image> run_chain(const DenoiserModel& model, std::span<const Image> conds, const VariantConfig& variant,
                             std::span<Rng> rngs, const std::vector<int>& ts, const NoiseSchedule& sched,
                             double clip_x0, Step step) {
  if (conds.size() != rngs.size()) throw std::invalid_argument("one rng stream per conditioning image required");
  const std::size_t n = conds.size();
  std::vector<Image> z(n), cond_in(n);
  std::optional<double> tau;
  if (variant.nca) tau = variant.nca_at_inference ? variant.effective_inference_tau() : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = gaussian_image(conds[i].rows(), conds[i].cols(), rngs[i]);
    if (variant.nca && variant.nca_at_inference)
      cond_in[i] = apply_nca(conds[i], *tau, gaussian_image(conds[i].rows(), conds[i].cols(), rngs[i]),
                             variant.tau_max);
    else
      cond_in[i] = conds[i];
  }
  std::vector<DenoiseQuery> queries(n);
  for (std::size_t k = ts.size(); k-- > 0;) {
    for (std::size_t i = 0; i < n; ++i) queries[i] = {&z[i], &cond_in[i], ts[k], tau};
    const std::vector<Image> eps = model.predict(queries);
    for (std::size_t i = 0; i < n; ++i) {
      if (eps[i].rows() != z[i].rows() || eps[i].cols() != z[i].cols())
        throw std::invalid_argument("denoiser output shape mismatch");
      StepStats st = clip_x0 > 0.0 ? step(z[i], clip_eps(z[i], eps[i], ts[k], clip_x0, sched), k)
                                    : step(z[i], eps[i], k);
      if (st.variance > 0.0)
        z[i] = st.mean + std::sqrt(st.variance) * gaussian_image(z[i].rows(), z[i].cols(), rngs[i]);
      else
        z[i] = std::move(st.mean);
    }
  }
  return z;
}

}  // namespace

std::vector<Image> sample_ddpm(const DenoiserModel& model, std::span<const Image> conds, const NoiseSchedule& sched,
                               const VariantConfig& variant, std::span<Rng> rngs, double clip_x0) {
  const std::vector<int> ts = ddim_timesteps(sched.T, sched.T);
  return run_chain(model, conds, variant, rngs, ts, sched, clip_x0,
                   [&](const Image& z, const Image& e, std::size_t k) { return ddpm_step(z, e, ts[k], sched); });
}

std::vector<Image> sample_ddim(const DenoiserModel& model, std::span<const Image> conds, const NoiseSchedule& sched,
                               int steps, double eta, const VariantConfig& variant, std::span<Rng> rngs,
                               double clip_x0) {
  if (steps > sched.T) throw ConfigError("ddim steps exceed T");
  const std::vector<int> ts = ddim_timesteps(sched.T, steps);
  return run_chain(model, conds, variant, rngs, ts, sched, clip_x0, [&](const Image& z, const Image& e, std::size_t k) {
    return ddim_step(z, e, ts[k], k == 0 ? 0 : ts[k - 1], eta, sched);
  });
}

Image sample_ddpm(const DenoiserModel& model, const Image& cond, const NoiseSchedule& sched,
                  const VariantConfig& variant, Rng& rng, double clip_x0) {
  return std::move(
      sample_ddpm(model, std::span<const Image>(&cond, 1), sched, variant, std::span<Rng>(&rng, 1), clip_x0)[0]);
}

Image sample_ddim(const DenoiserModel& model, const Image& cond, const NoiseSchedule& sched, int steps, double eta,
                  const VariantConfig& variant, Rng& rng, double clip_x0) {
  return std::move(sample_ddim(model, std::span<const Image>(&cond, 1), sched, steps, eta, variant,
                               std::span<Rng>(&rng, 1), clip_x0)[0]);
}

std::vector<Image> sample(const DenoiserModel& model, std::span<const Image> conds, const NoiseSchedule& sched,
                          const SamplerConfig& config, const VariantConfig& variant, std::span<Rng> rngs) {
  config.validate(sched.T);
  if (config.kind == SamplerKind::ddpm) return sample_ddpm(model, conds, sched, variant, rngs, config.clip_x0);
  return sample_ddim(model, conds, sched, config.steps, config.eta, variant, rngs, config.clip_x0);
}

}  // namespace anisr::diffusion
