#pragma once

#include <memory>
#include <span>
#include <vector>

#include "anisr/core/image.hpp"
#include "anisr/core/rng.hpp"
#include "anisr/core/volume.hpp"
#include "anisr/data/normalization.hpp"
#include "anisr/diffusion/denoiser.hpp"
#include "anisr/diffusion/sampler.hpp"
#include "anisr/diffusion/schedule.hpp"
#include "anisr/diffusion/variant.hpp"

namespace anisr::volume {

/// Produces z0_hat (HR or residual space, per variant) from padded,
/// normalized conditioning images U(x).
class TargetSampler {
 public:
  virtual ~TargetSampler() = default;
  virtual std::vector<Image> sample(std::span<const Image> conds, const diffusion::SamplerConfig& config,
                                    std::span<Rng> rngs) const = 0;
  virtual const diffusion::VariantConfig& variant() const = 0;
};

class DiffusionSampler : public TargetSampler {
 public:
  DiffusionSampler(std::shared_ptr<const diffusion::DenoiserModel> model, diffusion::NoiseSchedule schedule,
                   diffusion::VariantConfig variant);
  std::vector<Image> sample(std::span<const Image> conds, const diffusion::SamplerConfig& config,
                            std::span<Rng> rngs) const override;
  const diffusion::VariantConfig& variant() const override { return variant_; }

 private:
  std::shared_ptr<const diffusion::DenoiserModel> model_;
  diffusion::NoiseSchedule schedule_;
  diffusion::VariantConfig variant_;
};

/// Returns a target that reconstructs to exactly U(x): zero for residual
/// variants, the conditioning image itself for direct ones.
class CubicOracle : public TargetSampler {
 public:
  explicit CubicOracle(diffusion::VariantConfig variant) : variant_(std::move(variant)) {}
  std::vector<Image> sample(std::span<const Image> conds, const diffusion::SamplerConfig& config,
                            std::span<Rng> rngs) const override;
  const diffusion::VariantConfig& variant() const override { return variant_; }

 private:
  diffusion::VariantConfig variant_;
};

struct OrientationModel {
  std::shared_ptr<const TargetSampler> sampler;
  Plane plane = Plane::sagittal;
  int k = 4;
  int pad_multiple = 16;
  /// Slices handed to the sampler per call.
  int batch = 16;
};

struct OrientationModelSet {
  OrientationModel a;
  OrientationModel b;
  int k = 4;
  int through_plane_axis = 2;
  /// ConfigError unless both models share k and cover two distinct planes.
  void validate() const;
};

/// SR of LR slices (native units) whose through-plane direction is
/// `aniso_axis`, each normalized with its own record. Output is in native
/// units with `hr_extent` samples along `aniso_axis`. Residual variants add
/// the native-unit U(x) so a zero residual reproduces it bit-exactly.
std::vector<Image> super_resolve_slices(std::span<const Image> lr, std::span<const data::NormalizationRecord> norms,
                                        int aniso_axis, Eigen::Index hr_extent, const OrientationModel& model,
                                        const diffusion::SamplerConfig& sampler, std::span<Rng> rngs);

/// Single slice, normalized by its own LR min/max; hr_extent defaults to k * LR length.
Image super_resolve_slice(const Image& lr, int aniso_axis, const OrientationModel& model,
                          const diffusion::SamplerConfig& sampler, Rng& rng, Eigen::Index hr_extent = -1);

/// Runs both orientation models over the LR volume with one volume-level
/// normalization record and averages the two restacked volumes. Per-slice
/// rng streams derive from (sampler.seed, orientation, slice index).
Volume super_resolve_volume(const Volume& lr, const OrientationModelSet& models,
                            const diffusion::SamplerConfig& sampler);

/// Voxelwise mean; DataError on shape or spacing mismatch.
Volume average_stacks(const Volume& a, const Volume& b);

/// Geometry of the isotropic output: through-plane length k * n and spacing / k.
Volume upsampled_geometry(const Volume& lr, int k, int axis);

}  // namespace anisr::volume
