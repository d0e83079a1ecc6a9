#include "anisr/volume/volume_sr.hpp"

#include <algorithm>
#include <cmath>

#include "anisr/core/error.hpp"
#include "anisr/data/padding.hpp"
#include "anisr/data/slice_pair.hpp"
#include "anisr/data/slicing.hpp"

namespace anisr::volume {

DiffusionSampler::DiffusionSampler(std::shared_ptr<const diffusion::DenoiserModel> model,
                                   diffusion::NoiseSchedule schedule, diffusion::VariantConfig variant)
    : model_(std::move(model)), schedule_(std::move(schedule)), variant_(std::move(variant)) {
  if (!model_) throw ConfigError("diffusion sampler needs a model");
  variant_.validate();
}

std::vector<Image> DiffusionSampler::sample(std::span<const Image> conds, const diffusion::SamplerConfig& config,
                                            std::span<Rng> rngs) const {
  return diffusion::sample(*model_, conds, schedule_, config, variant_, rngs);
}

std::vector<Image> CubicOracle::sample(std::span<const Image> conds, const diffusion::SamplerConfig&,
                                       std::span<Rng>) const {
  std::vector<Image> out;
  out.reserve(conds.size());
  for (const Image& c : conds) out.push_back(variant_.residual ? Image(Image::Zero(c.rows(), c.cols())) : c);
  return out;
}

void OrientationModelSet::validate() const {
  if (!a.sampler || !b.sampler) throw ConfigError("orientation model set is missing a model");
  if (a.k != k || b.k != k) throw ConfigError("orientation models were trained at a different k");
  if (a.plane == b.plane) throw ConfigError("orientation models must cover two distinct planes");
  if (through_plane_axis < 0 || through_plane_axis > 2) throw ConfigError("through-plane axis out of range");
}

std::vector<Image> super_resolve_slices(std::span<const Image> lr, std::span<const data::NormalizationRecord> norms,
                                        int aniso_axis, Eigen::Index hr_extent, const OrientationModel& model,
                                        const diffusion::SamplerConfig& sampler, std::span<Rng> rngs) {
  if (norms.size() != lr.size() || rngs.size() != lr.size()) {
    throw std::invalid_argument("slice, record and rng counts differ");
  }
  if (!model.sampler) throw ConfigError("orientation model has no sampler");
  const bool residual = model.sampler->variant().residual;
  const std::size_t batch = static_cast<std::size_t>(std::max(1, model.batch));

  std::vector<Image> out;
  out.reserve(lr.size());
  for (std::size_t begin = 0; begin < lr.size(); begin += batch) {
    const std::size_t end = std::min(lr.size(), begin + batch);
    std::vector<Image> conds;
    std::vector<data::PadRecord> pads;
    for (std::size_t i = begin; i < end; ++i) {
      const Image up = data::conditioning_image(norms[i].apply(lr[i]), model.k, aniso_axis, hr_extent);
      data::PaddedImage padded = data::pad_reflect(up, model.pad_multiple);
      conds.push_back(std::move(padded.image));
      pads.push_back(padded.pad);
    }
    const std::vector<Image> z0 = model.sampler->sample(conds, sampler, rngs.subspan(begin, end - begin));
    for (std::size_t i = begin; i < end; ++i) {
      const Image target = data::unpad(z0[i - begin], pads[i - begin]);
      const double range = norms[i].range();
      if (residual) {
        out.push_back(data::conditioning_image(lr[i], model.k, aniso_axis, hr_extent) + target * range);
      } else {
        out.push_back(norms[i].invert(target));
      }
    }
  }
  return out;
}

Image super_resolve_slice(const Image& lr, int aniso_axis, const OrientationModel& model,
                          const diffusion::SamplerConfig& sampler, Rng& rng, Eigen::Index hr_extent) {
  if (aniso_axis < 0 || aniso_axis > 1) throw ConfigError("anisotropic slice axis must be 0 or 1");
  const Eigen::Index n = aniso_axis == 0 ? lr.rows() : lr.cols();
  if (hr_extent < 0) hr_extent = n * model.k;
  const data::NormalizationRecord norm = data::NormalizationRecord::from_lr(lr);
  auto out = super_resolve_slices(std::span(&lr, 1), std::span(&norm, 1), aniso_axis, hr_extent, model, sampler,
                                  std::span(&rng, 1));
  return std::move(out.front());
}

Volume upsampled_geometry(const Volume& lr, int k, int axis) {
  Volume out = lr;
  auto dims = lr.voxels.dims();
  dims[static_cast<std::size_t>(axis)] *= static_cast<std::size_t>(k);
  out.voxels = VoxelGrid(dims);
  out.spacing[static_cast<std::size_t>(axis)] /= k;
  out.affine.col(axis).head<3>() /= static_cast<double>(k);
  out.acquisition.reset();
  return out;
}

Volume super_resolve_volume(const Volume& lr, const OrientationModelSet& models,
                            const diffusion::SamplerConfig& sampler) {
  models.validate();
  lr.validate();
  const int axis = models.through_plane_axis;
  const auto anisotropic = lr.anisotropic_axis();
  if (!anisotropic || *anisotropic != axis) {
    throw DataError("LR volume is not anisotropic along the models' through-plane axis");
  }
  const auto ax = static_cast<std::size_t>(axis);
  const double in_plane = lr.spacing[(ax + 1) % 3];
  if (std::abs(lr.spacing[ax] / in_plane - models.k) > 1e-3 * models.k) {
    throw DataError("LR spacing ratio does not match the models' k");
  }
  if (lr.acquisition && lr.acquisition->k != models.k) throw DataError("LR acquisition k does not match the models");

  const data::NormalizationRecord norm = data::NormalizationRecord::from_lr(
      Eigen::Map<const Image>(lr.voxels.values().data(), 1, static_cast<Eigen::Index>(lr.voxels.size())));
  const Eigen::Index hr_extent = static_cast<Eigen::Index>(lr.voxels.dim(axis)) * models.k;

  std::vector<Volume> stacks;
  const auto oriented = data::extract_slices(lr, axis);
  for (std::size_t o = 0; o < oriented.size(); ++o) {
    const auto& slices = oriented[o];
    const OrientationModel* model = slices.plane == models.a.plane   ? &models.a
                                    : slices.plane == models.b.plane ? &models.b
                                                                     : nullptr;
    if (!model) throw ConfigError("no orientation model for " + std::string(to_string(slices.plane)) + " slices");
    std::vector<Rng> rngs;
    for (std::size_t i = 0; i < slices.slices.size(); ++i) {
      rngs.emplace_back(derive_seed({sampler.seed, static_cast<std::uint64_t>(slices.plane), i}));
    }
    const std::vector<data::NormalizationRecord> norms(slices.slices.size(), norm);
    const auto sr = super_resolve_slices(slices.slices, norms, slices.aniso_axis, hr_extent, *model, sampler, rngs);
    Volume stack = upsampled_geometry(lr, models.k, axis);
    stack.voxels = data::restack(sr, slices.normal_axis);
    stacks.push_back(std::move(stack));
  }
  return average_stacks(stacks.at(0), stacks.at(1));
}

Volume average_stacks(const Volume& a, const Volume& b) {
  if (a.voxels.dims() != b.voxels.dims()) throw DataError("stacks differ in shape");
  if (a.spacing != b.spacing) throw DataError("stacks differ in spacing");
  Volume out = a;
  auto& v = out.voxels.values();
  const auto& w = b.voxels.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * (v[i] + w[i]);
  return out;
}

}  // namespace anisr::volume
