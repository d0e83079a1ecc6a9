#include "anisr/app/inference.hpp"

#include "anisr/nn/unet_denoiser.hpp"

namespace anisr::app {

volume::OrientationModel orientation_model(const LoadedModel& model, double in_plane_spacing_mm, int batch) {
  const RunConfig& c = model.config;
  auto denoiser = std::make_shared<nn::UNetDenoiser<float>>(model.net, batch);
  auto sampler =
      std::make_shared<volume::DiffusionSampler>(denoiser, diffusion::make_schedule(c.schedule), c.variant);
  volume::OrientationModel m;
  m.sampler = std::move(sampler);
  m.plane = c.data.plane;
  m.k = AcquisitionSpec::from_geometry(c.data.thickness_mm, c.data.gap_mm, in_plane_spacing_mm,
                                       c.data.through_plane_axis)
            .k;
  m.pad_multiple = c.pad_multiple();
  m.batch = batch;
  return m;
}

}  // namespace anisr::app
