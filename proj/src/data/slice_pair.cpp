#include "anisr/data/slice_pair.hpp"

#include <stdexcept>

#include "anisr/degradation/acquisition.hpp"
#include "anisr/core/error.hpp"

namespace anisr::data {

Image conditioning_image(const Image& lr, int k, int aniso_axis, Eigen::Index hr_extent) {
  Image up = degradation::upsample(lr, k, aniso_axis);
  const Eigen::Index have = aniso_axis == 0 ? up.rows() : up.cols();
  if (have < hr_extent) throw DataError("upsampled LR is shorter than the HR extent");
  if (have == hr_extent) return up;
  return aniso_axis == 0 ? Image(up.topRows(hr_extent)) : Image(up.leftCols(hr_extent));
}

SlicePair make_slice_pair(const Image& hr, const Image& lr, int k, int aniso_axis, Plane plane) {
  if (aniso_axis < 0 || aniso_axis > 1) throw std::invalid_argument("anisotropic axis must be 0 or 1");
  const Eigen::Index n = aniso_axis == 0 ? hr.rows() : hr.cols();
  const Eigen::Index in_plane_hr = aniso_axis == 0 ? hr.cols() : hr.rows();
  const Eigen::Index in_plane_lr = aniso_axis == 0 ? lr.cols() : lr.rows();
  const Eigen::Index lr_n = aniso_axis == 0 ? lr.rows() : lr.cols();
  if (in_plane_hr != in_plane_lr ||
      static_cast<std::size_t>(lr_n) != degradation::degraded_length(static_cast<std::size_t>(n), k)) {
    throw DataError("HR and LR slice geometry disagree");
  }
  const NormalizedPair np = normalize_pair(hr, lr);
  SlicePair p;
  p.hr = np.hr;
  p.lr = np.lr;
  p.norm = np.record;
  p.up_lr = conditioning_image(p.lr, k, aniso_axis, n);
  p.plane = plane;
  p.aniso_axis = aniso_axis;
  p.k = k;
  p.pad = PadRecord{0, 0, 0, 0, hr.rows(), hr.cols()};
  p.crop = lr_n * k - n;
  return p;
}

SlicePair make_slice_pair(const Image& hr, const degradation::SliceProfile& profile, int k, int aniso_axis,
                          Plane plane) {
  return make_slice_pair(hr, degradation::degrade(hr, profile, k, aniso_axis), k, aniso_axis, plane);
}

SlicePair pad_pair(const SlicePair& pair, int multiple) {
  if (!pair.pad.is_identity()) throw std::invalid_argument("pair is already padded");
  SlicePair out = pair;
  PaddedImage padded = pad_reflect(pair.hr, multiple);
  out.hr = std::move(padded.image);
  out.up_lr = apply_pad(pair.up_lr, padded.pad);
  out.pad = padded.pad;
  return out;
}

}  // namespace anisr::data
