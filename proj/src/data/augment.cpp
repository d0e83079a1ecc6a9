#include "anisr/data/augment.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "anisr/core/error.hpp"
#include "anisr/degradation/acquisition.hpp"

namespace anisr::data {

std::string_view to_string(AugmentPolicy p) {
  switch (p) {
    case AugmentPolicy::none: return "none";
    case AugmentPolicy::flip_only: return "flip";
    case AugmentPolicy::full: return "full";
  }
  return "unknown";
}

AugmentPolicy parse_augment_policy(std::string_view name) {
  if (name == "none") return AugmentPolicy::none;
  if (name == "flip" || name == "flip-only" || name == "flip_only") return AugmentPolicy::flip_only;
  if (name == "full") return AugmentPolicy::full;
  throw ConfigError("unknown augmentation policy '" + std::string(name) + "'");
}

bool SpatialTransform::is_identity() const {
  if (flip_rows || flip_cols || rotation_rad != 0.0 || scale != 1.0 || shear_rad != 0.0) return false;
  for (double d : elastic) {
    if (d != 0.0) return false;
  }
  return true;
}

SpatialTransform sample_transform(AugmentPolicy policy, Rng& rng, const AugmentParams& params) {
  SpatialTransform tf;
  if (policy == AugmentPolicy::none) return tf;
  std::bernoulli_distribution coin(0.5);
  tf.flip_rows = coin(rng);
  tf.flip_cols = coin(rng);
  if (policy == AugmentPolicy::flip_only) return tf;

  constexpr double deg = std::numbers::pi / 180.0;
  std::uniform_real_distribution<double> rot(-params.max_rotation_deg, params.max_rotation_deg);
  std::uniform_real_distribution<double> scale(params.min_scale, params.max_scale);
  std::uniform_real_distribution<double> shear(-params.max_shear_deg, params.max_shear_deg);
  std::uniform_real_distribution<double> disp(-params.elastic_max_px, params.elastic_max_px);
  tf.rotation_rad = rot(rng) * deg;
  tf.scale = scale(rng);
  tf.shear_rad = shear(rng) * deg;
  tf.elastic_grid = params.elastic_grid;
  tf.elastic.resize(static_cast<std::size_t>(params.elastic_grid * params.elastic_grid * 2));
  for (double& d : tf.elastic) d = disp(rng);
  return tf;
}

namespace {

double bilinear(const Image& img, double r, double c) {
  const double fr = std::floor(r), fc = std::floor(c);
  const auto r0 = static_cast<Eigen::Index>(fr), c0 = static_cast<Eigen::Index>(fc);
  const double wr = r - fr, wc = c - fc;
  auto at = [&img](Eigen::Index rr, Eigen::Index cc) {
    return img(reflect_index(rr, img.rows()), reflect_index(cc, img.cols()));
  };
  double v = at(r0, c0) * (1.0 - wr) * (1.0 - wc);
  if (wc != 0.0) v += at(r0, c0 + 1) * (1.0 - wr) * wc;
  if (wr != 0.0) v += at(r0 + 1, c0) * wr * (1.0 - wc);
  if (wr != 0.0 && wc != 0.0) v += at(r0 + 1, c0 + 1) * wr * wc;
  return v;
}

// Bilinear interpolation of the control-point displacement grid spanning the image.
std::pair<double, double> elastic_displacement(const SpatialTransform& tf, Eigen::Index rows, Eigen::Index cols,
                                               Eigen::Index r, Eigen::Index c) {
  if (tf.elastic.empty()) return {0.0, 0.0};
  const int g = tf.elastic_grid;
  const double gr = rows > 1 ? static_cast<double>(r) * (g - 1) / static_cast<double>(rows - 1) : 0.0;
  const double gc = cols > 1 ? static_cast<double>(c) * (g - 1) / static_cast<double>(cols - 1) : 0.0;
  const int r0 = std::min(static_cast<int>(gr), g - 2), c0 = std::min(static_cast<int>(gc), g - 2);
  const double wr = gr - r0, wc = gc - c0;
  auto ctrl = [&tf, g](int rr, int cc, int comp) {
    return tf.elastic[static_cast<std::size_t>((rr * g + cc) * 2 + comp)];
  };
  std::pair<double, double> d;
  for (int comp = 0; comp < 2; ++comp) {
    const double v = ctrl(r0, c0, comp) * (1 - wr) * (1 - wc) + ctrl(r0, c0 + 1, comp) * (1 - wr) * wc +
                     ctrl(r0 + 1, c0, comp) * wr * (1 - wc) + ctrl(r0 + 1, c0 + 1, comp) * wr * wc;
    (comp == 0 ? d.first : d.second) = v;
  }
  return d;
}

}  // namespace

Image warp(const Image& img, const SpatialTransform& tf) {
  if (!tf.elastic.empty() && (tf.elastic_grid < 2 ||
                              tf.elastic.size() != static_cast<std::size_t>(tf.elastic_grid * tf.elastic_grid * 2))) {
    throw std::invalid_argument("malformed elastic control grid");
  }
  const Eigen::Index rows = img.rows(), cols = img.cols();
  const double cr = 0.5 * static_cast<double>(rows - 1), cc = 0.5 * static_cast<double>(cols - 1);
  // A = R(theta) * Shear * S^-1 maps output offsets to source offsets.
  const double cs = std::cos(tf.rotation_rad), sn = std::sin(tf.rotation_rad), sh = std::tan(tf.shear_rad);
  const double a00 = cs / tf.scale, a01 = (cs * sh - sn) / tf.scale;
  const double a10 = sn / tf.scale, a11 = (sn * sh + cs) / tf.scale;

  Image warped(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto [dr, dc] = elastic_displacement(tf, rows, cols, r, c);
      const double y = static_cast<double>(r) + dr - cr;
      const double x = static_cast<double>(c) + dc - cc;
      warped(r, c) = bilinear(img, cr + a00 * y + a01 * x, cc + a10 * y + a11 * x);
    }
  }
  if (tf.flip_rows) warped = warped.colwise().reverse().eval();
  if (tf.flip_cols) warped = warped.rowwise().reverse().eval();
  return warped;
}

SlicePair apply_transform(const SlicePair& pair, const SpatialTransform& tf, const degradation::SliceProfile& profile) {
  if (!pair.pad.is_identity()) throw std::invalid_argument("augment expects an unpadded pair");
  if (tf.is_identity()) return pair;
  const Image hr = warp(pair.hr, tf);
  const Image lr = degradation::degrade(hr, profile, pair.k, pair.aniso_axis);
  NormalizationRecord local;
  try {
    local = NormalizationRecord::from_lr(lr);
  } catch (const DataError&) {
    return pair;
  }
  SlicePair out = pair;
  out.hr = local.apply(hr);
  out.lr = local.apply(lr);
  out.up_lr = conditioning_image(out.lr, pair.k, pair.aniso_axis, pair.aniso_axis == 0 ? hr.rows() : hr.cols());
  out.norm = NormalizationRecord{pair.norm.invert(local.lr_min), pair.norm.invert(local.lr_max)};
  return out;
}

SlicePair augment(const SlicePair& pair, AugmentPolicy policy, const degradation::SliceProfile& profile, Rng& rng,
                  const AugmentParams& params) {
  if (policy == AugmentPolicy::none) return pair;
  return apply_transform(pair, sample_transform(policy, rng, params), profile);
}

}  // namespace anisr::data
