#include "anisr/data/padding.hpp"

#include <stdexcept>

#include "anisr/core/error.hpp"

namespace anisr::data {

PaddedImage pad_reflect(const Image& img, int multiple) {
  if (multiple < 1) throw std::invalid_argument("pad multiple must be >= 1");
  if (img.rows() < 2 || img.cols() < 2) throw DataError("image smaller than reflection support");
  auto split = [multiple](Eigen::Index n) {
    const Eigen::Index target = (n + multiple - 1) / multiple * multiple;
    const Eigen::Index total = target - n;
    return std::pair{total / 2, total - total / 2};
  };
  const auto [top, bottom] = split(img.rows());
  const auto [left, right] = split(img.cols());
  PadRecord rec{top, bottom, left, right, img.rows(), img.cols()};
  return PaddedImage{apply_pad(img, rec), rec};
}

Image apply_pad(const Image& img, const PadRecord& pad) {
  if (img.rows() != pad.rows || img.cols() != pad.cols) throw std::invalid_argument("pad record does not match image");
  if (pad.is_identity()) return img;
  if (std::max(pad.top, pad.bottom) > img.rows() - 1 || std::max(pad.left, pad.right) > img.cols() - 1) {
    throw DataError("image smaller than reflection support");
  }
  Image out(img.rows() + pad.top + pad.bottom, img.cols() + pad.left + pad.right);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const Eigen::Index sr = reflect_index(r - pad.top, img.rows());
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = img(sr, reflect_index(c - pad.left, img.cols()));
  }
  return out;
}

Image unpad(const Image& img, const PadRecord& pad) {
  if (img.rows() != pad.rows + pad.top + pad.bottom || img.cols() != pad.cols + pad.left + pad.right) {
    throw std::invalid_argument("pad record does not match padded image");
  }
  return img.block(pad.top, pad.left, pad.rows, pad.cols);
}

}  // namespace anisr::data
