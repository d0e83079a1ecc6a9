#include "anisr/data/normalization.hpp"

#include <cmath>

#include "anisr/core/error.hpp"

namespace anisr::data {

NormalizationRecord NormalizationRecord::from_range(double lr_min, double lr_max) {
  if (!(lr_max > lr_min) || !std::isfinite(lr_min) || !std::isfinite(lr_max)) {
    throw DataError("degenerate LR intensity range (constant LR input)");
  }
  return NormalizationRecord{lr_min, lr_max};
}

NormalizationRecord NormalizationRecord::from_lr(const Image& lr) {
  if (lr.size() == 0) throw DataError("empty LR image");
  return from_range(lr.minCoeff(), lr.maxCoeff());
}

NormalizedPair normalize_pair(const Image& hr, const Image& lr) {
  const NormalizationRecord rec = NormalizationRecord::from_lr(lr);
  return NormalizedPair{rec.apply(hr), rec.apply(lr), rec};
}

}  // namespace anisr::data
