#pragma once

#include <Eigen/Core>

namespace anisr {

/// 2D intensity image, row-major, double precision.
using Image = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Mirror an out-of-range index back into [0, n) without repeating the edge
/// sample (…, 2, 1 | 0, 1, …, n-1 | n-2, …).
inline Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace anisr
