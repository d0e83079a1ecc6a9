#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace anisr::nn {

/// Storage aligned to Eigen's maximum vector width, so that vectorized
/// kernels see the same alignment (and summation order) on every run.
template <class T>
using Buffer = std::vector<T, Eigen::aligned_allocator<T>>;

/// Dense NCHW activation tensor.
template <class T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  Buffer<T> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, T fill = T(0))
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }
  std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }

  T* sample(int b) { return data.data() + static_cast<std::size_t>(b) * sample_size(); }
  const T* sample(int b) const { return data.data() + static_cast<std::size_t>(b) * sample_size(); }
  T* plane(int b, int ch) { return sample(b) + static_cast<std::size_t>(ch) * plane_size(); }
  const T* plane(int b, int ch) const { return sample(b) + static_cast<std::size_t>(ch) * plane_size(); }

  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

/// Trainable tensor with its gradient accumulator.
template <class T>
struct Param {
  std::string name;
  Buffer<T> value;
  Buffer<T> grad;

  void resize(std::size_t count) {
    value.assign(count, T(0));
    grad.assign(count, T(0));
  }
};

}  // namespace anisr::nn
