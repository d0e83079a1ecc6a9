#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "anisr/nn/tensor.hpp"

namespace anisr::nn {

template <class T>
using ParamList = std::vector<Param<T>*>;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation.
template <class T>
void init_uniform(Param<T>& p, int fan_in, std::mt19937_64& rng);

template <class T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in, int out, int kernel, int stride, std::mt19937_64& rng, bool zero_init = false);

  Tensor<T> forward(const Tensor<T>& x) const;
  /// Accumulates parameter gradients; returns d loss / d x.
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy);
  void collect(ParamList<T>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }
  int out_channels() const { return out_; }

 private:
  int in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0;
  Param<T> weight_, bias_;

  bool direct() const { return k_ == 1 && stride_ == 1; }
  int out_extent(int n) const { return (n + 2 * pad_ - k_) / stride_ + 1; }
  void im2col(const T* x, int h, int w, T* col) const;
  void col2im(const T* col, int h, int w, T* dx) const;
};

template <class T>
class GroupNorm {
 public:
  GroupNorm() = default;
  GroupNorm(std::string name, int groups, int channels);

  Tensor<T> forward(const Tensor<T>& x) const;
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy);
  void collect(ParamList<T>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }

 private:
  int groups_ = 1, channels_ = 0;
  Param<T> gamma_, beta_;
};

/// Row-major batch of feature vectors (rows x features).
template <class T>
struct Matrix {
  int rows = 0, cols = 0;
  Buffer<T> data;
  Matrix() = default;
  Matrix(int r, int c, T fill = T(0)) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}
  T& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  T operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

template <class T>
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, int in, int out, std::mt19937_64& rng);

  Matrix<T> forward(const Matrix<T>& x) const;
  Matrix<T> backward(const Matrix<T>& x, const Matrix<T>& dy);
  void collect(ParamList<T>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

 private:
  int in_ = 0, out_ = 0;
  Param<T> weight_, bias_;
};

template <class T>
T silu(T x);
template <class T>
T silu_grad(T x);

template <class T>
Tensor<T> silu(const Tensor<T>& x);
/// d loss / d x given the SiLU input and the output gradient.
template <class T>
Tensor<T> silu_backward(const Tensor<T>& x, const Tensor<T>& dy);
template <class T>
Matrix<T> silu(const Matrix<T>& x);
template <class T>
Matrix<T> silu_backward(const Matrix<T>& x, const Matrix<T>& dy);

template <class T>
Tensor<T> upsample_nearest2(const Tensor<T>& x);
template <class T>
Tensor<T> upsample_nearest2_backward(const Tensor<T>& dy);

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
void split_channels(const Tensor<T>& d, int first_channels, Tensor<T>& da, Tensor<T>& db);

template <class T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b);

/// Sinusoidal embedding of scalar positions, dim/2 sine then dim/2 cosine features.
template <class T>
Matrix<T> sinusoidal_embedding(std::span<const double> positions, int dim);

}  // namespace anisr::nn
