#include "anisr/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace anisr::nn {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;
template <class T>
using MapVec = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <class T>
using ConstMapVec = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

}  // namespace

template <class T>
void init_uniform(Param<T>& p, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (T& v : p.value) v = static_cast<T>(dist(rng));
}

// ---------------------------------------------------------------- Conv2d

template <class T>
Conv2d<T>::Conv2d(std::string name, int in, int out, int kernel, int stride, std::mt19937_64& rng, bool zero_init)
    : in_(in), out_(out), k_(kernel), stride_(stride), pad_(kernel / 2) {
  if (kernel != 1 && kernel != 3) throw std::invalid_argument("conv kernel must be 1 or 3");
  if (stride != 1 && stride != 2) throw std::invalid_argument("conv stride must be 1 or 2");
  weight_.name = name + ".weight";
  bias_.name = name + ".bias";
  weight_.resize(static_cast<std::size_t>(out) * in * kernel * kernel);
  bias_.resize(static_cast<std::size_t>(out));
  const int fan_in = in * kernel * kernel;
  init_uniform(weight_, fan_in, rng);
  init_uniform(bias_, fan_in, rng);
  if (zero_init) {
    std::fill(weight_.value.begin(), weight_.value.end(), T(0));
    std::fill(bias_.value.begin(), bias_.value.end(), T(0));
  }
}

template <class T>
void Conv2d<T>::im2col(const T* x, int h, int w, T* col) const {
  const int ho = out_extent(h), wo = out_extent(w);
  T* dst = col;
  for (int ci = 0; ci < in_; ++ci) {
    const T* xc = x + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        // Output columns whose input column lies inside the image.
        const int lo = std::clamp((pad_ - kx + stride_ - 1) / stride_, 0, wo);
        const int hi = std::clamp((w - 1 + pad_ - kx) / stride_ + 1, lo, wo);
        for (int oy = 0; oy < ho; ++oy, dst += wo) {
          const int iy = oy * stride_ - pad_ + ky;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, T(0));
            continue;
          }
          const T* row = xc + static_cast<std::size_t>(iy) * w + (kx - pad_);
          std::fill(dst, dst + lo, T(0));
          if (stride_ == 1) {
            std::copy(row + lo, row + hi, dst + lo);
          } else {
            for (int ox = lo; ox < hi; ++ox) dst[ox] = row[ox * stride_];
          }
          std::fill(dst + hi, dst + wo, T(0));
        }
      }
    }
  }
}

template <class T>
void Conv2d<T>::col2im(const T* col, int h, int w, T* dx) const {
  const int ho = out_extent(h), wo = out_extent(w);
  const T* src = col;
  for (int ci = 0; ci < in_; ++ci) {
    T* dc = dx + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        const int lo = std::clamp((pad_ - kx + stride_ - 1) / stride_, 0, wo);
        const int hi = std::clamp((w - 1 + pad_ - kx) / stride_ + 1, lo, wo);
        for (int oy = 0; oy < ho; ++oy, src += wo) {
          const int iy = oy * stride_ - pad_ + ky;
          if (iy < 0 || iy >= h) continue;
          T* row = dc + static_cast<std::size_t>(iy) * w + (kx - pad_);
          for (int ox = lo; ox < hi; ++ox) row[ox * stride_] += src[ox];
        }
      }
    }
  }
}

template <class T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) const {
  if (x.c != in_) throw std::invalid_argument("conv input channel mismatch in " + weight_.name);
  const int ho = out_extent(x.h), wo = out_extent(x.w);
  const int rows = in_ * k_ * k_;
  const int hw = ho * wo;
  Tensor<T> y(x.n, out_, ho, wo);
  Buffer<T> col(direct() ? 0 : static_cast<std::size_t>(rows) * hw);
  ConstMapMat<T> wm(weight_.value.data(), out_, rows);
  ConstMapVec<T> bias(bias_.value.data(), out_);
  for (int b = 0; b < x.n; ++b) {
    const T* src = x.sample(b);
    if (!direct()) {
      im2col(src, x.h, x.w, col.data());
      src = col.data();
    }
    MapMat<T> ym(y.sample(b), out_, hw);
    ym.noalias() = wm * ConstMapMat<T>(src, rows, hw);
    ym.colwise() += bias;
  }
  return y;
}

template <class T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& x, const Tensor<T>& dy) {
  const int ho = out_extent(x.h), wo = out_extent(x.w);
  const int rows = in_ * k_ * k_;
  const int hw = ho * wo;
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  Buffer<T> col(direct() ? 0 : static_cast<std::size_t>(rows) * hw);
  Buffer<T> dcol(direct() ? 0 : static_cast<std::size_t>(rows) * hw);
  ConstMapMat<T> wm(weight_.value.data(), out_, rows);
  MapMat<T> dw(weight_.grad.data(), out_, rows);
  MapVec<T> db(bias_.grad.data(), out_);
  for (int b = 0; b < x.n; ++b) {
    const T* src = x.sample(b);
    if (!direct()) {
      im2col(src, x.h, x.w, col.data());
      src = col.data();
    }
    ConstMapMat<T> dym(dy.sample(b), out_, hw);
    dw.noalias() += dym * ConstMapMat<T>(src, rows, hw).transpose();
    db += dym.rowwise().sum();
    if (direct()) {
      MapMat<T>(dx.sample(b), rows, hw).noalias() = wm.transpose() * dym;
    } else {
      MapMat<T>(dcol.data(), rows, hw).noalias() = wm.transpose() * dym;
      col2im(dcol.data(), x.h, x.w, dx.sample(b));
    }
  }
  return dx;
}

// ---------------------------------------------------------------- GroupNorm

namespace {
constexpr double kNormEps = 1e-5;
}

template <class T>
GroupNorm<T>::GroupNorm(std::string name, int groups, int channels) : groups_(groups), channels_(channels) {
  if (groups < 1 || channels % groups != 0) throw std::invalid_argument("group count must divide the channel count");
  gamma_.name = name + ".gamma";
  beta_.name = name + ".beta";
  gamma_.resize(static_cast<std::size_t>(channels));
  beta_.resize(static_cast<std::size_t>(channels));
  std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
}

template <class T>
Tensor<T> GroupNorm<T>::forward(const Tensor<T>& x) const {
  if (x.c != channels_) throw std::invalid_argument("group norm channel mismatch in " + gamma_.name);
  Tensor<T> y(x.n, x.c, x.h, x.w);
  const int cpg = channels_ / groups_;
  const std::size_t plane = x.plane_size();
  const std::size_t count = plane * cpg;
  for (int b = 0; b < x.n; ++b) {
    for (int g = 0; g < groups_; ++g) {
      const T* src = x.plane(b, g * cpg);
      double sum = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        sum += src[i];
        sq += static_cast<double>(src[i]) * src[i];
      }
      const double mean = sum / count;
      const double var = std::max(0.0, sq / count - mean * mean);
      const double rstd = 1.0 / std::sqrt(var + kNormEps);
      for (int cc = 0; cc < cpg; ++cc) {
        const int ch = g * cpg + cc;
        const T* xc = x.plane(b, ch);
        T* yc = y.plane(b, ch);
        const double scale = rstd * gamma_.value[static_cast<std::size_t>(ch)];
        const double shift = beta_.value[static_cast<std::size_t>(ch)] - mean * scale;
        for (std::size_t i = 0; i < plane; ++i) yc[i] = static_cast<T>(xc[i] * scale + shift);
      }
    }
  }
  return y;
}

template <class T>
Tensor<T> GroupNorm<T>::backward(const Tensor<T>& x, const Tensor<T>& dy) {
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  const int cpg = channels_ / groups_;
  const std::size_t plane = x.plane_size();
  const std::size_t count = plane * cpg;
  for (int b = 0; b < x.n; ++b) {
    for (int g = 0; g < groups_; ++g) {
      const T* src = x.plane(b, g * cpg);
      double sum = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        sum += src[i];
        sq += static_cast<double>(src[i]) * src[i];
      }
      const double mean = sum / count;
      const double var = std::max(0.0, sq / count - mean * mean);
      const double rstd = 1.0 / std::sqrt(var + kNormEps);
      double s1 = 0.0, s2 = 0.0;
      for (int cc = 0; cc < cpg; ++cc) {
        const int ch = g * cpg + cc;
        const T* xc = x.plane(b, ch);
        const T* dyc = dy.plane(b, ch);
        const double gam = gamma_.value[static_cast<std::size_t>(ch)];
        double dgam = 0.0, dbet = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
          const double xhat = (xc[i] - mean) * rstd;
          dgam += dyc[i] * xhat;
          dbet += dyc[i];
          const double dxhat = dyc[i] * gam;
          s1 += dxhat;
          s2 += dxhat * xhat;
        }
        gamma_.grad[static_cast<std::size_t>(ch)] += static_cast<T>(dgam);
        beta_.grad[static_cast<std::size_t>(ch)] += static_cast<T>(dbet);
      }
      const double m1 = s1 / count, m2 = s2 / count;
      for (int cc = 0; cc < cpg; ++cc) {
        const int ch = g * cpg + cc;
        const T* xc = x.plane(b, ch);
        const T* dyc = dy.plane(b, ch);
        T* dxc = dx.plane(b, ch);
        const double gam = gamma_.value[static_cast<std::size_t>(ch)];
        for (std::size_t i = 0; i < plane; ++i) {
          const double xhat = (xc[i] - mean) * rstd;
          dxc[i] = static_cast<T>(rstd * (dyc[i] * gam - m1 - xhat * m2));
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- Linear

template <class T>
Linear<T>::Linear(std::string name, int in, int out, std::mt19937_64& rng) : in_(in), out_(out) {
  weight_.name = name + ".weight";
  bias_.name = name + ".bias";
  weight_.resize(static_cast<std::size_t>(out) * in);
  bias_.resize(static_cast<std::size_t>(out));
  init_uniform(weight_, in, rng);
  init_uniform(bias_, in, rng);
}

template <class T>
Matrix<T> Linear<T>::forward(const Matrix<T>& x) const {
  if (x.cols != in_) throw std::invalid_argument("linear input width mismatch in " + weight_.name);
  Matrix<T> y(x.rows, out_);
  MapMat<T> ym(y.data.data(), x.rows, out_);
  ym.noalias() = ConstMapMat<T>(x.data.data(), x.rows, in_) * ConstMapMat<T>(weight_.value.data(), out_, in_).transpose();
  ym.rowwise() += ConstMapVec<T>(bias_.value.data(), out_).transpose();
  return y;
}

template <class T>
Matrix<T> Linear<T>::backward(const Matrix<T>& x, const Matrix<T>& dy) {
  ConstMapMat<T> dym(dy.data.data(), dy.rows, out_);
  ConstMapMat<T> xm(x.data.data(), x.rows, in_);
  MapMat<T>(weight_.grad.data(), out_, in_).noalias() += dym.transpose() * xm;
  MapVec<T>(bias_.grad.data(), out_) += dym.colwise().sum().transpose();
  Matrix<T> dx(x.rows, in_);
  MapMat<T>(dx.data.data(), x.rows, in_).noalias() = dym * ConstMapMat<T>(weight_.value.data(), out_, in_);
  return dx;
}

// ---------------------------------------------------------------- elementwise

template <class T>
T silu(T x) {
  return x / (T(1) + std::exp(-x));
}

template <class T>
T silu_grad(T x) {
  const T s = T(1) / (T(1) + std::exp(-x));
  return s * (T(1) + x * (T(1) - s));
}

namespace {

template <class T>
using ArrayMap = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;
template <class T>
using ConstArrayMap = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;

template <class T>
void silu_into(const T* x, std::size_t n, T* y) {
  const auto xa = ConstArrayMap<T>(x, static_cast<Eigen::Index>(n));
  ArrayMap<T>(y, static_cast<Eigen::Index>(n)) = xa / (T(1) + (-xa).exp());
}

template <class T>
void silu_backward_into(const T* x, const T* dy, std::size_t n, T* dx) {
  const auto xa = ConstArrayMap<T>(x, static_cast<Eigen::Index>(n));
  const auto s = (T(1) / (T(1) + (-xa).exp())).eval();
  ArrayMap<T>(dx, static_cast<Eigen::Index>(n)) =
      ConstArrayMap<T>(dy, static_cast<Eigen::Index>(n)) * s * (T(1) + xa * (T(1) - s));
}

}  // namespace

template <class T>
Tensor<T> silu(const Tensor<T>& x) {
  Tensor<T> y(x.n, x.c, x.h, x.w);
  silu_into(x.data.data(), x.size(), y.data.data());
  return y;
}

template <class T>
Tensor<T> silu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  Tensor<T> dx(x.n, x.c, x.h, x.w);
  silu_backward_into(x.data.data(), dy.data.data(), x.size(), dx.data.data());
  return dx;
}

template <class T>
Matrix<T> silu(const Matrix<T>& x) {
  Matrix<T> y(x.rows, x.cols);
  silu_into(x.data.data(), x.data.size(), y.data.data());
  return y;
}

template <class T>
Matrix<T> silu_backward(const Matrix<T>& x, const Matrix<T>& dy) {
  Matrix<T> dx(x.rows, x.cols);
  silu_backward_into(x.data.data(), dy.data.data(), x.data.size(), dx.data.data());
  return dx;
}

template <class T>
Tensor<T> upsample_nearest2(const Tensor<T>& x) {
  Tensor<T> y(x.n, x.c, x.h * 2, x.w * 2);
  for (int b = 0; b < x.n; ++b) {
    for (int ch = 0; ch < x.c; ++ch) {
      const T* src = x.plane(b, ch);
      T* dst = y.plane(b, ch);
      for (int r = 0; r < y.h; ++r) {
        const T* srow = src + static_cast<std::size_t>(r / 2) * x.w;
        T* drow = dst + static_cast<std::size_t>(r) * y.w;
        for (int c = 0; c < y.w; ++c) drow[c] = srow[c / 2];
      }
    }
  }
  return y;
}

template <class T>
Tensor<T> upsample_nearest2_backward(const Tensor<T>& dy) {
  Tensor<T> dx(dy.n, dy.c, dy.h / 2, dy.w / 2);
  for (int b = 0; b < dy.n; ++b) {
    for (int ch = 0; ch < dy.c; ++ch) {
      const T* src = dy.plane(b, ch);
      T* dst = dx.plane(b, ch);
      for (int r = 0; r < dy.h; ++r) {
        const T* srow = src + static_cast<std::size_t>(r) * dy.w;
        T* drow = dst + static_cast<std::size_t>(r / 2) * dx.w;
        for (int c = 0; c < dy.w; ++c) drow[c / 2] += srow[c];
      }
    }
  }
  return dx;
}

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w) throw std::invalid_argument("concat shape mismatch");
  Tensor<T> y(a.n, a.c + b.c, a.h, a.w);
  for (int s = 0; s < a.n; ++s) {
    std::copy(a.sample(s), a.sample(s) + a.sample_size(), y.sample(s));
    std::copy(b.sample(s), b.sample(s) + b.sample_size(), y.sample(s) + a.sample_size());
  }
  return y;
}

template <class T>
void split_channels(const Tensor<T>& d, int first_channels, Tensor<T>& da, Tensor<T>& db) {
  da = Tensor<T>(d.n, first_channels, d.h, d.w);
  db = Tensor<T>(d.n, d.c - first_channels, d.h, d.w);
  for (int s = 0; s < d.n; ++s) {
    std::copy(d.sample(s), d.sample(s) + da.sample_size(), da.sample(s));
    std::copy(d.sample(s) + da.sample_size(), d.sample(s) + d.sample_size(), db.sample(s));
  }
}

template <class T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("tensor add shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += b.data[i];
}

template <class T>
Matrix<T> sinusoidal_embedding(std::span<const double> positions, int dim) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("embedding dimension must be even");
  const int half = dim / 2;
  Matrix<T> out(static_cast<int>(positions.size()), dim);
  for (int r = 0; r < out.rows; ++r) {
    for (int i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * i / half);
      const double a = positions[static_cast<std::size_t>(r)] * freq;
      out(r, i) = static_cast<T>(std::sin(a));
      out(r, half + i) = static_cast<T>(std::cos(a));
    }
  }
  return out;
}

#define ANISR_INSTANTIATE_LAYERS(T)                                                             \
  template void init_uniform<T>(Param<T>&, int, std::mt19937_64&);                              \
  template class Conv2d<T>;                                                                     \
  template class GroupNorm<T>;                                                                  \
  template class Linear<T>;                                                                     \
  template T silu<T>(T);                                                                        \
  template T silu_grad<T>(T);                                                                   \
  template Tensor<T> silu<T>(const Tensor<T>&);                                                 \
  template Tensor<T> silu_backward<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template Matrix<T> silu<T>(const Matrix<T>&);                                                 \
  template Matrix<T> silu_backward<T>(const Matrix<T>&, const Matrix<T>&);                      \
  template Tensor<T> upsample_nearest2<T>(const Tensor<T>&);                                    \
  template Tensor<T> upsample_nearest2_backward<T>(const Tensor<T>&);                           \
  template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);                    \
  template void split_channels<T>(const Tensor<T>&, int, Tensor<T>&, Tensor<T>&);               \
  template void add_inplace<T>(Tensor<T>&, const Tensor<T>&);                                   \
  template Matrix<T> sinusoidal_embedding<T>(std::span<const double>, int);

ANISR_INSTANTIATE_LAYERS(float)
ANISR_INSTANTIATE_LAYERS(double)

}  // namespace anisr::nn
