#include "anisr/nn/unet_denoiser.hpp"

#include <stdexcept>

namespace anisr::nn {

template <class T>
void pack_channel(std::span<const Image* const> images, int channel, Tensor<T>& out) {
  for (std::size_t b = 0; b < images.size(); ++b) {
    const Image& img = *images[b];
    if (img.rows() != out.h || img.cols() != out.w) throw std::invalid_argument("pack_channel: shape mismatch");
    T* dst = out.plane(static_cast<int>(b), channel);
    for (Eigen::Index i = 0; i < img.size(); ++i) dst[i] = static_cast<T>(img.data()[i]);
  }
}

template <class T>
std::vector<Image> UNetDenoiser<T>::predict(std::span<const diffusion::DenoiseQuery> queries) const {
  std::vector<Image> out(queries.size());
  std::size_t start = 0;
  while (start < queries.size()) {
    const Image& first = *queries[start].z_t;
    const bool with_tau = queries[start].tau.has_value();
    std::size_t end = start + 1;
    while (end < queries.size() && end - start < static_cast<std::size_t>(max_batch_) &&
           queries[end].z_t->rows() == first.rows() && queries[end].z_t->cols() == first.cols() &&
           queries[end].tau.has_value() == with_tau)
      ++end;
    const int n = static_cast<int>(end - start);
    std::vector<const Image*> zs, cs;
    std::vector<double> ts, taus;
    for (std::size_t i = start; i < end; ++i) {
      const auto& q = queries[i];
      if (q.cond->rows() != q.z_t->rows() || q.cond->cols() != q.z_t->cols())
        throw std::invalid_argument("conditioning shape differs from z_t");
      zs.push_back(q.z_t);
      cs.push_back(q.cond);
      ts.push_back(q.t);
      if (with_tau) taus.push_back(*q.tau);
    }
    Tensor<T> x(n, 2, static_cast<int>(first.rows()), static_cast<int>(first.cols()));
    pack_channel<T>(zs, 0, x);
    pack_channel<T>(cs, 1, x);
    std::optional<std::span<const double>> tau;
    if (with_tau) tau = std::span<const double>(taus);
    const Tensor<T> y = net_->forward(x, ts, tau);
    for (int b = 0; b < n; ++b) {
      Image img(first.rows(), first.cols());
      const T* src = y.plane(b, 0);
      for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = static_cast<double>(src[i]);
      out[start + static_cast<std::size_t>(b)] = std::move(img);
    }
    start = end;
  }
  return out;
}

template class UNetDenoiser<float>;
template class UNetDenoiser<double>;
template void pack_channel<float>(std::span<const Image* const>, int, Tensor<float>&);
template void pack_channel<double>(std::span<const Image* const>, int, Tensor<double>&);

}  // namespace anisr::nn
