#include "anisr/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace anisr::nn {

template <class T>
Adam<T>::Adam(const AdamConfig& config, const ParamList<T>& params) : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Param<T>* p : params) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

template <class T>
double Adam<T>::step(const ParamList<T>& params) {
  if (params.size() != m_.size()) throw std::invalid_argument("optimizer state does not match parameters");
  double sq = 0.0;
  for (const Param<T>* p : params)
    for (T g : p->grad) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  const double clip = (config_.clip_norm > 0.0 && norm > config_.clip_norm) ? config_.clip_norm / norm : 1.0;

  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double lr = config_.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param<T>& p = *params[i];
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    if (m.size() != p.value.size()) throw std::invalid_argument("optimizer state size mismatch for " + p.name);
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j] * clip;
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      p.value[j] -= static_cast<T>(lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.epsilon));
    }
  }
  return norm;
}

template <class T>
void ema_update(const std::vector<const Param<T>*>& params, const std::vector<Param<T>*>& shadow, double decay) {
  if (params.size() != shadow.size()) throw std::invalid_argument("EMA layout mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Buffer<T>& src = params[i]->value;
    Buffer<T>& dst = shadow[i]->value;
    for (std::size_t j = 0; j < src.size(); ++j)
      dst[j] = static_cast<T>(decay * dst[j] + (1.0 - decay) * src[j]);
  }
}

template class Adam<float>;
template class Adam<double>;
template void ema_update<float>(const std::vector<const Param<float>*>&, const std::vector<Param<float>*>&, double);
template void ema_update<double>(const std::vector<const Param<double>*>&, const std::vector<Param<double>*>&,
                                 double);

}  // namespace anisr::nn
