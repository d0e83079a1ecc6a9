#include "anisr/nn/unet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Core>

#include "anisr/core/error.hpp"

namespace anisr::nn {

NetConfig NetConfig::tiny() {
  NetConfig c;
  c.base_channels = 16;
  c.channel_multipliers = {1, 2};
  c.depth = 2;
  c.attention_levels = {2};
  c.res_blocks = 1;
  c.embedding_dim = 64;
  c.norm_groups = 4;
  return c;
}

int NetConfig::channels_at(int level) const {
  const int idx = std::min<int>(level, static_cast<int>(channel_multipliers.size()) - 1);
  return base_channels * channel_multipliers[static_cast<std::size_t>(idx)];
}

void NetConfig::validate() const {
  if (base_channels < 1) throw ConfigError("base_channels must be positive");
  if (depth < 0 || depth > 8) throw ConfigError("depth must be in [0, 8]");
  if (channel_multipliers.empty()) throw ConfigError("channel_multipliers must not be empty");
  for (int m : channel_multipliers)
    if (m < 1) throw ConfigError("channel multipliers must be positive");
  for (int l : attention_levels)
    if (l < 0 || l > depth) throw ConfigError("attention level outside 0..depth");
  if (res_blocks < 1) throw ConfigError("res_blocks must be positive");
  if (embedding_dim < 2 || embedding_dim % 2 != 0) throw ConfigError("embedding_dim must be even");
  if (norm_groups < 1) throw ConfigError("norm_groups must be positive");
  if (in_channels < 1 || out_channels < 1) throw ConfigError("channel counts must be positive");
}

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

int groups_for(int channels, int wanted) { return std::gcd(channels, wanted); }

template <class T>
struct ResBlock {
  GroupNorm<T> n1, n2;
  Conv2d<T> c1, c2, skip;
  Linear<T> emb;
  bool has_skip = false;

  struct Cache {
    Tensor<T> x, g1, s1, h, g2, s2;
  };

  ResBlock(const std::string& name, int in, int out, int emb_dim, int groups, bool zero_init, std::mt19937_64& rng)
      : n1(name + ".norm1", groups_for(in, groups), in),
        n2(name + ".norm2", groups_for(out, groups), out),
        c1(name + ".conv1", in, out, 3, 1, rng),
        c2(name + ".conv2", out, out, 3, 1, rng, zero_init),
        emb(name + ".emb", emb_dim, out, rng),
        has_skip(in != out) {
    if (has_skip) skip = Conv2d<T>(name + ".skip", in, out, 1, 1, rng);
  }

  void collect(ParamList<T>& out) {
    n1.collect(out);
    c1.collect(out);
    emb.collect(out);
    n2.collect(out);
    c2.collect(out);
    if (has_skip) skip.collect(out);
  }

  Tensor<T> forward(const Tensor<T>& x, const Matrix<T>& es, Cache* cache) const {
    Tensor<T> g1 = n1.forward(x);
    Tensor<T> s1 = silu(g1);
    Tensor<T> h = c1.forward(s1);
    const Matrix<T> ep = emb.forward(es);
    for (int b = 0; b < h.n; ++b)
      for (int ch = 0; ch < h.c; ++ch) {
        T* p = h.plane(b, ch);
        const T add = ep(b, ch);
        for (std::size_t i = 0; i < h.plane_size(); ++i) p[i] += add;
      }
    Tensor<T> g2 = n2.forward(h);
    Tensor<T> s2 = silu(g2);
    Tensor<T> y = c2.forward(s2);
    if (has_skip)
      add_inplace(y, skip.forward(x));
    else
      add_inplace(y, x);
    if (cache) *cache = Cache{x, std::move(g1), std::move(s1), std::move(h), std::move(g2), std::move(s2)};
    return y;
  }

  Tensor<T> backward(const Cache& c, const Tensor<T>& dy, const Matrix<T>& es, Matrix<T>& des) {
    Tensor<T> dh = n2.backward(c.h, silu_backward(c.g2, c2.backward(c.s2, dy)));
    Matrix<T> dep(dh.n, dh.c);
    for (int b = 0; b < dh.n; ++b)
      for (int ch = 0; ch < dh.c; ++ch) {
        const T* p = dh.plane(b, ch);
        double s = 0.0;
        for (std::size_t i = 0; i < dh.plane_size(); ++i) s += p[i];
        dep(b, ch) = static_cast<T>(s);
      }
    const Matrix<T> d_es = emb.backward(es, dep);
    for (std::size_t i = 0; i < des.data.size(); ++i) des.data[i] += d_es.data[i];
    Tensor<T> dx = n1.backward(c.x, silu_backward(c.g1, c1.backward(c.s1, dh)));
    if (has_skip)
      add_inplace(dx, skip.backward(c.x, dy));
    else
      add_inplace(dx, dy);
    return dx;
  }
};

/// Single-head self-attention over spatial positions with a residual connection.
template <class T>
struct AttnBlock {
  GroupNorm<T> norm;
  Conv2d<T> qkv, proj;
  int channels = 0;

  struct Cache {
    Tensor<T> x, g, qkv, o;
    std::vector<RowMat<T>> p;
  };

  AttnBlock(const std::string& name, int ch, int groups, bool zero_init, std::mt19937_64& rng)
      : norm(name + ".norm", groups_for(ch, groups), ch),
        qkv(name + ".qkv", ch, 3 * ch, 1, 1, rng),
        proj(name + ".proj", ch, ch, 1, 1, rng, zero_init),
        channels(ch) {}

  void collect(ParamList<T>& out) {
    norm.collect(out);
    qkv.collect(out);
    proj.collect(out);
  }

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    const int c = channels;
    const int l = static_cast<int>(x.plane_size());
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(c)));
    Tensor<T> g = norm.forward(x);
    Tensor<T> q = qkv.forward(g);
    Tensor<T> o(x.n, c, x.h, x.w);
    std::vector<RowMat<T>> probs;
    for (int b = 0; b < x.n; ++b) {
      const T* base = q.sample(b);
      ConstMapMat<T> qm(base, c, l), km(base + static_cast<std::size_t>(c) * l, c, l),
          vm(base + static_cast<std::size_t>(2 * c) * l, c, l);
      RowMat<T> s = (qm.transpose() * km) * scale;
      for (int i = 0; i < l; ++i) {
        const T mx = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - mx).exp();
        s.row(i) /= s.row(i).sum();
      }
      MapMat<T>(o.sample(b), c, l).noalias() = vm * s.transpose();
      if (cache) probs.push_back(std::move(s));
    }
    Tensor<T> y = proj.forward(o);
    add_inplace(y, x);
    if (cache) *cache = Cache{x, std::move(g), std::move(q), std::move(o), std::move(probs)};
    return y;
  }

  Tensor<T> backward(const Cache& cc, const Tensor<T>& dy) {
    const int c = channels;
    const int l = static_cast<int>(cc.x.plane_size());
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(c)));
    Tensor<T> d_o = proj.backward(cc.o, dy);
    Tensor<T> dq(cc.qkv.n, cc.qkv.c, cc.qkv.h, cc.qkv.w);
    for (int b = 0; b < cc.x.n; ++b) {
      const T* base = cc.qkv.sample(b);
      ConstMapMat<T> qm(base, c, l), km(base + static_cast<std::size_t>(c) * l, c, l),
          vm(base + static_cast<std::size_t>(2 * c) * l, c, l);
      const RowMat<T>& p = cc.p[static_cast<std::size_t>(b)];
      ConstMapMat<T> dom(d_o.sample(b), c, l);
      T* dbase = dq.sample(b);
      MapMat<T> dqm(dbase, c, l), dkm(dbase + static_cast<std::size_t>(c) * l, c, l),
          dvm(dbase + static_cast<std::size_t>(2 * c) * l, c, l);
      dvm.noalias() = dom * p;
      RowMat<T> dp = dom.transpose() * vm;
      const auto row_dot = (dp.array() * p.array()).rowwise().sum().eval();
      RowMat<T> ds = (p.array() * (dp.array().colwise() - row_dot)).matrix() * scale;
      dqm.noalias() = km * ds.transpose();
      dkm.noalias() = qm * ds;
    }
    Tensor<T> dx = norm.backward(cc.x, qkv.backward(cc.g, dq));
    add_inplace(dx, dy);
    return dx;
  }
};

struct LevelPlan {
  int res = 0;
  bool attn = false;
};

}  // namespace

template <class T>
struct UNet<T>::Impl {
  Linear<T> emb1, emb2;
  Conv2d<T> conv_in, out_conv;
  GroupNorm<T> out_norm;
  std::vector<std::vector<ResBlock<T>>> enc_res, dec_res;
  std::vector<std::vector<AttnBlock<T>>> enc_attn, dec_attn;
  std::vector<Conv2d<T>> down, up;
  std::vector<ResBlock<T>> mid_res;
  std::vector<AttnBlock<T>> mid_attn;
};

template <class T>
struct UNet<T>::Trace {
  Tensor<T> x;
  Matrix<T> pos, e1, a1, emb, es;
  std::vector<typename ResBlock<T>::Cache> res;
  std::vector<typename AttnBlock<T>::Cache> attn;
  std::vector<Tensor<T>> down_in, up_in;
  std::vector<int> split_channels;
  std::vector<int> skip_order;
  std::size_t skip_count = 0;
  Tensor<T> out_in, out_g, out_s;
};

template <class T>
UNet<T>::UNet(const NetConfig& config, std::uint64_t seed) : config_(config), impl_(std::make_unique<Impl>()) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const NetConfig& c = config_;
  const bool zi = c.zero_init_branches;
  const int e = c.embedding_dim;
  Impl& m = *impl_;
  m.emb1 = Linear<T>("time.fc1", e, e, rng);
  m.emb2 = Linear<T>("time.fc2", e, e, rng);
  m.conv_in = Conv2d<T>("conv_in", c.in_channels, c.channels_at(0), 3, 1, rng);
  auto has_attn = [&](int level) {
    return std::find(c.attention_levels.begin(), c.attention_levels.end(), level) != c.attention_levels.end();
  };

  std::vector<int> skip_channels{c.channels_at(0)};
  int ch = c.channels_at(0);
  m.enc_res.resize(static_cast<std::size_t>(c.depth) + 1);
  m.enc_attn.resize(static_cast<std::size_t>(c.depth) + 1);
  for (int l = 0; l <= c.depth; ++l) {
    const int out = c.channels_at(l);
    for (int r = 0; r < c.res_blocks; ++r) {
      const std::string name = "enc" + std::to_string(l) + ".res" + std::to_string(r);
      m.enc_res[l].emplace_back(name, ch, out, e, c.norm_groups, zi, rng);
      ch = out;
      if (has_attn(l))
        m.enc_attn[l].emplace_back("enc" + std::to_string(l) + ".attn" + std::to_string(r), ch, c.norm_groups, zi,
                                   rng);
      skip_channels.push_back(ch);
    }
    if (l < c.depth) {
      m.down.emplace_back("enc" + std::to_string(l) + ".down", ch, ch, 3, 2, rng);
      skip_channels.push_back(ch);
    }
  }
  m.mid_res.emplace_back("mid.res0", ch, ch, e, c.norm_groups, zi, rng);
  if (has_attn(c.depth)) m.mid_attn.emplace_back("mid.attn", ch, c.norm_groups, zi, rng);
  m.mid_res.emplace_back("mid.res1", ch, ch, e, c.norm_groups, zi, rng);

  m.dec_res.resize(static_cast<std::size_t>(c.depth) + 1);
  m.dec_attn.resize(static_cast<std::size_t>(c.depth) + 1);
  for (int l = c.depth; l >= 0; --l) {
    const int out = c.channels_at(l);
    for (int r = 0; r <= c.res_blocks; ++r) {
      const int sc = skip_channels.back();
      skip_channels.pop_back();
      const std::string name = "dec" + std::to_string(l) + ".res" + std::to_string(r);
      m.dec_res[l].emplace_back(name, ch + sc, out, e, c.norm_groups, zi, rng);
      ch = out;
      if (has_attn(l))
        m.dec_attn[l].emplace_back("dec" + std::to_string(l) + ".attn" + std::to_string(r), ch, c.norm_groups, zi,
                                   rng);
    }
    if (l > 0) m.up.emplace_back("dec" + std::to_string(l) + ".up", ch, ch, 3, 1, rng);
  }
  m.out_norm = GroupNorm<T>("out.norm", groups_for(ch, c.norm_groups), ch);
  m.out_conv = Conv2d<T>("out.conv", ch, c.out_channels, 3, 1, rng, zi);
}

template <class T>
UNet<T>::~UNet() = default;
template <class T>
UNet<T>::UNet(UNet&&) noexcept = default;
template <class T>
UNet<T>& UNet<T>::operator=(UNet&&) noexcept = default;

template <class T>
Tensor<T> UNet<T>::forward(const Tensor<T>& x, std::span<const double> timesteps,
                           std::optional<std::span<const double>> tau) const {
  Trace scratch;
  return run(x, timesteps, tau, scratch);
}

template <class T>
Tensor<T> UNet<T>::forward_train(const Tensor<T>& x, std::span<const double> timesteps,
                                 std::optional<std::span<const double>> tau) {
  if (!trace_) trace_ = std::make_unique<Trace>();
  return run(x, timesteps, tau, *trace_);
}

template <class T>
Tensor<T> UNet<T>::run(const Tensor<T>& x, std::span<const double> timesteps,
                       std::optional<std::span<const double>> tau, Trace& tr) const {
  const NetConfig& c = config_;
  const Impl& m = *impl_;
  if (x.c != c.in_channels)
    throw DataError("denoiser expects " + std::to_string(c.in_channels) + " input channels, got " +
                    std::to_string(x.c));
  if (x.h % c.divisor() != 0 || x.w % c.divisor() != 0)
    throw DataError("denoiser input " + std::to_string(x.h) + "x" + std::to_string(x.w) +
                    " is not divisible by " + std::to_string(c.divisor()));
  if (static_cast<int>(timesteps.size()) != x.n) throw std::invalid_argument("one timestep per sample required");
  if (tau && static_cast<int>(tau->size()) != x.n) throw std::invalid_argument("one tau per sample required");

  tr = Trace{};
  tr.x = x;
  tr.pos = sinusoidal_embedding<T>(timesteps, c.embedding_dim);
  if (tau) {
    std::vector<double> scaled(tau->begin(), tau->end());
    for (double& v : scaled) v *= c.tau_embedding_scale;
    const Matrix<T> tp = sinusoidal_embedding<T>(scaled, c.embedding_dim);
    for (std::size_t i = 0; i < tp.data.size(); ++i) tr.pos.data[i] += tp.data[i];
  }
  tr.e1 = m.emb1.forward(tr.pos);
  tr.a1 = silu(tr.e1);
  tr.emb = m.emb2.forward(tr.a1);
  tr.es = silu(tr.emb);
  const Matrix<T>& es = tr.es;

  auto run_res = [&](const ResBlock<T>& blk, const Tensor<T>& in) {
    tr.res.emplace_back();
    return blk.forward(in, es, &tr.res.back());
  };
  auto run_attn = [&](const AttnBlock<T>& blk, const Tensor<T>& in) {
    tr.attn.emplace_back();
    return blk.forward(in, &tr.attn.back());
  };

  std::vector<Tensor<T>> skips;
  Tensor<T> h = m.conv_in.forward(x);
  skips.push_back(h);
  for (int l = 0; l <= c.depth; ++l) {
    for (int r = 0; r < c.res_blocks; ++r) {
      h = run_res(m.enc_res[l][r], h);
      if (!m.enc_attn[l].empty()) h = run_attn(m.enc_attn[l][r], h);
      skips.push_back(h);
    }
    if (l < c.depth) {
      tr.down_in.push_back(h);
      h = m.down[l].forward(h);
      skips.push_back(h);
    }
  }
  tr.skip_count = skips.size();
  h = run_res(m.mid_res[0], h);
  if (!m.mid_attn.empty()) h = run_attn(m.mid_attn[0], h);
  h = run_res(m.mid_res[1], h);

  std::size_t up_idx = 0;
  for (int l = c.depth; l >= 0; --l) {
    for (int r = 0; r <= c.res_blocks; ++r) {
      tr.skip_order.push_back(static_cast<int>(skips.size()) - 1);
      tr.split_channels.push_back(h.c);
      h = concat_channels(h, skips.back());
      skips.pop_back();
      h = run_res(m.dec_res[l][r], h);
      if (!m.dec_attn[l].empty()) h = run_attn(m.dec_attn[l][r], h);
    }
    if (l > 0) {
      tr.up_in.push_back(upsample_nearest2(h));
      h = m.up[up_idx++].forward(tr.up_in.back());
    }
  }
  tr.out_in = h;
  tr.out_g = m.out_norm.forward(h);
  tr.out_s = silu(tr.out_g);
  return m.out_conv.forward(tr.out_s);
}

template <class T>
void UNet<T>::backward(const Tensor<T>& dy) {
  if (!trace_ || trace_->res.empty()) throw std::logic_error("backward without a preceding forward_train");
  const Trace& tr = *trace_;
  const NetConfig& c = config_;
  Impl& m = *impl_;
  Matrix<T> des(tr.es.rows, tr.es.cols);
  std::size_t res_i = tr.res.size(), attn_i = tr.attn.size(), up_i = tr.up_in.size(), down_i = tr.down_in.size();
  std::size_t dec_i = tr.skip_order.size();
  std::vector<Tensor<T>> dskips(tr.skip_count);

  Tensor<T> dh = m.out_norm.backward(tr.out_in, silu_backward(tr.out_g, m.out_conv.backward(tr.out_s, dy)));
  for (int l = 0; l <= c.depth; ++l) {
    if (l > 0) {
      --up_i;
      dh = upsample_nearest2_backward(m.up[up_i].backward(tr.up_in[up_i], dh));
    }
    for (int r = c.res_blocks; r >= 0; --r) {
      if (!m.dec_attn[l].empty()) dh = m.dec_attn[l][r].backward(tr.attn[--attn_i], dh);
      dh = m.dec_res[l][r].backward(tr.res[--res_i], dh, tr.es, des);
      --dec_i;
      Tensor<T> dmain, dskip;
      split_channels(dh, tr.split_channels[dec_i], dmain, dskip);
      dskips[static_cast<std::size_t>(tr.skip_order[dec_i])] = std::move(dskip);
      dh = std::move(dmain);
    }
  }
  dh = m.mid_res[1].backward(tr.res[--res_i], dh, tr.es, des);
  if (!m.mid_attn.empty()) dh = m.mid_attn[0].backward(tr.attn[--attn_i], dh);
  dh = m.mid_res[0].backward(tr.res[--res_i], dh, tr.es, des);

  std::size_t skip_i = tr.skip_count;
  for (int l = c.depth; l >= 0; --l) {
    if (l < c.depth) {
      add_inplace(dh, dskips[--skip_i]);
      --down_i;
      dh = m.down[l].backward(tr.down_in[down_i], dh);
    }
    for (int r = c.res_blocks - 1; r >= 0; --r) {
      add_inplace(dh, dskips[--skip_i]);
      if (!m.enc_attn[l].empty()) dh = m.enc_attn[l][r].backward(tr.attn[--attn_i], dh);
      dh = m.enc_res[l][r].backward(tr.res[--res_i], dh, tr.es, des);
    }
  }
  add_inplace(dh, dskips[--skip_i]);
  m.conv_in.backward(tr.x, dh);

  const Matrix<T> demb = silu_backward(tr.emb, des);
  const Matrix<T> da1 = m.emb2.backward(tr.a1, demb);
  m.emb1.backward(tr.pos, silu_backward(tr.e1, da1));
}

template <class T>
ParamList<T> UNet<T>::parameters() {
  ParamList<T> out;
  Impl& m = *impl_;
  m.emb1.collect(out);
  m.emb2.collect(out);
  m.conv_in.collect(out);
  for (std::size_t l = 0; l < m.enc_res.size(); ++l) {
    for (std::size_t r = 0; r < m.enc_res[l].size(); ++r) {
      m.enc_res[l][r].collect(out);
      if (!m.enc_attn[l].empty()) m.enc_attn[l][r].collect(out);
    }
    if (l < m.down.size()) m.down[l].collect(out);
  }
  for (auto& b : m.mid_res) b.collect(out);
  for (auto& b : m.mid_attn) b.collect(out);
  for (std::size_t l = m.dec_res.size(); l-- > 0;) {
    for (std::size_t r = 0; r < m.dec_res[l].size(); ++r) {
      m.dec_res[l][r].collect(out);
      if (!m.dec_attn[l].empty()) m.dec_attn[l][r].collect(out);
    }
  }
  for (auto& u : m.up) u.collect(out);
  m.out_norm.collect(out);
  m.out_conv.collect(out);
  return out;
}

template <class T>
std::vector<const Param<T>*> UNet<T>::parameters() const {
  const ParamList<T> ps = const_cast<UNet*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

template <class T>
std::size_t UNet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const Param<T>* p : parameters()) n += p->value.size();
  return n;
}

template <class T>
void UNet<T>::zero_grad() {
  for (Param<T>* p : parameters()) std::fill(p->grad.begin(), p->grad.end(), T(0));
}

template <class T>
void copy_parameters(const UNet<T>& from, UNet<T>& to) {
  const auto src = from.parameters();
  const auto dst = to.parameters();
  if (src.size() != dst.size()) throw std::invalid_argument("parameter layout mismatch");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i]->value.size() != dst[i]->value.size() || src[i]->name != dst[i]->name)
      throw std::invalid_argument("parameter layout mismatch at " + src[i]->name);
    dst[i]->value = src[i]->value;
  }
}

template class UNet<float>;
template class UNet<double>;
template void copy_parameters<float>(const UNet<float>&, UNet<float>&);
template void copy_parameters<double>(const UNet<double>&, UNet<double>&);

}  // namespace anisr::nn
