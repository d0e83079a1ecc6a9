#include <doctest.h>

#include <cmath>
#include <random>

#include "anisr/core/error.hpp"
#include "anisr/nn/layers.hpp"
#include "anisr/nn/optim.hpp"
#include "anisr/nn/unet.hpp"

using namespace anisr;
using namespace anisr::nn;

namespace {

Tensor<double> random_tensor(int n, int c, int h, int w, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Tensor<double> t(n, c, h, w);
  for (double& v : t.data) v = d(rng);
  return t;
}

/// Zero-padded cross-correlation straight from the definition.
Tensor<double> direct_conv(const Tensor<double>& x, const Buffer<double>& w, const Buffer<double>& b,
                           int out, int k, int stride) {
  const int pad = k / 2;
  const int ho = (x.h + 2 * pad - k) / stride + 1, wo = (x.w + 2 * pad - k) / stride + 1;
  Tensor<double> y(x.n, out, ho, wo);
  for (int n = 0; n < x.n; ++n)
    for (int o = 0; o < out; ++o)
      for (int r = 0; r < ho; ++r)
        for (int c = 0; c < wo; ++c) {
          double s = b[o];
          for (int i = 0; i < x.c; ++i)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int yy = r * stride - pad + ky, xx = c * stride - pad + kx;
                if (yy < 0 || yy >= x.h || xx < 0 || xx >= x.w) continue;
                s += w[((o * x.c + i) * k + ky) * k + kx] * x.plane(n, i)[yy * x.w + xx];
              }
          y.plane(n, o)[r * wo + c] = s;
        }
  return y;
}

NetConfig gradcheck_config() {
  NetConfig c;
  c.base_channels = 8;
  c.channel_multipliers = {1, 2};
  c.depth = 2;
  c.attention_levels = {1, 2};
  c.res_blocks = 1;
  c.embedding_dim = 16;
  c.norm_groups = 4;
  c.zero_init_branches = false;
  return c;
}

double mse(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  return s / a.size();
}

}  // namespace

TEST_CASE("conv2d matches direct cross-correlation") {
  std::mt19937_64 rng(1);
  for (auto [k, stride] : {std::pair{3, 1}, std::pair{3, 2}, std::pair{1, 1}}) {
    Conv2d<double> conv("c", 3, 4, k, stride, rng);
    ParamList<double> ps;
    conv.collect(ps);
    const Tensor<double> x = random_tensor(2, 3, 6, 8, rng);
    const Tensor<double> got = conv.forward(x);
    const Tensor<double> want = direct_conv(x, ps[0]->value, ps[1]->value, 4, k, stride);
    REQUIRE(got.same_shape(want));
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("group norm output has zero mean and unit variance per group") {
  std::mt19937_64 rng(2);
  GroupNorm<double> gn("g", 2, 4);
  Tensor<double> x = random_tensor(2, 4, 5, 5, rng);
  for (double& v : x.data) v = 3.0 * v + 7.0;
  const Tensor<double> y = gn.forward(x);
  for (int n = 0; n < 2; ++n)
    for (int g = 0; g < 2; ++g) {
      double s = 0, sq = 0;
      const double* p = y.plane(n, 2 * g);
      for (int i = 0; i < 50; ++i) {
        s += p[i];
        sq += p[i] * p[i];
      }
      CHECK(s / 50 == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(sq / 50 == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("sinusoidal embedding layout") {
  const double pos[] = {0.0, 3.0};
  const Matrix<double> e = sinusoidal_embedding<double>(pos, 8);
  CHECK(e(0, 0) == 0.0);
  CHECK(e(0, 4) == 1.0);
  CHECK(e(1, 0) == doctest::Approx(std::sin(3.0)));
  CHECK(e(1, 5) == doctest::Approx(std::cos(3.0 * std::exp(-std::log(10000.0) / 4))));
}

TEST_CASE("u-net shape contract, determinism and divisibility") {
  NetConfig cfg = NetConfig::tiny();
  UNet<float> net(cfg, 3);
  std::mt19937_64 rng(4);
  std::normal_distribution<float> d;
  Tensor<float> x(1, 2, 64, 64);
  for (float& v : x.data) v = d(rng);
  const double t[] = {500.0};
  const Tensor<float> a = net.forward(x, t);
  CHECK(a.n == 1);
  CHECK(a.c == 1);
  CHECK(a.h == 64);
  CHECK(a.w == 64);
  const Tensor<float> b = net.forward(x, t);
  CHECK(a.data == b.data);

  NetConfig deep;
  deep.base_channels = 8;
  deep.norm_groups = 4;
  deep.embedding_dim = 16;
  UNet<float> deep_net(deep, 1);
  Tensor<float> odd(1, 2, 65, 64);
  CHECK_THROWS_AS(deep_net.forward(odd, t), DataError);
}

TEST_CASE("u-net output is finite across the timestep range") {
  NetConfig cfg = gradcheck_config();
  UNet<double> net(cfg, 5);
  std::mt19937_64 rng(6);
  const Tensor<double> x = random_tensor(1, 2, 16, 16, rng);
  for (double t : {1.0, 500.0, 1000.0}) {
    const double ts[] = {t};
    const double tau[] = {0.3};
    const Tensor<double> y = net.forward(x, ts, std::span<const double>(tau));
    for (double v : y.data) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("u-net analytic gradients match central differences") {
  const NetConfig cfg = gradcheck_config();
  UNet<double> net(cfg, 7);
  std::mt19937_64 rng(8);
  const Tensor<double> x = random_tensor(2, 2, 16, 16, rng);
  const Tensor<double> target = random_tensor(2, 1, 16, 16, rng);
  const double ts[] = {37.0, 810.0};
  const double taus[] = {0.1, 0.45};
  const std::span<const double> tau(taus);

  net.zero_grad();
  const Tensor<double> y = net.forward_train(x, ts, tau);
  Tensor<double> dy(y.n, y.c, y.h, y.w);
  for (std::size_t i = 0; i < y.size(); ++i) dy.data[i] = 2.0 * (y.data[i] - target.data[i]) / y.size();
  net.backward(dy);

  ParamList<double> params = net.parameters();
  std::size_t total = 0;
  for (auto* p : params) total += p->value.size();
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  int checked = 0, failed = 0;
  double worst = 0.0;
  for (int s = 0; s < 60; ++s) {
    std::size_t flat = pick(rng);
    Param<double>* p = nullptr;
    for (auto* q : params) {
      if (flat < q->value.size()) {
        p = q;
        break;
      }
      flat -= q->value.size();
    }
    const double analytic = p->grad[flat];
    const double orig = p->value[flat];
    const double h = 1e-5;
    p->value[flat] = orig + h;
    const double lp = mse(net.forward(x, ts, tau), target);
    p->value[flat] = orig - h;
    const double lm = mse(net.forward(x, ts, tau), target);
    p->value[flat] = orig;
    const double numeric = (lp - lm) / (2 * h);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
    const double rel = std::abs(analytic - numeric) / denom;
    worst = std::max(worst, rel);
    ++checked;
    if (rel >= 1e-3) {
      ++failed;
      MESSAGE(p->name << "[" << flat << "] analytic " << analytic << " numeric " << numeric);
    }
  }
  MESSAGE("worst relative error " << worst << " over " << checked << " parameters");
  CHECK(checked >= 50);
  CHECK(failed == 0);
}

TEST_CASE("adam first step moves each weight by the learning rate against its gradient sign") {
  Param<double> p;
  p.name = "p";
  p.resize(3);
  p.value = {1.0, 2.0, 3.0};
  p.grad = {0.5, -0.25, 0.0};
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.clip_norm = 0.0;
  ParamList<double> ps{&p};
  Adam<double> opt(cfg, ps);
  opt.step(ps);
  CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p.value[1] == doctest::Approx(2.1).epsilon(1e-6));
  CHECK(p.value[2] == 3.0);
}

TEST_CASE("gradient clipping bounds the update norm") {
  Param<double> p;
  p.resize(2);
  p.grad = {30.0, 40.0};
  AdamConfig cfg;
  cfg.clip_norm = 1.0;
  ParamList<double> ps{&p};
  Adam<double> opt(cfg, ps);
  CHECK(opt.step(ps) == doctest::Approx(50.0));
  CHECK(opt.first_moments()[0][0] == doctest::Approx(0.1 * 0.6));
}

TEST_CASE("ema update") {
  Param<double> a, s;
  a.resize(2);
  s.resize(2);
  a.value = {1.0, 2.0};
  s.value = {0.0, 0.0};
  ema_update<double>({&a}, {&s}, 0.9);
  CHECK(s.value[0] == doctest::Approx(0.1));
  CHECK(s.value[1] == doctest::Approx(0.2));
}
