#include <doctest.h>

#include <cmath>
#include <numeric>

#include "anisr/core/error.hpp"
#include "anisr/core/rng.hpp"
#include "anisr/diffusion/process.hpp"
#include "anisr/diffusion/sampler.hpp"
#include "anisr/diffusion/schedule.hpp"
#include "anisr/diffusion/variant.hpp"

using namespace anisr;
using namespace anisr::diffusion;

namespace {

/// Returns a fixed noise field regardless of input.
class ConstantModel : public DenoiserModel {
 public:
  explicit ConstantModel(Image out) : out_(std::move(out)) {}
  std::vector<Image> predict(std::span<const DenoiseQuery> q) const override {
    return std::vector<Image>(q.size(), out_);
  }

 private:
  Image out_;
};

/// Knows the clean target and returns the exact noise that produced z_t.
class OracleModel : public DenoiserModel {
 public:
  OracleModel(Image z0, const NoiseSchedule& s) : z0_(std::move(z0)), s_(s) {}
  std::vector<Image> predict(std::span<const DenoiseQuery> q) const override {
    std::vector<Image> out;
    for (const auto& item : q) {
      const double ab = s_.alpha_bar[item.t];
      out.push_back((*item.z_t - std::sqrt(ab) * z0_) / std::sqrt(1.0 - ab));
    }
    return out;
  }

 private:
  Image z0_;
  NoiseSchedule s_;
};

/// Deterministic function of the inputs so samplers see varying predictions.
class WobbleModel : public DenoiserModel {
 public:
  std::vector<Image> predict(std::span<const DenoiseQuery> q) const override {
    std::vector<Image> out;
    for (const auto& item : q)
      out.push_back(0.3 * item.z_t->sin() + 0.1 * *item.cond + 1e-4 * item.t + item.tau.value_or(0.0));
    return out;
  }
};

Image small_image(double a, double b, double c, double d) {
  Image m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("linear schedule hand products") {
  const NoiseSchedule s = make_schedule(ScheduleKind::linear, 4, 0.1, 0.4);
  const double beta[] = {0.1, 0.2, 0.3, 0.4};
  const double ab[] = {0.9, 0.72, 0.504, 0.3024};
  CHECK(s.alpha_bar[0] == 1.0);
  for (int t = 1; t <= 4; ++t) {
    CHECK(s.beta[t] == doctest::Approx(beta[t - 1]).epsilon(1e-14));
    CHECK(s.alpha_bar[t] == doctest::Approx(ab[t - 1]).epsilon(1e-14));
  }
}

TEST_CASE("single-step schedule") {
  const NoiseSchedule s = make_schedule(ScheduleKind::linear, 1, 0.3, 0.3);
  CHECK(s.alpha_bar[1] == doctest::Approx(0.7));
}

TEST_CASE("schedule bound violations") {
  CHECK_THROWS_AS(make_schedule(ScheduleKind::linear, 10, 1e-4, 1.0), ConfigError);
  CHECK_THROWS_AS(make_schedule(ScheduleKind::linear, 10, 0.0, 0.02), ConfigError);
  CHECK_THROWS_AS(make_schedule(ScheduleKind::linear, 10, 0.03, 0.02), ConfigError);
  CHECK_THROWS_AS(make_schedule(ScheduleKind::linear, 0, 1e-4, 0.02), ConfigError);
}

TEST_CASE("schedules are strictly decreasing and valid") {
  for (ScheduleKind kind : {ScheduleKind::linear, ScheduleKind::cosine}) {
    const NoiseSchedule s = make_schedule(kind, 1000);
    for (int t = 1; t <= 1000; ++t) {
      CHECK(s.beta[t] > 0.0);
      CHECK(s.beta[t] < 1.0);
      CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
    }
    CHECK(s.alpha_bar[1000] < 1e-3);
  }
}

TEST_CASE("default linear alpha_bar[T] against a direct product") {
  const NoiseSchedule s = make_schedule(ScheduleKind::linear, 1000);
  double prod = 1.0;
  for (int i = 0; i < 1000; ++i) prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * i / 999.0);
  CHECK(s.alpha_bar[1000] == doctest::Approx(prod).epsilon(1e-10));
  CHECK(prod == doctest::Approx(4.0e-5).epsilon(0.02));
}

TEST_CASE("q_sample identities") {
  const NoiseSchedule s = make_schedule(ScheduleKind::linear, 1000);
  Rng rng(1);
  const Image z0 = gaussian_image(4, 5, rng);
  const Image eps = gaussian_image(4, 5, rng);
  CHECK((q_sample(z0, 0, eps, s) == z0).all());
  const Image zero = Image::Zero(4, 5);
  const Image zt = q_sample(zero, 300, eps, s);
  CHECK(((zt - std::sqrt(1.0 - s.alpha_bar[300]) * eps).abs() < 1e-15).all());
  CHECK_THROWS(q_sample(z0, 1001, eps, s));
  CHECK_THROWS(q_sample(z0, 3, Image::Zero(2, 2), s));
}

TEST_CASE("q_sample empirical marginals within four standard errors") {
  const NoiseSchedule s = make_schedule(ScheduleKind::linear, 1000);
  const Image z0 = small_image(0.8, -0.3, 0.0, 1.5);
  const int draws = 10000;
  for (int t : {1, 500, 1000}) {
    Rng rng(derive_seed({7, static_cast<std::uint64_t>(t)}));
    Image sum = Image::Zero(2, 2), sq = Image::Zero(2, 2);
    for (int i = 0; i < draws; ++i) {
      const Image zt = q_sample(z0, t, gaussian_image(2, 2, rng), s);
      sum += zt;
      sq += zt * zt;
    }
    const Image mean = sum / draws;
    const Image var = sq / draws - mean * mean;
    const double v = 1.0 - s.alpha_bar[t];
    const double se_mean = std::sqrt(v / draws);
    const double se_var = v * std::sqrt(2.0 / (draws - 1));
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(mean.data()[i] - std::sqrt(s.alpha_bar[t]) * z0.data()[i]) < 4 * se_mean);
      CHECK(std::abs(var.data()[i] - v) < 4 * se_var);
    }
  }
}

TEST_CASE("training targets per variant") {
  const Image hr = small_image(1, 0, 0, 1);
  const Image up = small_image(0.5, 0.5, 0.5, 0.5);
  const auto sr3 = training_target(hr, up, VariantConfig::make(VariantName::SR3));
  CHECK((sr3.z0 == hr).all());
  CHECK((sr3.cond == up).all());
  const auto res = training_target(hr, up, VariantConfig::make(VariantName::AniRes2D));
  CHECK((res.z0 == small_image(0.5, -0.5, -0.5, 0.5)).all());
  CHECK((res.cond == up).all());
  const auto zero = training_target(up, up, VariantConfig::make(VariantName::AniRes2D));
  CHECK((zero.z0 == 0.0).all());
}

TEST_CASE("variant algebra round trip") {
  Rng rng(3);
  const Image hr = gaussian_image(8, 8, rng);
  const Image up = gaussian_image(8, 8, rng);
  for (auto name : {VariantName::SR3, VariantName::AniRes2D, VariantName::AniNCA2D, VariantName::ResNCA2D}) {
    const VariantConfig v = VariantConfig::make(name);
    const auto tgt = training_target(hr, up, v);
    CHECK(((reconstruct_output(tgt.z0, tgt.cond, v) - hr).abs() <= 1e-12).all());
  }
  const VariantConfig res = VariantConfig::make(VariantName::AniRes2D);
  CHECK((reconstruct_output(Image::Zero(8, 8), up, res) == up).all());
  const Image z = gaussian_image(8, 8, rng);
  CHECK((reconstruct_output(z, up, VariantConfig::make(VariantName::SR3)) == z).all());
}

TEST_CASE("variant flags") {
  CHECK_FALSE(VariantConfig::make(VariantName::SR3).residual);
  CHECK_FALSE(VariantConfig::make(VariantName::SR3).nca);
  CHECK(VariantConfig::make(VariantName::AniRes2D).residual);
  CHECK_FALSE(VariantConfig::make(VariantName::AniRes2D).nca);
  CHECK_FALSE(VariantConfig::make(VariantName::AniNCA2D).residual);
  CHECK(VariantConfig::make(VariantName::AniNCA2D).nca);
  CHECK(VariantConfig::make(VariantName::ResNCA2D).residual);
  CHECK(VariantConfig::make(VariantName::ResNCA2D).nca);
  CHECK(parse_variant_name("ResNCA2D") == VariantName::ResNCA2D);
  CHECK_THROWS_AS(parse_variant_name("bogus"), ConfigError);
  CHECK_THROWS_AS(VariantConfig::make(VariantName::AniNCA2D, 1.5), ConfigError);
}

TEST_CASE("NCA conditioning") {
  Rng rng(11);
  const Image cond = gaussian_image(4, 4, rng);
  const Image eps = gaussian_image(4, 4, rng);
  CHECK((apply_nca(cond, 0.0, eps, 0.5) == cond).all());
  CHECK((apply_nca(cond, 0.5, eps, 0.5) == cond + 0.5 * eps).all());
  CHECK_THROWS(apply_nca(cond, 0.6, eps, 0.5));
  CHECK_THROWS(apply_nca(cond, -0.1, eps, 0.5));

  const VariantConfig v = VariantConfig::make(VariantName::ResNCA2D);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double tau = sample_tau(v, rng);
    REQUIRE(tau >= 0.0);
    REQUIRE(tau <= 0.5);
    sum += tau;
  }
  CHECK(std::abs(sum / 10000 - 0.25) < 0.01);
}

TEST_CASE("loss of oracle and zero predictors") {
  const NoiseSchedule s = make_schedule(ScheduleKind::linear, 1000);
  const VariantConfig v = VariantConfig::make(VariantName::AniRes2D);
  Rng rng(5);
  data::SlicePair pair;
  pair.hr = gaussian_image(16, 16, rng);
  pair.up_lr = gaussian_image(16, 16, rng);
  const auto tgt = training_target(pair, v);
  OracleModel oracle(tgt.z0, s);
  for (int i = 0; i < 20; ++i) CHECK(loss_step(oracle, pair, s, v, rng) < 1e-20);

  ConstantModel zero(Image::Zero(16, 16));
  double sum = 0.0;
  const int n = 10000 / 256 + 1;
  for (int i = 0; i < n * 10; ++i) sum += loss_step(zero, pair, s, v, rng);
  CHECK(std::abs(sum / (n * 10) - 1.0) < 0.05);

  ConstantModel bad(Image::Constant(16, 16, std::nan("")));
  CHECK_THROWS_AS(loss_step(bad, pair, s, v, rng), DivergenceError);
}

TEST_CASE("ddim timesteps") {
  CHECK(ddim_timesteps(1000, 50).front() == 20);
  CHECK(ddim_timesteps(1000, 50).back() == 1000);
  CHECK(ddim_timesteps(1000, 50).size() == 50);
  CHECK(ddim_timesteps(10, 3) == std::vector<int>{3, 6, 10});
  const auto full = ddim_timesteps(7, 7);
  for (int i = 0; i < 7; ++i) CHECK(full[i] == i + 1);
  CHECK_THROWS(ddim_timesteps(10, 11));
  CHECK_THROWS(ddim_timesteps(10, 0));
}

TEST_CASE("DDIM with eta 1 on the full sequence matches the ancestral step") {
  const NoiseSchedule s = make_schedule(ScheduleKind::linear, 1000);
  Rng rng(9);
  for (int t = 1; t <= 1000; ++t) {
    const Image z = gaussian_image(3, 3, rng);
    const Image e = gaussian_image(3, 3, rng);
    const StepStats a = ddpm_step(z, e, t, s);
    const StepStats b = ddim_step(z, e, t, t - 1, 1.0, s);
    REQUIRE(((a.mean - b.mean).abs() <= 1e-10).all());
    REQUIRE(std::abs(a.variance - b.variance) <= 1e-10);
    REQUIRE(std::abs(a.variance - s.beta_tilde(t)) <= 1e-15);
  }
}

TEST_CASE("single-step DDPM inverts a known draw") {
  const NoiseSchedule s = make_schedule(ScheduleKind::linear, 1, 0.02, 0.02);
  Rng rng(21);
  const Image z0 = gaussian_image(6, 6, rng);
  OracleModel oracle(z0, s);
  const VariantConfig v = VariantConfig::make(VariantName::SR3);
  const Image out = sample_ddpm(oracle, Image::Zero(6, 6), s, v, rng);
  CHECK(((out - z0).abs() < 1e-5).all());
}

TEST_CASE("samplers are deterministic given the seed and preserve shape") {
  const NoiseSchedule s = make_schedule(ScheduleKind::linear, 100);
  WobbleModel model;
  Rng init(4);
  const Image cond = gaussian_image(5, 7, init);
  for (auto name : {VariantName::SR3, VariantName::ResNCA2D}) {
    VariantConfig v = VariantConfig::make(name, 0.5, true);
    Rng r1(77), r2(77);
    const Image a = sample_ddim(model, cond, s, 10, 0.0, v, r1);
    const Image b = sample_ddim(model, cond, s, 10, 0.0, v, r2);
    CHECK((a == b).all());
    CHECK(a.rows() == 5);
    CHECK(a.cols() == 7);
    Rng r3(77), r4(77);
    CHECK((sample_ddpm(model, cond, s, v, r3) == sample_ddpm(model, cond, s, v, r4)).all());
  }
}

TEST_CASE("NCA inference switch changes the output") {
  const NoiseSchedule s = make_schedule(ScheduleKind::linear, 100);
  WobbleModel model;
  Rng init(4);
  const Image cond = gaussian_image(6, 6, init);
  VariantConfig with = VariantConfig::make(VariantName::AniNCA2D, 0.5, true);
  VariantConfig without = VariantConfig::make(VariantName::AniNCA2D, 0.5, false);
  Rng r1(3), r2(3);
  const Image a = sample_ddim(model, cond, s, 10, 0.0, with, r1);
  const Image b = sample_ddim(model, cond, s, 10, 0.0, without, r2);
  CHECK(((a - b).abs() > 0).any());
}

TEST_CASE("sampler config validation") {
  SamplerConfig c;
  c.kind = SamplerKind::ddim;
  c.steps = 1001;
  CHECK_THROWS_AS(c.validate(1000), ConfigError);
  c.kind = SamplerKind::ddpm;
  c.steps = 100;
  CHECK_THROWS_AS(c.validate(1000), ConfigError);
  c.steps = 1000;
  CHECK_NOTHROW(c.validate(1000));
  c.kind = SamplerKind::ddim;
  c.eta = 1.5;
  CHECK_THROWS_AS(c.validate(1000), ConfigError);
}

TEST_CASE("x0 clipping") {
  const NoiseSchedule s = make_schedule(ScheduleKind::cosine, 1000);
  Rng rng(31);
  const Image z = gaussian_image(5, 5, rng);
  const Image e = gaussian_image(5, 5, rng);
  const int t = 400;
  const Image loose = clip_eps(z, e, t, 1e6, s);
  CHECK(((loose - e).abs() <= 1e-12).all());
  const Image tight = clip_eps(z, e, t, 0.1, s);
  const double ab = s.alpha_bar[t];
  const Image x0 = (z - std::sqrt(1.0 - ab) * tight) / std::sqrt(ab);
  CHECK((x0.abs() <= 0.1 + 1e-12).all());

  // A slightly wrong noise estimate at alpha_bar[T] ~ 1e-9 blows up unclipped.
  ConstantModel off(Image::Constant(6, 6, 0.01));
  const VariantConfig v = VariantConfig::make(VariantName::AniRes2D);
  Rng r1(5), r2(5);
  const Image wild = sample_ddim(off, Image::Zero(6, 6), s, 50, 0.0, v, r1);
  const Image tame = sample_ddim(off, Image::Zero(6, 6), s, 50, 0.0, v, r2, 2.0);
  CHECK(wild.abs().maxCoeff() > 10.0);
  CHECK(tame.abs().maxCoeff() <= 2.0 + 1e-12);

  SamplerConfig c;
  c.clip_x0 = -1.0;
  CHECK_THROWS_AS(c.validate(1000), ConfigError);
}
