#include "anisr/app/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <utility>

#include "anisr/app/checkpoint.hpp"
#include "anisr/core/error.hpp"
#include "anisr/data/manifest.hpp"
#include "anisr/data/nifti.hpp"
#include "anisr/data/slicing.hpp"
#include "anisr/diffusion/process.hpp"
#include "anisr/metrics/metrics.hpp"
#include "anisr/nn/unet_denoiser.hpp"

namespace anisr::app {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kIndexStream = 0x1d3a;
constexpr std::uint64_t kValidationStream = 0x7a11;

Image crop(const Image& img, Eigen::Index r0, Eigen::Index c0, Eigen::Index size) {
  return img.block(r0, c0, size, size);
}

}  // namespace

struct Trainer::Item {
  diffusion::TrainingDraw draw;
};

std::vector<data::SlicePair> slice_pairs_from_volume(const Volume& hr, const RunConfig& config,
                                                     const degradation::SliceProfile& profile) {
  hr.validate();
  if (hr.anisotropic_axis()) throw DataError("training volumes must be isotropic");
  const int axis = config.data.through_plane_axis;
  const AcquisitionSpec spec =
      AcquisitionSpec::from_geometry(config.data.thickness_mm, config.data.gap_mm, hr.spacing[0], axis);
  const int normal = hr.axis_of(config.data.plane);
  if (normal == axis) throw ConfigError("training plane does not contain the through-plane axis");
  const int aniso = data::in_slice_axis(normal, axis);

  std::vector<data::SlicePair> out;
  for (std::size_t i = 0; i < hr.voxels.dim(normal); ++i) {
    const Image s = data::slice_of(hr.voxels, normal, i);
    const double foreground = static_cast<double>((s != 0.0).count()) / static_cast<double>(s.size());
    if (foreground < config.data.min_foreground || foreground == 0.0) continue;
    try {
      out.push_back(data::make_slice_pair(s, profile, spec.k, aniso, config.data.plane));
    } catch (const DataError&) {
      // constant LR slice: nothing to anchor the intensity frame on
    }
  }
  return out;
}

TrainingData load_training_data(const RunConfig& config) {
  if (config.data.manifest.empty()) throw ConfigError("data.manifest is not set");
  const auto entries = data::read_manifest(config.data.manifest);
  const auto train_entries = data::with_role(entries, data::Role::train);
  if (train_entries.empty()) throw DataError("manifest lists no training volumes");

  TrainingData td;
  std::optional<double> spacing;
  auto add = [&](const data::ManifestEntry& e, std::vector<data::SlicePair>& into) {
    const Volume v = data::load_volume(e.path);
    if (!spacing) {
      spacing = v.spacing[0];
      td.profile = degradation::design_slice_profile(config.data.thickness_mm, *spacing, config.data.profile);
      td.k = AcquisitionSpec::from_geometry(config.data.thickness_mm, config.data.gap_mm, *spacing,
                                            config.data.through_plane_axis)
                 .k;
    } else if (std::abs(v.spacing[0] - *spacing) > 1e-6 * *spacing) {
      throw DataError("'" + e.path.string() + "' has a different voxel spacing from the other training volumes");
    }
    auto pairs = slice_pairs_from_volume(v, config, td.profile);
    into.insert(into.end(), std::make_move_iterator(pairs.begin()), std::make_move_iterator(pairs.end()));
  };
  for (const auto& e : train_entries) add(e, td.train);
  for (const auto& e : data::with_role(entries, data::Role::val)) add(e, td.val);
  if (td.train.empty()) throw DataError("training volumes yield no usable slices");
  return td;
}

Trainer::Trainer(RunConfig config, TrainingData data)
    : config_(std::move(config)), data_(std::move(data)), schedule_(diffusion::make_schedule(config_.schedule)) {
  config_.validate();
  if (data_.train.empty()) throw DataError("no training slices");
  net_ = std::make_unique<nn::UNet<float>>(config_.net, derive_seed({config_.seed, 0x6e6574}));
  ema_ = std::make_unique<nn::UNet<float>>(config_.net, 0);
  nn::copy_parameters(*net_, *ema_);
  nn::AdamConfig ac;
  ac.learning_rate = config_.train.learning_rate;
  ac.clip_norm = config_.train.clip_norm;
  adam_ = nn::Adam<float>(ac, net_->parameters());

  if (config_.train.crop == 0) {
    const int m = config_.pad_multiple();
    auto up = [m](Eigen::Index n) { return (n + m - 1) / m * m; };
    for (std::size_t i = 0; i < data_.train.size(); ++i) {
      const auto& p = data_.train[i];
      buckets_[{up(p.hr.rows()), up(p.hr.cols())}].push_back(i);
    }
  } else {
    for (const auto& p : data_.train) {
      if (p.hr.rows() < 2 || p.hr.cols() < 2) throw DataError("training slice too small");
    }
  }
}

Trainer::~Trainer() = default;

bool Trainer::resume() {
  if (!has_checkpoint(config_.output_dir)) return false;
  const TrainState s = restore_training(config_.output_dir, *net_, *ema_, adam_);
  step_ = s.step;
  last_loss_ = s.last_loss;
  return true;
}

std::vector<std::size_t> Trainer::draw_batch_indices(std::int64_t step) const {
  Rng rng(derive_seed({config_.seed, static_cast<std::uint64_t>(step), kIndexStream}));
  const auto batch = static_cast<std::size_t>(config_.train.batch);
  std::vector<std::size_t> idx;
  std::uniform_int_distribution<std::size_t> any(0, data_.train.size() - 1);
  idx.push_back(any(rng));
  if (config_.train.crop > 0) {
    while (idx.size() < batch) idx.push_back(any(rng));
    return idx;
  }
  const int m = config_.pad_multiple();
  const auto& first = data_.train[idx[0]].hr;
  const auto& bucket = buckets_.at({(first.rows() + m - 1) / m * m, (first.cols() + m - 1) / m * m});
  std::uniform_int_distribution<std::size_t> within(0, bucket.size() - 1);
  while (idx.size() < batch) idx.push_back(bucket[within(rng)]);
  return idx;
}

Trainer::Item Trainer::draw_item(std::int64_t step, int b, std::size_t index) const {
  Rng rng(derive_seed({config_.seed, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(b)}));
  const data::SlicePair aug = data::augment(data_.train[index], config_.data.augmentation, data_.profile, rng);
  const int crop_size = config_.train.crop;
  const data::SlicePair padded = data::pad_pair(aug, crop_size > 0 ? crop_size : config_.pad_multiple());
  diffusion::TrainingTarget target;
  if (crop_size > 0) {
    std::uniform_int_distribution<Eigen::Index> rows(0, padded.hr.rows() - crop_size);
    std::uniform_int_distribution<Eigen::Index> cols(0, padded.hr.cols() - crop_size);
    const Eigen::Index r0 = rows(rng), c0 = cols(rng);
    target = diffusion::training_target(crop(padded.hr, r0, c0, crop_size), crop(padded.up_lr, r0, c0, crop_size),
                                        config_.variant);
  } else {
    target = diffusion::training_target(padded, config_.variant);
  }
  return Item{diffusion::draw_training_sample(target, schedule_, config_.variant, rng)};
}

double Trainer::step() {
  const auto indices = draw_batch_indices(step_);
  std::vector<Item> items;
  items.reserve(indices.size());
  for (std::size_t b = 0; b < indices.size(); ++b) items.push_back(draw_item(step_, static_cast<int>(b), indices[b]));

  const int n = static_cast<int>(items.size());
  const auto h = static_cast<int>(items[0].draw.z_t.rows()), w = static_cast<int>(items[0].draw.z_t.cols());
  nn::Tensor<float> x(n, 2, h, w);
  std::vector<const Image*> zs, cs;
  std::vector<double> ts, taus;
  for (const Item& it : items) {
    zs.push_back(&it.draw.z_t);
    cs.push_back(&it.draw.cond_in);
    ts.push_back(it.draw.t);
    if (it.draw.tau) taus.push_back(*it.draw.tau);
  }
  nn::pack_channel<float>(zs, 0, x);
  nn::pack_channel<float>(cs, 1, x);
  std::optional<std::span<const double>> tau;
  if (config_.variant.nca) tau = std::span<const double>(taus);

  net_->zero_grad();
  const nn::Tensor<float> y = net_->forward_train(x, ts, tau);
  nn::Tensor<float> dy(n, 1, h, w);
  const double count = static_cast<double>(dy.size());
  double loss = 0.0;
  for (int b = 0; b < n; ++b) {
    const float* pred = y.plane(b, 0);
    float* grad = dy.plane(b, 0);
    const double* eps = items[static_cast<std::size_t>(b)].draw.eps.data();
    for (std::size_t i = 0; i < y.plane_size(); ++i) {
      const double d = static_cast<double>(pred[i]) - eps[i];
      loss += d * d;
      grad[i] = static_cast<float>(2.0 * d / count);
    }
  }
  loss /= count;
  if (!std::isfinite(loss)) {
    throw DivergenceError("non-finite training loss at step " + std::to_string(step_ + 1));
  }
  net_->backward(dy);
  adam_.step(net_->parameters());
  nn::ema_update<float>(std::as_const(*net_).parameters(), ema_->parameters(), config_.train.ema_decay);
  ++step_;
  last_loss_ = loss;
  return loss;
}

std::shared_ptr<const nn::UNet<float>> Trainer::ema_snapshot() const {
  return std::shared_ptr<const nn::UNet<float>>(std::shared_ptr<void>(), ema_.get());
}

ValidationRecord Trainer::validate() {
  ValidationRecord rec;
  rec.step = step_;
  const std::size_t count = std::min(data_.val.size(), static_cast<std::size_t>(config_.train.validation_slices));
  if (count == 0) return rec;
  nn::UNetDenoiser<float> model(ema_snapshot());
  std::vector<data::SlicePair> padded;
  std::vector<Image> conds;
  std::vector<Rng> rngs;
  for (std::size_t i = 0; i < count; ++i) {
    padded.push_back(data::pad_pair(data_.val[i], config_.pad_multiple()));
    conds.push_back(padded.back().up_lr);
    rngs.emplace_back(derive_seed({config_.seed, kValidationStream, i}));
  }
  diffusion::SamplerConfig sc;
  sc.kind = diffusion::SamplerKind::ddim;
  sc.steps = config_.train.validation_sampler_steps;
  sc.eta = 0.0;
  sc.clip_x0 = config_.sampler.clip_x0;
  const auto z0 = diffusion::sample(model, conds, schedule_, sc, config_.variant, rngs);
  for (std::size_t i = 0; i < count; ++i) {
    const Image sr = data::unpad(diffusion::reconstruct_output(z0[i], conds[i], config_.variant), padded[i].pad);
    const auto& ref = data_.val[i];
    rec.psnr_db += metrics::psnr(ref.hr, sr);
    rec.ssim += metrics::ssim(ref.hr, sr);
    rec.baseline_psnr_db += metrics::psnr(ref.hr, ref.up_lr);
    rec.baseline_ssim += metrics::ssim(ref.hr, ref.up_lr);
  }
  const double c = static_cast<double>(count);
  rec.psnr_db /= c;
  rec.ssim /= c;
  rec.baseline_psnr_db /= c;
  rec.baseline_ssim /= c;
  return rec;
}

void Trainer::save() const {
  save_checkpoint(config_.output_dir, config_, TrainState{step_, last_loss_, {}, {}}, *net_, *ema_, adam_);
}

TrainResult Trainer::run(std::int64_t until_step, std::ostream* log) {
  const std::int64_t target = until_step < 0 ? config_.train.steps : until_step;
  const TrainConfig& tc = config_.train;
  const fs::path dir = config_.output_dir;
  fs::create_directories(dir);
  TrainResult result;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  auto record_validation = [&] {
    const ValidationRecord v = validate();
    result.validation.push_back(v);
    const fs::path csv = dir / "validation.csv";
    const bool fresh = !fs::exists(csv);
    std::ofstream out(csv, std::ios::app);
    if (fresh) out << "step,psnr_db,ssim,baseline_psnr_db,baseline_ssim\n";
    out << v.step << ',' << v.psnr_db << ',' << v.ssim << ',' << v.baseline_psnr_db << ',' << v.baseline_ssim << '\n';
    if (log) {
      *log << "validate step " << v.step << " psnr " << v.psnr_db << " ssim " << v.ssim << " (cubic "
           << v.baseline_psnr_db << " / " << v.baseline_ssim << ")\n";
    }
  };

  while (step_ < target) {
    const double loss = step();
    if (log && tc.log_every > 0 && step_ % tc.log_every == 0) {
      *log << "step " << step_ << " loss " << loss << " elapsed " << elapsed() << "s\n" << std::flush;
    }
    const bool last = step_ == target;
    if (!last && tc.checkpoint_every > 0 && step_ % tc.checkpoint_every == 0) save();
    if (!last && tc.validate_every > 0 && step_ % tc.validate_every == 0 && !data_.val.empty()) record_validation();
  }
  save();
  if (tc.validate_every > 0 && !data_.val.empty() && step_ > 0) record_validation();
  result.step = step_;
  result.last_loss = last_loss_;
  return result;
}

TrainResult train(const RunConfig& config, std::ostream* log) {
  config.validate();
  TrainingData data = load_training_data(config);
  DirectoryLock lock(config.output_dir);
  Trainer trainer(config, std::move(data));
  if (trainer.resume() && log) *log << "resumed from step " << trainer.current_step() << "\n";
  return trainer.run(-1, log);
}

}  // namespace anisr::app
