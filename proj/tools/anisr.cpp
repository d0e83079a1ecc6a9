#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "anisr/app/checkpoint.hpp"
#include "anisr/app/config.hpp"
#include "anisr/app/evaluate.hpp"
#include "anisr/app/inference.hpp"
#include "anisr/app/trainer.hpp"
#include "anisr/core/error.hpp"
#include "anisr/data/nifti.hpp"
#include "anisr/data/phantom.hpp"
#include "anisr/data/slicing.hpp"
#include "anisr/degradation/acquisition.hpp"
#include "anisr/metrics/spectrum.hpp"
#include "anisr/volume/volume_sr.hpp"

namespace fs = std::filesystem;
using namespace anisr;

namespace {

struct SamplerArgs {
  std::string kind;
  int steps = 0;
  double eta = -1.0;
  double clip_x0 = -1.0;
  std::uint64_t seed = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--sampler", kind, "ddim or ddpm (default: checkpoint setting)");
    cmd->add_option("--steps", steps, "sampler steps (default: checkpoint setting)");
    cmd->add_option("--eta", eta, "DDIM eta in [0, 1]");
    cmd->add_option("--clip-x0", clip_x0, "clamp x0 estimates to +-value; 0 disables (default: checkpoint setting)");
    cmd->add_option("--seed", seed, "sampling seed")->capture_default_str();
  }

  diffusion::SamplerConfig resolve(const app::RunConfig& c) const {
    diffusion::SamplerConfig s = c.sampler;
    if (!kind.empty()) s.kind = diffusion::parse_sampler_kind(kind);
    if (steps > 0) s.steps = steps;
    if (s.kind == diffusion::SamplerKind::ddpm && steps == 0) s.steps = c.schedule.steps;
    if (eta >= 0.0) s.eta = eta;
    if (clip_x0 >= 0.0) s.clip_x0 = clip_x0;
    s.seed = seed;
    s.validate(c.schedule.steps);
    return s;
  }
};

fs::path sibling(const fs::path& out, const std::string& suffix) {
  std::string stem = out.filename().string();
  for (const char* ext : {".nii.gz", ".nii"}) {
    const std::string e = ext;
    if (stem.size() > e.size() && stem.compare(stem.size() - e.size(), e.size(), e) == 0) {
      stem.resize(stem.size() - e.size());
      break;
    }
  }
  return out.parent_path() / (stem + suffix);
}

void write_spectrum(const Volume& v, int axis, std::size_t index, const fs::path& path) {
  metrics::write_pgm(metrics::fourier_spectrum(data::slice_of(v.voxels, axis, index)), path.string());
}

int run_simulate(const fs::path& in, const fs::path& out, double t, double g, int axis, const std::string& method) {
  const Volume hr = data::load_volume(in);
  const AcquisitionSpec spec = AcquisitionSpec::from_geometry(t, g, hr.spacing[static_cast<std::size_t>(axis)], axis);
  const auto profile =
      degradation::design_slice_profile(t, hr.spacing[static_cast<std::size_t>(axis)], degradation::parse_profile_method(method));
  const Volume lr = degradation::degrade_volume(hr, profile, spec);
  data::save_volume(lr, out);
  const auto& d = lr.voxels.dims();
  std::cout << "wrote " << out.string() << " (" << d[0] << " x " << d[1] << " x " << d[2] << ", k = " << spec.k
            << ", stopband gain " << profile.stopband_gain(spec.k) << ")\n";
  return 0;
}

int run_make_phantom(const fs::path& dir, int count, int size, std::uint64_t seed, double blur) {
  if (count < 1 || size < 8) throw ConfigError("need count >= 1 and size >= 8");
  fs::create_directories(dir);
  data::PhantomConfig pc;
  pc.blur_sigma = blur;
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw ConfigError("cannot write '" + (dir / "manifest.txt").string() + "'");
  manifest << "# path role contrast\n";
  const auto n = static_cast<std::size_t>(size);
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(i)}));
    const Volume v = data::phantom_volume({n, n, n}, pc, rng);
    char name[32];
    std::snprintf(name, sizeof(name), "phantom_%03d.nii.gz", i);
    data::save_volume(v, dir / name);
    const char* role = count >= 3 && i == count - 1 ? "test" : count >= 3 && i == count - 2 ? "val" : "train";
    manifest << name << ' ' << role << " T1w\n";
  }
  std::cout << "wrote " << count << " phantom volumes and " << (dir / "manifest.txt").string() << "\n";
  return 0;
}

int run_train(const std::string& config_path, const std::vector<std::string>& sets, bool tiny) {
  app::RunConfig c = tiny ? app::RunConfig::tiny() : app::RunConfig{};
  if (!config_path.empty()) {
    c = app::load_run_config(config_path);
  }
  c = app::apply_overrides(c, sets);
  const app::TrainResult r = app::train(c, &std::cout);
  std::cout << "finished at step " << r.step << ", last loss " << r.last_loss << ", checkpoint "
            << c.output_dir.string() << "\n";
  return 0;
}

int run_sr2d(const fs::path& in, const fs::path& ckpt, const fs::path& out, long slice, const SamplerArgs& sa) {
  const Volume lr = data::load_volume(in);
  const app::LoadedModel loaded = app::load_model(ckpt);
  const app::RunConfig& c = loaded.config;
  const int axis = c.data.through_plane_axis;
  if (lr.anisotropic_axis() != axis) throw DataError("LR volume is not anisotropic along the model's through-plane axis");
  const volume::OrientationModel model =
      app::orientation_model(loaded, lr.spacing[static_cast<std::size_t>((axis + 1) % 3)]);
  const diffusion::SamplerConfig sc = sa.resolve(c);
  const int normal = lr.axis_of(model.plane);
  const int aniso = data::in_slice_axis(normal, axis);
  const std::size_t n = lr.voxels.dim(normal);
  std::size_t begin = 0, end = n;
  if (slice >= 0) {
    if (static_cast<std::size_t>(slice) >= n) throw ConfigError("slice index out of range");
    begin = static_cast<std::size_t>(slice);
    end = begin + 1;
  }
  const data::NormalizationRecord norm = data::NormalizationRecord::from_lr(
      Eigen::Map<const Image>(lr.voxels.values().data(), 1, static_cast<Eigen::Index>(lr.voxels.size())));
  std::vector<Image> slices;
  std::vector<Rng> rngs;
  for (std::size_t i = begin; i < end; ++i) {
    slices.push_back(data::slice_of(lr.voxels, normal, i));
    rngs.emplace_back(derive_seed({sc.seed, static_cast<std::uint64_t>(model.plane), i}));
  }
  const std::vector<data::NormalizationRecord> norms(slices.size(), norm);
  const Eigen::Index extent = static_cast<Eigen::Index>(lr.voxels.dim(axis)) * model.k;
  const auto sr = volume::super_resolve_slices(slices, norms, aniso, extent, model, sc, rngs);
  Volume result = volume::upsampled_geometry(lr, model.k, axis);
  auto dims = result.voxels.dims();
  dims[static_cast<std::size_t>(normal)] = sr.size();
  result.voxels = data::restack(sr, normal);
  data::save_volume(result, out);
  write_spectrum(result, normal, sr.size() / 2, sibling(out, "_spectrum.pgm"));
  std::cout << "wrote " << sr.size() << " " << to_string(model.plane) << " slice(s) to " << out.string() << "\n";
  return 0;
}

int run_sr3d(const fs::path& in, const fs::path& ckpt_a, const fs::path& ckpt_b, const fs::path& out, int batch,
             const SamplerArgs& sa) {
  const Volume lr = data::load_volume(in);
  const app::LoadedModel a = app::load_model(ckpt_a);
  const app::LoadedModel b = app::load_model(ckpt_b);
  const int axis = a.config.data.through_plane_axis;
  if (b.config.data.through_plane_axis != axis) throw ConfigError("checkpoints disagree on the through-plane axis");
  const double in_plane = lr.spacing[static_cast<std::size_t>((axis + 1) % 3)];
  volume::OrientationModelSet set;
  set.a = app::orientation_model(a, in_plane, batch);
  set.b = app::orientation_model(b, in_plane, batch);
  set.k = set.a.k;
  set.through_plane_axis = axis;
  const Volume sr = volume::super_resolve_volume(lr, set, sa.resolve(a.config));
  data::save_volume(sr, out);
  const int normal = sr.axis_of(set.a.plane);
  write_spectrum(sr, normal, sr.voxels.dim(normal) / 2, sibling(out, "_spectrum.pgm"));
  const auto& d = sr.voxels.dims();
  std::cout << "wrote " << out.string() << " (" << d[0] << " x " << d[1] << " x " << d[2] << ")\n";
  return 0;
}

int run_evaluate(const std::vector<std::string>& sr, const std::vector<std::string>& hr,
                 const std::vector<std::string>& lr, const app::EvaluateOptions& opt, const std::string& out) {
  auto paths = [](const std::vector<std::string>& v) { return std::vector<fs::path>(v.begin(), v.end()); };
  const metrics::MetricsReport report = app::evaluate(paths(sr), paths(hr), opt, paths(lr));
  if (!out.empty()) metrics::write_csv(report, out);
  metrics::write_summary(report, std::cout);
  return 0;
}

int run_spectra(const fs::path& in, int axis, long slice, const fs::path& out) {
  const Volume v = data::load_volume(in);
  if (axis < 0 || axis > 2) throw ConfigError("axis must be 0, 1 or 2");
  const std::size_t n = v.voxels.dim(axis);
  const std::size_t index = slice < 0 ? n / 2 : static_cast<std::size_t>(slice);
  if (index >= n) throw ConfigError("slice index out of range");
  write_spectrum(v, axis, index, out);
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic MRI super-resolution with conditional diffusion models"};
  app.require_subcommand(1);

  fs::path in, out, ckpt, ckpt_a, ckpt_b;
  double thickness = 3.0, gap = 1.0, blur = 1.0;
  int axis = 2, count = 6, size = 64, batch = 16;
  long slice = -1;
  std::string profile = "slr", config_path, csv;
  std::vector<std::string> sets, sr_paths, hr_paths, lr_paths;
  std::uint64_t seed = 0;
  bool tiny = false;
  SamplerArgs sampler2d, sampler3d;
  app::EvaluateOptions eval_opt;

  auto* sim = app.add_subcommand("simulate-lr", "Simulate an anisotropic 2D multi-slice acquisition");
  sim->add_option("--in", in, "isotropic HR NIfTI")->required();
  sim->add_option("--out", out, "LR NIfTI")->required();
  sim->add_option("--thickness", thickness, "slice thickness t (mm)")->capture_default_str();
  sim->add_option("--gap", gap, "slice gap g (mm)")->capture_default_str();
  sim->add_option("--axis", axis, "through-plane voxel axis")->capture_default_str();
  sim->add_option("--profile", profile, "slr, gaussian or windowed_sinc")->capture_default_str();

  auto* phantom = app.add_subcommand("make-phantom", "Write synthetic isotropic phantom volumes and a manifest");
  phantom->add_option("--out", out, "output directory")->required();
  phantom->add_option("--count", count, "number of volumes")->capture_default_str();
  phantom->add_option("--size", size, "cube side in voxels")->capture_default_str();
  phantom->add_option("--blur", blur, "Gaussian smoothing sigma (voxels)")->capture_default_str();
  phantom->add_option("--seed", seed, "generator seed")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train a denoiser; resumes when the output directory holds a checkpoint");
  train->add_option("--config", config_path, "JSON run configuration");
  train->add_option("--set", sets, "override, e.g. --set train.steps=500 (repeatable)");
  train->add_flag("--tiny", tiny, "start from the small test preset");

  auto* sr2 = app.add_subcommand("super-resolve-2d", "Super-resolve the slices of the checkpoint's orientation");
  sr2->add_option("--in", in, "LR NIfTI")->required();
  sr2->add_option("--ckpt", ckpt, "checkpoint directory")->required();
  sr2->add_option("--out", out, "SR NIfTI")->required();
  sr2->add_option("--slice", slice, "only this slice index");
  sampler2d.add(sr2);

  auto* sr3 = app.add_subcommand("super-resolve-3d", "Two-orientation volume super-resolution");
  sr3->add_option("--in", in, "LR NIfTI")->required();
  sr3->add_option("--ckpt-a", ckpt_a, "first orientation checkpoint")->required();
  sr3->add_option("--ckpt-b", ckpt_b, "second orientation checkpoint")->required();
  sr3->add_option("--out", out, "SR NIfTI")->required();
  sr3->add_option("--batch", batch, "slices per network call")->capture_default_str();
  sampler3d.add(sr3);

  auto* eval = app.add_subcommand("evaluate", "Per-slice PSNR/SSIM of SR volumes against HR references");
  eval->add_option("--sr", sr_paths, "SR volumes")->required();
  eval->add_option("--hr", hr_paths, "HR volumes, aligned with --sr")->required();
  eval->add_option("--lr", lr_paths, "LR volumes anchoring the intensity frame");
  eval->add_option("--method", eval_opt.method, "method label")->capture_default_str();
  eval->add_option("--axes", eval_opt.slice_axes, "voxel axes whose slices are scored");
  eval->add_option("--min-foreground", eval_opt.min_foreground, "nonzero fraction required per slice")
      ->capture_default_str();
  eval->add_option("--out", csv, "CSV output");

  auto* spectra = app.add_subcommand("spectra", "Write the log-magnitude Fourier spectrum of one slice");
  spectra->add_option("--in", in, "NIfTI volume")->required();
  spectra->add_option("--axis", axis, "slice normal axis")->capture_default_str();
  spectra->add_option("--slice", slice, "slice index (default: middle)");
  spectra->add_option("--out", out, "PGM output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sim) return run_simulate(in, out, thickness, gap, axis, profile);
    if (*phantom) return run_make_phantom(out, count, size, seed, blur);
    if (*train) return run_train(config_path, sets, tiny);
    if (*sr2) return run_sr2d(in, ckpt, out, slice, sampler2d);
    if (*sr3) return run_sr3d(in, ckpt_a, ckpt_b, out, batch, sampler3d);
    if (*eval) return run_evaluate(sr_paths, hr_paths, lr_paths, eval_opt, csv);
    if (*spectra) return run_spectra(in, axis, slice, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
