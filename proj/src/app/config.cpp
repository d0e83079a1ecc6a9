#include "anisr/app/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "anisr/core/error.hpp"

namespace anisr::app {

using nlohmann::json;

namespace {

/// Reads the keys of one JSON object, rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
  }
  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key)) throw ConfigError("unknown config key '" + qualified(key) + "'");
  }

  template <class T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + qualified(key) + "': " + e.what());
    }
  }

  template <class T, class Parse>
  void read_enum(const std::string& key, T& out, Parse parse) {
    std::string s;
    bool present = j_.contains(key);
    read(key, s);
    if (present) out = parse(s);
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

json variant_json(const diffusion::VariantConfig& v) {
  json j{{"name", diffusion::to_string(v.name)}, {"tau_max", v.tau_max}, {"nca_at_inference", v.nca_at_inference}};
  j["inference_tau"] = v.inference_tau ? json(*v.inference_tau) : json(nullptr);
  return j;
}

void read_variant(const json& j, diffusion::VariantConfig& v) {
  Section s(j, "variant");
  diffusion::VariantName name = v.name;
  double tau_max = v.tau_max;
  bool at_inference = v.nca_at_inference;
  s.read_enum("name", name, [](const std::string& x) { return diffusion::parse_variant_name(x); });
  s.read("tau_max", tau_max);
  s.read("nca_at_inference", at_inference);
  std::optional<double> tau = v.inference_tau;
  if (const json* t = s.child("inference_tau")) {
    if (t->is_null()) {
      tau.reset();
    } else if (t->is_number()) {
      tau = t->get<double>();
    } else {
      throw ConfigError("config key 'variant.inference_tau' must be a number or null");
    }
  }
  s.finish();
  v = diffusion::VariantConfig::make(name, tau_max, at_inference);
  v.inference_tau = tau;
}

}  // namespace

RunConfig RunConfig::tiny() {
  RunConfig c;
  c.net = nn::NetConfig::tiny();
  c.train.steps = 200;
  c.train.batch = 4;
  c.train.crop = 32;
  c.train.learning_rate = 5e-4;
  c.train.ema_decay = 0.995;
  c.train.validate_every = 100;
  c.train.checkpoint_every = 100;
  c.train.validation_slices = 4;
  c.train.log_every = 50;
  c.sampler.steps = 50;
  return c;
}

void RunConfig::validate() const {
  variant.validate();
  const auto sched = diffusion::make_schedule(schedule);
  sampler.validate(sched.T);
  net.validate();
  if (net.in_channels != 2 || net.out_channels != 1) throw ConfigError("denoiser must map 2 channels to 1");
  AcquisitionSpec::from_geometry(data.thickness_mm, data.gap_mm, 1.0, data.through_plane_axis);
  if (data.pad_multiple < 0) throw ConfigError("pad_multiple must be non-negative");
  if (pad_multiple() % net.divisor() != 0) throw ConfigError("pad_multiple must be a multiple of 2^depth");
  if (data.plane == Plane::sagittal && data.through_plane_axis == 0) {
    throw ConfigError("training plane must contain the through-plane axis");
  }
  if (data.plane == Plane::coronal && data.through_plane_axis == 1) {
    throw ConfigError("training plane must contain the through-plane axis");
  }
  if (data.plane == Plane::axial && data.through_plane_axis == 2) {
    throw ConfigError("training plane must contain the through-plane axis");
  }
  if (!(data.min_foreground >= 0.0 && data.min_foreground < 1.0)) throw ConfigError("min_foreground must lie in [0, 1)");
  const TrainConfig& t = train;
  if (t.steps < 0) throw ConfigError("train.steps must be non-negative");
  if (t.batch < 1) throw ConfigError("train.batch must be positive");
  if (t.crop < 0 || t.crop % net.divisor() != 0) throw ConfigError("train.crop must be a non-negative multiple of 2^depth");
  if (!(t.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (!(t.ema_decay >= 0.0 && t.ema_decay < 1.0)) throw ConfigError("train.ema_decay must lie in [0, 1)");
  if (t.validate_every < 0 || t.checkpoint_every < 0 || t.log_every < 0) {
    throw ConfigError("train cadences must be non-negative");
  }
  if (t.validation_slices < 0) throw ConfigError("train.validation_slices must be non-negative");
  if (t.validation_sampler_steps < 1 || t.validation_sampler_steps > sched.T) {
    throw ConfigError("train.validation_sampler_steps must lie in [1, T]");
  }
}

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  j["variant"] = variant_json(c.variant);
  j["schedule"] = {{"kind", diffusion::to_string(c.schedule.kind)},
                   {"steps", c.schedule.steps},
                   {"beta_start", c.schedule.beta_start},
                   {"beta_end", c.schedule.beta_end},
                   {"cosine_offset", c.schedule.cosine_offset}};
  j["sampler"] = {{"kind", diffusion::to_string(c.sampler.kind)},
                  {"steps", c.sampler.steps},
                  {"eta", c.sampler.eta},
                  {"seed", c.sampler.seed},
                  {"clip_x0", c.sampler.clip_x0}};
  const nn::NetConfig& n = c.net;
  j["net"] = {{"base_channels", n.base_channels},
              {"channel_multipliers", n.channel_multipliers},
              {"depth", n.depth},
              {"attention_levels", n.attention_levels},
              {"res_blocks", n.res_blocks},
              {"embedding_dim", n.embedding_dim},
              {"norm_groups", n.norm_groups},
              {"in_channels", n.in_channels},
              {"out_channels", n.out_channels},
              {"tau_embedding_scale", n.tau_embedding_scale},
              {"zero_init_branches", n.zero_init_branches}};
  const DataConfig& d = c.data;
  j["data"] = {{"manifest", d.manifest.string()},
               {"thickness_mm", d.thickness_mm},
               {"gap_mm", d.gap_mm},
               {"through_plane_axis", d.through_plane_axis},
               {"profile", std::string(degradation::to_string(d.profile))},
               {"plane", std::string(to_string(d.plane))},
               {"augmentation", std::string(data::to_string(d.augmentation))},
               {"pad_multiple", d.pad_multiple},
               {"min_foreground", d.min_foreground}};
  const TrainConfig& t = c.train;
  j["train"] = {{"steps", t.steps},
                {"batch", t.batch},
                {"crop", t.crop},
                {"learning_rate", t.learning_rate},
                {"clip_norm", t.clip_norm},
                {"ema_decay", t.ema_decay},
                {"validate_every", t.validate_every},
                {"checkpoint_every", t.checkpoint_every},
                {"validation_slices", t.validation_slices},
                {"validation_sampler_steps", t.validation_sampler_steps},
                {"log_every", t.log_every}};
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "");
  root.read("seed", c.seed);
  std::string out = c.output_dir.string();
  root.read("output_dir", out);
  c.output_dir = out;
  if (const json* v = root.child("variant")) read_variant(*v, c.variant);
  if (const json* v = root.child("schedule")) {
    Section s(*v, "schedule");
    s.read_enum("kind", c.schedule.kind, [](const std::string& x) { return diffusion::parse_schedule_kind(x); });
    s.read("steps", c.schedule.steps);
    s.read("beta_start", c.schedule.beta_start);
    s.read("beta_end", c.schedule.beta_end);
    s.read("cosine_offset", c.schedule.cosine_offset);
    s.finish();
  }
  if (const json* v = root.child("sampler")) {
    Section s(*v, "sampler");
    s.read_enum("kind", c.sampler.kind, [](const std::string& x) { return diffusion::parse_sampler_kind(x); });
    s.read("steps", c.sampler.steps);
    s.read("eta", c.sampler.eta);
    s.read("seed", c.sampler.seed);
    s.read("clip_x0", c.sampler.clip_x0);
    s.finish();
  }
  if (const json* v = root.child("net")) {
    Section s(*v, "net");
    nn::NetConfig& n = c.net;
    s.read("base_channels", n.base_channels);
    s.read("channel_multipliers", n.channel_multipliers);
    s.read("depth", n.depth);
    s.read("attention_levels", n.attention_levels);
    s.read("res_blocks", n.res_blocks);
    s.read("embedding_dim", n.embedding_dim);
    s.read("norm_groups", n.norm_groups);
    s.read("in_channels", n.in_channels);
    s.read("out_channels", n.out_channels);
    s.read("tau_embedding_scale", n.tau_embedding_scale);
    s.read("zero_init_branches", n.zero_init_branches);
    s.finish();
  }
  if (const json* v = root.child("data")) {
    Section s(*v, "data");
    DataConfig& d = c.data;
    std::string manifest = d.manifest.string();
    s.read("manifest", manifest);
    d.manifest = manifest;
    s.read("thickness_mm", d.thickness_mm);
    s.read("gap_mm", d.gap_mm);
    s.read("through_plane_axis", d.through_plane_axis);
    s.read_enum("profile", d.profile, [](const std::string& x) { return degradation::parse_profile_method(x); });
    s.read_enum("plane", d.plane, [](const std::string& x) { return parse_plane(x); });
    s.read_enum("augmentation", d.augmentation, [](const std::string& x) { return data::parse_augment_policy(x); });
    s.read("pad_multiple", d.pad_multiple);
    s.read("min_foreground", d.min_foreground);
    s.finish();
  }
  if (const json* v = root.child("train")) {
    Section s(*v, "train");
    TrainConfig& t = c.train;
    s.read("steps", t.steps);
    s.read("batch", t.batch);
    s.read("crop", t.crop);
    s.read("learning_rate", t.learning_rate);
    s.read("clip_norm", t.clip_norm);
    s.read("ema_decay", t.ema_decay);
    s.read("validate_every", t.validate_every);
    s.read("checkpoint_every", t.checkpoint_every);
    s.read("validation_slices", t.validation_slices);
    s.read("validation_sampler_steps", t.validation_sampler_steps);
    s.read("log_every", t.log_every);
    s.finish();
  }
  root.finish();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const RunConfig& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config '" + path.string() + "'");
  out << to_json(c).dump(2) << '\n';
}

RunConfig apply_overrides(const RunConfig& c, const std::vector<std::string>& overrides) {
  json j = to_json(c);
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not of the form key=value");
    const std::string key = o.substr(0, eq), text = o.substr(eq + 1);
    std::string pointer;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
      pointer += "/" + part;
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    const json::json_pointer ptr(pointer);
    if (!j.contains(ptr)) throw ConfigError("unknown config key '" + key + "'");
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded() || (j.at(ptr).is_string() && !value.is_string())) value = text;
    j[ptr] = value;
  }
  return run_config_from_json(j);
}

std::filesystem::path scratch_dir() {
  if (const char* env = std::getenv("ANISR_SCRATCH"); env && *env) return env;
  return std::filesystem::temp_directory_path() / "anisr";
}

}  // namespace anisr::app
