#include "anisr/app/checkpoint.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "anisr/core/error.hpp"

namespace anisr::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kParamMagic[8] = {'A', 'N', 'S', 'R', 'P', 'R', 'M', '1'};
constexpr char kOptimMagic[8] = {'A', 'N', 'S', 'R', 'O', 'P', 'T', '1'};

template <class T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  Reader(std::string bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}
  template <class T>
  T get() {
    T v;
    read(&v, sizeof(T));
    return v;
  }
  void read(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw DataError("checkpoint file '" + name_ + "' is truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string serialize_params(const std::vector<const nn::Param<float>*>& params) {
  std::string out(kParamMagic, sizeof(kParamMagic));
  put(out, static_cast<std::uint64_t>(params.size()));
  for (const auto* p : params) {
    put(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put(out, static_cast<std::uint64_t>(p->value.size()));
    out.append(reinterpret_cast<const char*>(p->value.data()), p->value.size() * sizeof(float));
  }
  return out;
}

void deserialize_params(const fs::path& path, const nn::ParamList<float>& params) {
  Reader r(read_file(path), path.string());
  char magic[8];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kParamMagic, sizeof(magic)) != 0) throw DataError("'" + path.string() + "' is not a parameter file");
  if (r.get<std::uint64_t>() != params.size()) throw DataError("'" + path.string() + "' has a different parameter count");
  for (auto* p : params) {
    std::string name(r.get<std::uint32_t>(), '\0');
    r.read(name.data(), name.size());
    if (name != p->name) throw DataError("'" + path.string() + "' parameter '" + name + "' where '" + p->name + "' expected");
    if (r.get<std::uint64_t>() != p->value.size()) throw DataError("'" + path.string() + "' parameter '" + name + "' has a different size");
    r.read(p->value.data(), p->value.size() * sizeof(float));
  }
  if (!r.done()) throw DataError("'" + path.string() + "' has trailing bytes");
}

std::string serialize_optimizer(const nn::Adam<float>& adam) {
  std::string out(kOptimMagic, sizeof(kOptimMagic));
  put(out, static_cast<std::int64_t>(adam.steps()));
  put(out, static_cast<std::uint64_t>(adam.first_moments().size()));
  for (std::size_t i = 0; i < adam.first_moments().size(); ++i) {
    const auto& m = adam.first_moments()[i];
    const auto& v = adam.second_moments()[i];
    put(out, static_cast<std::uint64_t>(m.size()));
    out.append(reinterpret_cast<const char*>(m.data()), m.size() * sizeof(double));
    out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  return out;
}

void deserialize_optimizer(const fs::path& path, nn::Adam<float>& adam) {
  Reader r(read_file(path), path.string());
  char magic[8];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kOptimMagic, sizeof(magic)) != 0) throw DataError("'" + path.string() + "' is not an optimizer file");
  adam.set_steps(r.get<std::int64_t>());
  if (r.get<std::uint64_t>() != adam.first_moments().size()) throw DataError("'" + path.string() + "' has a different layout");
  for (std::size_t i = 0; i < adam.first_moments().size(); ++i) {
    auto& m = adam.first_moments()[i];
    auto& v = adam.second_moments()[i];
    if (r.get<std::uint64_t>() != m.size()) throw DataError("'" + path.string() + "' has a different layout");
    r.read(m.data(), m.size() * sizeof(double));
    r.read(v.data(), v.size() * sizeof(double));
  }
  if (!r.done()) throw DataError("'" + path.string() + "' has trailing bytes");
}

}  // namespace

std::string parameter_hash(const std::vector<const nn::Param<float>*>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto* p : params) {
    mix(p->name.data(), p->name.size());
    mix(p->value.data(), p->value.size() * sizeof(float));
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw ConfigError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

bool has_checkpoint(const fs::path& dir) { return fs::exists(dir / "state.json"); }

void save_checkpoint(const fs::path& dir, const RunConfig& config, const TrainState& state,
                     const nn::UNet<float>& net, const nn::UNet<float>& ema, const nn::Adam<float>& adam) {
  fs::create_directories(dir);
  TrainState s = state;
  s.param_hash = parameter_hash(net.parameters());
  s.ema_hash = parameter_hash(ema.parameters());
  write_file_atomic(dir / "config.json", to_json(config).dump(2) + "\n");
  write_file_atomic(dir / "params.bin", serialize_params(net.parameters()));
  write_file_atomic(dir / "ema.bin", serialize_params(ema.parameters()));
  write_file_atomic(dir / "optimizer.bin", serialize_optimizer(adam));
  const json j{{"step", s.step}, {"last_loss", s.last_loss}, {"param_hash", s.param_hash}, {"ema_hash", s.ema_hash}};
  write_file_atomic(dir / "state.json", j.dump(2) + "\n");
}

TrainState load_train_state(const fs::path& dir) {
  const fs::path path = dir / "state.json";
  json j;
  try {
    j = json::parse(read_file(path));
    TrainState s;
    s.step = j.at("step").get<std::int64_t>();
    s.last_loss = j.at("last_loss").get<double>();
    s.param_hash = j.at("param_hash").get<std::string>();
    s.ema_hash = j.at("ema_hash").get<std::string>();
    return s;
  } catch (const json::exception& e) {
    throw DataError("checkpoint state '" + path.string() + "' is malformed: " + e.what());
  }
}

TrainState restore_training(const fs::path& dir, nn::UNet<float>& net, nn::UNet<float>& ema, nn::Adam<float>& adam) {
  const TrainState s = load_train_state(dir);
  deserialize_params(dir / "params.bin", net.parameters());
  deserialize_params(dir / "ema.bin", ema.parameters());
  deserialize_optimizer(dir / "optimizer.bin", adam);
  if (parameter_hash(std::as_const(net).parameters()) != s.param_hash || parameter_hash(std::as_const(ema).parameters()) != s.ema_hash) {
    throw DataError("checkpoint '" + dir.string() + "' parameter files do not match state.json");
  }
  return s;
}

LoadedModel load_model(const fs::path& dir, bool use_ema) {
  if (!has_checkpoint(dir)) throw DataError("'" + dir.string() + "' is not a checkpoint directory");
  LoadedModel m;
  m.config = load_run_config(dir / "config.json");
  m.state = load_train_state(dir);
  auto net = std::make_shared<nn::UNet<float>>(m.config.net, 0);
  deserialize_params(dir / (use_ema ? "ema.bin" : "params.bin"), net->parameters());
  const std::string& want = use_ema ? m.state.ema_hash : m.state.param_hash;
  if (parameter_hash(std::as_const(*net).parameters()) != want) {
    throw DataError("checkpoint '" + dir.string() + "' parameter file does not match state.json");
  }
  m.net = std::move(net);
  return m;
}

DirectoryLock::DirectoryLock(const fs::path& dir) : path_(dir / "train.lock") {
  fs::create_directories(dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw ConfigError("checkpoint directory '" + dir.string() + "' is locked by another training process (" +
                      path_.string() + ")");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

}  // namespace anisr::app
