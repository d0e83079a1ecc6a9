#include "anisr/diffusion/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "anisr/core/error.hpp"

namespace anisr::diffusion {

ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "linear") return ScheduleKind::linear;
  if (s == "cosine") return ScheduleKind::cosine;
  throw ConfigError("unknown schedule kind '" + s + "'");
}

std::string to_string(ScheduleKind k) { return k == ScheduleKind::linear ? "linear" : "cosine"; }

double NoiseSchedule::beta_tilde(int t) const {
  if (t < 1 || t > T) throw std::out_of_range("timestep outside 1..T");
  return beta[t] * (1.0 - alpha_bar[t - 1]) / (1.0 - alpha_bar[t]);
}

NoiseSchedule make_schedule(const ScheduleConfig& c) {
  if (c.steps < 1) throw ConfigError("schedule needs at least one step");
  NoiseSchedule s;
  s.kind = c.kind;
  s.T = c.steps;
  s.beta.assign(static_cast<std::size_t>(c.steps) + 1, 0.0);
  if (c.kind == ScheduleKind::linear) {
    if (!(c.beta_start > 0.0 && c.beta_start <= c.beta_end && c.beta_end < 1.0))
      throw ConfigError("linear schedule requires 0 < beta_start <= beta_end < 1");
    for (int t = 1; t <= c.steps; ++t) {
      const double frac = c.steps == 1 ? 0.0 : static_cast<double>(t - 1) / (c.steps - 1);
      s.beta[t] = c.beta_start + (c.beta_end - c.beta_start) * frac;
    }
  } else {
    if (!(c.cosine_offset > 0.0)) throw ConfigError("cosine schedule offset must be positive");
    auto f = [&](int t) {
      const double x = (static_cast<double>(t) / c.steps + c.cosine_offset) / (1.0 + c.cosine_offset);
      const double v = std::cos(x * std::numbers::pi / 2.0);
      return v * v;
    };
    for (int t = 1; t <= c.steps; ++t) s.beta[t] = std::min(1.0 - f(t) / f(t - 1), 0.999);
  }
  s.alpha.resize(s.beta.size());
  s.alpha_bar.resize(s.beta.size());
  s.alpha[0] = 1.0;
  s.alpha_bar[0] = 1.0;
  for (int t = 1; t <= c.steps; ++t) {
    s.alpha[t] = 1.0 - s.beta[t];
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
  }
  return s;
}

NoiseSchedule make_schedule(ScheduleKind kind, int steps, double beta_start, double beta_end) {
  ScheduleConfig c;
  c.kind = kind;
  c.steps = steps;
  c.beta_start = beta_start;
  c.beta_end = beta_end;
  return make_schedule(c);
}

}  // namespace anisr::diffusion
