#pragma once

#include <string>
#include <vector>

namespace anisr::diffusion {

enum class ScheduleKind { linear, cosine };

ScheduleKind parse_schedule_kind(const std::string& s);
std::string to_string(ScheduleKind k);

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::linear;
  int steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  double cosine_offset = 0.008;
};

/// Arrays are indexed by t = 0..T; index 0 is the clean-data convention
/// (beta = 0, alpha = alpha_bar = 1).
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::linear;
  int T = 0;
  std::vector<double> beta, alpha, alpha_bar;

  /// Ancestral posterior variance beta[t] (1 - alpha_bar[t-1]) / (1 - alpha_bar[t]); 0 at t = 1.
  double beta_tilde(int t) const;
};

NoiseSchedule make_schedule(const ScheduleConfig& config);
NoiseSchedule make_schedule(ScheduleKind kind, int steps, double beta_start = 1e-4, double beta_end = 0.02);

}  // namespace anisr::diffusion
