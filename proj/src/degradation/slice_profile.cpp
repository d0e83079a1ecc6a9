#include "anisr/degradation/slice_profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "anisr/degradation/fir_design.hpp"
#include "anisr/core/error.hpp"

namespace anisr::degradation {

std::string_view to_string(ProfileMethod m) {
  switch (m) {
    case ProfileMethod::slr: return "slr";
    case ProfileMethod::gaussian: return "gaussian";
    case ProfileMethod::windowed_sinc: return "windowed_sinc";
  }
  return "unknown";
}

ProfileMethod parse_profile_method(std::string_view name) {
  if (name == "slr") return ProfileMethod::slr;
  if (name == "gaussian") return ProfileMethod::gaussian;
  if (name == "windowed_sinc" || name == "windowed-sinc") return ProfileMethod::windowed_sinc;
  throw ConfigError("unsupported slice profile method '" + std::string(name) + "'");
}

namespace {

double gaussian_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

// Band centre of the pulse response in cycles/sample.
double band_centre(const ProfileDesignParams& p) { return p.time_bandwidth / (2.0 * p.pulse_samples); }

}  // namespace

double SliceProfile::response(double z_mm) const {
  if (method == ProfileMethod::gaussian) {
    const double s = gaussian_sigma(thickness_mm);
    return std::exp(-0.5 * z_mm * z_mm / (s * s));
  }
  const double nu = std::abs(z_mm) * 2.0 * band_centre(params) / thickness_mm;
  if (nu > 0.5) return 0.0;
  return std::abs(zero_phase_response(pulse, nu)) / std::abs(zero_phase_response(pulse, 0.0));
}

double SliceProfile::stopband_gain(int k) const {
  if (k < 1) throw ConfigError("stopband_gain needs k >= 1");
  const double dc = zero_phase_response(kernel, 0.0);
  const double lo = 0.5 / k;
  constexpr int points = 4096;
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const double f = lo + (0.5 - lo) * i / (points - 1);
    worst = std::max(worst, std::abs(zero_phase_response(kernel, f)) / std::abs(dc));
  }
  return worst;
}

SliceProfile design_slice_profile(double thickness_mm, double spacing_mm, ProfileMethod method,
                                  const ProfileDesignParams& params) {
  if (!(thickness_mm > 0.0)) throw ConfigError("slice thickness must be positive");
  if (!(spacing_mm > 0.0)) throw ConfigError("sample spacing must be positive");
  if (thickness_mm < spacing_mm) {
    throw ConfigError("slice thickness is smaller than the sample spacing (sub-sample profile)");
  }

  SliceProfile profile;
  profile.method = method;
  profile.thickness_mm = thickness_mm;
  profile.spacing_mm = spacing_mm;
  profile.params = params;

  double half_extent_mm = thickness_mm;
  switch (method) {
    case ProfileMethod::gaussian:
      half_extent_mm = 3.0 * gaussian_sigma(thickness_mm);
      break;
    case ProfileMethod::slr: {
      const double ratio = thickness_mm / spacing_mm;
      if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw ConfigError("slr profile needs a thickness that is an integer multiple of the spacing");
      }
      if (params.pulse_samples < 8 || !(params.time_bandwidth > 0.0) || !(params.pass_ripple > 0.0) ||
          !(params.stop_ripple > 0.0)) {
        throw ConfigError("invalid slr design parameters");
      }
      const int taps = params.pulse_samples | 1;
      const double centre = band_centre(params);
      const double stop_weight = params.pass_ripple / params.stop_ripple;
      double width = transition_width_factor(params.pass_ripple, params.stop_ripple) / params.time_bandwidth;
      // Widen the transition band until the designed response meets both ripple targets.
      for (int attempt = 0;; ++attempt) {
        profile.pass_edge = (1.0 - width) * centre;
        profile.stop_edge = std::min((1.0 + width) * centre, 0.49);
        if (profile.pass_edge <= 0.0) throw ConfigError("slr ripple targets are unattainable");
        profile.pulse = design_minimax_lowpass(taps, profile.pass_edge, profile.stop_edge, stop_weight);
        const RippleMeasurement r = measure_ripple(profile.pulse, profile.pass_edge, profile.stop_edge);
        if (r.pass <= params.pass_ripple && r.stop <= params.stop_ripple) break;
        if (attempt == 40) throw ConfigError("slr design did not meet its ripple targets");
        width *= 1.03;
      }
      break;
    }
    case ProfileMethod::windowed_sinc: {
      if (params.pulse_samples < 8 || !(params.time_bandwidth > 0.0)) {
        throw ConfigError("invalid windowed-sinc design parameters");
      }
      const double centre = band_centre(params);
      profile.pulse = windowed_sinc(params.pulse_samples | 1, centre);
      profile.pass_edge = centre;
      profile.stop_edge = centre;
      break;
    }
  }

  const int half = std::max(1, static_cast<int>(std::ceil(half_extent_mm / spacing_mm - 1e-9)));
  profile.kernel.resize(static_cast<std::size_t>(2 * half + 1));
  double sum = 0.0;
  for (int j = 0; j <= half; ++j) {
    const double w = profile.response(j * spacing_mm);
    profile.kernel[static_cast<std::size_t>(half + j)] = w;
    profile.kernel[static_cast<std::size_t>(half - j)] = w;
    sum += j == 0 ? w : 2.0 * w;
  }
  for (double& w : profile.kernel) w /= sum;
  return profile;
}

}  // namespace anisr::degradation
