#pragma once

#include <string_view>
#include <vector>

namespace anisr::degradation {

enum class ProfileMethod { slr, gaussian, windowed_sinc };

std::string_view to_string(ProfileMethod m);
ProfileMethod parse_profile_method(std::string_view name);

/// Pulse-design knobs. Defaults: small-tip design, time-bandwidth 4,
/// 1% passband and stopband ripple, 64-sample pulse.
struct ProfileDesignParams {
  int pulse_samples = 64;
  double time_bandwidth = 4.0;
  double pass_ripple = 0.01;
  double stop_ripple = 0.01;
};

/// Through-plane weighting of one excited slice, sampled on the voxel grid.
struct SliceProfile {
  ProfileMethod method = ProfileMethod::gaussian;
  double thickness_mm = 0.0;
  double spacing_mm = 0.0;
  ProfileDesignParams params;

  /// Unit-sum, symmetric, odd-length weights at `spacing_mm` intervals.
  std::vector<double> kernel;
  /// Designed RF pulse (slr and windowed_sinc only).
  std::vector<double> pulse;
  /// Pulse band edges in cycles/sample (slr and windowed_sinc only).
  double pass_edge = 0.0;
  double stop_edge = 0.0;

  double support_mm() const { return static_cast<double>(kernel.size() - 1) * spacing_mm; }
  int half_width() const { return static_cast<int>(kernel.size() / 2); }

  /// Continuous profile at offset `z_mm` from the slice centre; 1 at z = 0.
  double response(double z_mm) const;

  /// Largest normalized gain |K(f)| / K(0) of the sampled kernel over
  /// f in [1 / (2k), 1/2] cycles/sample, i.e. above the LR Nyquist rate.
  double stopband_gain(int k) const;
};

/// Designs a slice profile of FWHM `thickness_mm` sampled at `spacing_mm`.
/// slr: small-tip Shinnar-Le Roux design, whose beta polynomial is a
/// minimax linear-phase lowpass; its magnitude response maps linearly onto
/// through-plane position so that the band centre lands at +-t/2.
SliceProfile design_slice_profile(double thickness_mm, double spacing_mm, ProfileMethod method,
                                  const ProfileDesignParams& params = {});

}  // namespace anisr::degradation
