#pragma once

#include <optional>
#include <string>

namespace anisr::diffusion {

enum class VariantName { SR3, AniRes2D, AniNCA2D, ResNCA2D };

VariantName parse_variant_name(const std::string& s);
std::string to_string(VariantName v);

struct VariantConfig {
  VariantName name = VariantName::AniRes2D;
  bool residual = true;
  bool nca = false;
  double tau_max = 0.5;
  bool nca_at_inference = false;
  /// Level used when nca_at_inference is set; unset means tau_max / 2.
  std::optional<double> inference_tau;

  static VariantConfig make(VariantName name, double tau_max = 0.5, bool nca_at_inference = false);
  double effective_inference_tau() const { return inference_tau.value_or(tau_max / 2.0); }
  void validate() const;
};

}  // namespace anisr::diffusion
