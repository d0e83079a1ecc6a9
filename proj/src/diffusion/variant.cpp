#include "anisr/diffusion/variant.hpp"

#include "anisr/core/error.hpp"

namespace anisr::diffusion {

VariantName parse_variant_name(const std::string& s) {
  if (s == "SR3") return VariantName::SR3;
  if (s == "AniRes2D") return VariantName::AniRes2D;
  if (s == "AniNCA2D") return VariantName::AniNCA2D;
  if (s == "ResNCA2D") return VariantName::ResNCA2D;
  throw ConfigError("unknown variant '" + s + "' (expected SR3, AniRes2D, AniNCA2D or ResNCA2D)");
}

std::string to_string(VariantName v) {
  switch (v) {
    case VariantName::SR3:
      return "SR3";
    case VariantName::AniRes2D:
      return "AniRes2D";
    case VariantName::AniNCA2D:
      return "AniNCA2D";
    case VariantName::ResNCA2D:
      return "ResNCA2D";
  }
  return "?";
}

VariantConfig VariantConfig::make(VariantName name, double tau_max, bool nca_at_inference) {
  VariantConfig v;
  v.name = name;
  v.residual = name == VariantName::AniRes2D || name == VariantName::ResNCA2D;
  v.nca = name == VariantName::AniNCA2D || name == VariantName::ResNCA2D;
  v.tau_max = tau_max;
  v.nca_at_inference = nca_at_inference;
  v.validate();
  return v;
}

void VariantConfig::validate() const {
  const bool want_residual = name == VariantName::AniRes2D || name == VariantName::ResNCA2D;
  const bool want_nca = name == VariantName::AniNCA2D || name == VariantName::ResNCA2D;
  if (residual != want_residual || nca != want_nca)
    throw ConfigError("variant flags inconsistent with variant " + to_string(name));
  if (nca && !(tau_max > 0.0 && tau_max <= 1.0)) throw ConfigError("tau_max must lie in (0, 1]");
  if (inference_tau && (*inference_tau < 0.0 || *inference_tau > tau_max))
    throw ConfigError("inference_tau must lie in [0, tau_max]");
}

}  // namespace anisr::diffusion
