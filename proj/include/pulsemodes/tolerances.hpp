#pragma once

#include <cstdlib>
#include <sstream>
#include <string>

namespace pulsemodes {

/// Numerical tolerances and approximation thresholds. The defaults are
/// library constants; callers may pass a modified copy to any operation,
/// and the CLI honors the PULSEMODES_TOLERANCE environment variable
/// (either a single scalar applied to the orthonormality/normalization
/// pair, or comma separated key=value entries).
struct Tolerances {
  double orthonormality = 1e-8;       // max |Gram - I| entry, |Z Z^T - I| entry
  double normalization = 1e-10;       // |sum |f|^2 dw - 1|
  double symmetry = 1e-12;            // matrix symmetry checks
  double realness = 1e-12;            // max |Im f| for "real" mode functions
  double uncertainty_slack = 1e-9;    // V_XX V_PP - V_XP^2 >= 1/4 - slack
  double degenerate_basis = 1e-10;    // squared relative residual floor in Gram-Schmidt
  double amplitude_floor = 1e-12;     // |beta| below this counts as zero
  double variance_floor = 1e-14;      // photon-number variance below this is masked
  double strongfield_mean_ratio = 20.0;  // condition (i): max|mean| >= ratio * max|V - I/2|
  double narrow_bin_mean_max = 0.1;   // warn when a bin's mean photon number exceeds this
  double masked_fraction_max = 0.3;   // reconstruction refuses above this masking level
};

inline Tolerances& global_tolerances() {
  static Tolerances tol;
  return tol;
}

/// Parse PULSEMODES_TOLERANCE into `tol`. Returns false when the variable
/// is unset or unparseable (tol left untouched in the latter case).
inline bool apply_env_overrides(Tolerances& tol) {
  const char* raw = std::getenv("PULSEMODES_TOLERANCE");
  if (raw == nullptr) return false;
  const std::string text(raw);
  if (text.find('=') == std::string::npos) {
    try {
      const double value = std::stod(text);
      if (!(value > 0)) return false;
      tol.orthonormality = value;
      tol.normalization = value;
      return true;
    } catch (const std::exception&) {
      return false;
    }
  }
  Tolerances parsed = tol;
  std::istringstream stream(text);
  std::string item;
  bool any = false;
  while (std::getline(stream, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = item.substr(0, eq);
    double value = 0;
    try {
      value = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      continue;
    }
    if (key == "orthonormality") parsed.orthonormality = value;
    else if (key == "normalization") parsed.normalization = value;
    else if (key == "symmetry") parsed.symmetry = value;
    else if (key == "realness") parsed.realness = value;
    else if (key == "uncertainty_slack") parsed.uncertainty_slack = value;
    else if (key == "strongfield_mean_ratio") parsed.strongfield_mean_ratio = value;
    else if (key == "narrow_bin_mean_max") parsed.narrow_bin_mean_max = value;
    else if (key == "masked_fraction_max") parsed.masked_fraction_max = value;
    else continue;
    any = true;
  }
  if (any) tol = parsed;
  return any;
}

}  // namespace pulsemodes
