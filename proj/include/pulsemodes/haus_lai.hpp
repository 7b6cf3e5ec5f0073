#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "pulsemodes/errors.hpp"
#include "pulsemodes/gaussian_state.hpp"
#include "pulsemodes/mode_functions.hpp"
#include "pulsemodes/photon_statistics.hpp"

namespace pulsemodes {

/// Label identifying states whose mode basis is the Haus-Lai soliton family.
inline constexpr const char* kHausLaiLabel = "haus-lai";

struct SolitonParameters {
  double n0 = 0.0;      // mean photon number of the pulse
  double omega0 = 0.0;  // spectral width parameter

  SolitonParameters(double n, double w) : n0(n), omega0(w) {
    if (!(n0 > 0)) throw InvalidArgument("SolitonParameters: n0 must be > 0");
    if (!(omega0 > 0)) throw InvalidArgument("SolitonParameters: omega0 must be > 0");
  }
};

/// Statistics of the soliton perturbation operators expressed through the
/// Haus-Lai quadratures:
///   dn      = sqrt(2 n0) X_1                                  [photons]
///   dtheta  = (P_1 + sqrt(1/3 + pi^2/9) P_3) / sqrt(2 n0)     [rad]
///   dx      = X_2 / sqrt(6 n0)                                [2c/omega0]
///   dp      = sqrt(6/n0) (P_2 - sqrt(pi^2/9 - 1) P_4)         [omega0/2c]
/// The speed of light never appears numerically; position and momentum are
/// reported in the natural soliton units shown. The pairs (dn, dtheta) and
/// (dx, n0 dp) are canonically conjugate (symplectic pairing 1).
struct SolitonOperatorStats {
  double mean_dn = 0, var_dn = 0;
  double mean_dtheta = 0, var_dtheta = 0;
  double mean_dx = 0, var_dx = 0;
  double mean_dp = 0, var_dp = 0;
  double product_n_theta = 0;  // <dn^2> <dtheta^2>   (vacuum: 1/3 + pi^2/36)
  double product_x_p = 0;      // <dx^2> <n0^2 dp^2>  (vacuum: pi^2/36)
};

namespace detail {

inline void require_haus_lai(const GaussianState& s) {
  if (s.label.find(kHausLaiLabel) == std::string::npos)
    throw BasisMismatch("soliton operators need a state tagged '" +
                        std::string(kHausLaiLabel) + "', got label '" + s.label + "'");
  if (s.num_modes() < 4)
    throw BasisMismatch("soliton operators need at least 4 Haus-Lai modes, state has " +
                        std::to_string(s.num_modes()));
}

}  // namespace detail

/// Coefficient vectors of the four operators over (X..., P...) of an
/// N-mode Haus-Lai state, in the report units above.
inline std::vector<Eigen::VectorXd> soliton_operator_vectors(std::size_t n_modes, double n0) {
  const auto n = static_cast<Eigen::Index>(n_modes);
  const double root_third = std::sqrt(1.0 / 3.0 + M_PI * M_PI / 9.0);
  const double root_p4 = std::sqrt(M_PI * M_PI / 9.0 - 1.0);
  Eigen::VectorXd dn = Eigen::VectorXd::Zero(2 * n);
  Eigen::VectorXd dtheta = Eigen::VectorXd::Zero(2 * n);
  Eigen::VectorXd dx = Eigen::VectorXd::Zero(2 * n);
  Eigen::VectorXd dp = Eigen::VectorXd::Zero(2 * n);
  dn[0] = std::sqrt(2.0 * n0);
  dtheta[n + 0] = 1.0 / std::sqrt(2.0 * n0);
  dtheta[n + 2] = root_third / std::sqrt(2.0 * n0);
  dx[1] = 1.0 / std::sqrt(6.0 * n0);
  dp[n + 1] = std::sqrt(6.0 / n0);
  dp[n + 3] = -root_p4 * std::sqrt(6.0 / n0);
  return {dn, dtheta, dx, dp};
}

inline SolitonOperatorStats soliton_operator_stats(const GaussianState& s,
                                                   const SolitonParameters& params) {
  detail::require_haus_lai(s);
  const auto vecs = soliton_operator_vectors(s.num_modes(), params.n0);
  auto mean_of = [&](const Eigen::VectorXd& u) { return u.dot(s.mean); };
  auto var_of = [&](const Eigen::VectorXd& u) { return u.dot(s.variance * u); };
  SolitonOperatorStats r;
  r.mean_dn = mean_of(vecs[0]);
  r.var_dn = var_of(vecs[0]);
  r.mean_dtheta = mean_of(vecs[1]);
  r.var_dtheta = var_of(vecs[1]);
  r.mean_dx = mean_of(vecs[2]);
  r.var_dx = var_of(vecs[2]);
  r.mean_dp = mean_of(vecs[3]);
  r.var_dp = var_of(vecs[3]);
  r.product_n_theta = r.var_dn * r.var_dtheta;
  r.product_x_p = r.var_dx * params.n0 * params.n0 * r.var_dp;
  return r;
}

struct SensitivityEntry {
  Quad qa = Quad::X;
  std::size_t ka = 0;
  Quad qb = Quad::X;
  std::size_t kb = 0;
  double magnitude = 0.0;  // max |dC^(n)/dV| over the grid
};

struct SufficiencyReport {
  std::vector<SensitivityEntry> sensitive;  // entries with nonzero influence
  bool x_block_only = true;
  double max_p_sensitivity = 0.0;
};

/// Which variance-matrix entries influence the strong-field photon
/// correlation prediction: finite-difference dC^(n)/dV over every
/// independent entry of V. For real bases only the X-block enters, which
/// is why the soliton operators dn and dx alone touch the photon
/// statistics while dtheta and dp do not.
inline SufficiencyReport photon_stat_sufficiency_check(
    const GaussianState& s, const ModeBasis& basis,
    const Tolerances& tol = global_tolerances()) {
  detail::require_haus_lai(s);
  if (s.num_modes() != basis.size())
    throw DimensionMismatch("photon_stat_sufficiency_check: state/basis size mismatch");
  if (!basis.is_real(tol))
    throw ApproximationDomainError("photon_stat_sufficiency_check: basis must be real");
  const auto n = static_cast<Eigen::Index>(basis.size());
  const Eigen::MatrixXd f = basis.real_coefficients();
  auto correlation = [&](const Eigen::MatrixXd& v_full) {
    const Eigen::MatrixXd vxx = v_full.topLeftCorner(n, n);
    return Eigen::MatrixXd(2.0 * f * (vxx - 0.5 * Eigen::MatrixXd::Identity(n, n)) *
                           f.transpose());
  };
  const Eigen::MatrixXd base = correlation(s.variance);
  const double h = 1e-6;
  SufficiencyReport report;
  for (Eigen::Index a = 0; a < 2 * n; ++a)
    for (Eigen::Index b = a; b < 2 * n; ++b) {
      Eigen::MatrixXd v = s.variance;
      v(a, b) += h;
      v(b, a) = v(a, b);
      const double magnitude = (correlation(v) - base).cwiseAbs().maxCoeff() / h;
      const bool x_entry = a < n && b < n;
      if (magnitude > 1e-6) {
        report.sensitive.push_back(
            {a < n ? Quad::X : Quad::P, static_cast<std::size_t>(a % n),
             b < n ? Quad::X : Quad::P, static_cast<std::size_t>(b % n), magnitude});
        if (!x_entry) report.x_block_only = false;
      }
      if (!x_entry) report.max_p_sensitivity = std::max(report.max_p_sensitivity, magnitude);
    }
  return report;
}

}  // namespace pulsemodes
