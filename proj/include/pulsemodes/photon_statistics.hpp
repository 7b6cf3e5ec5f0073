#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "pulsemodes/gaussian_state.hpp"
#include "pulsemodes/grid.hpp"
#include "pulsemodes/mode_functions.hpp"
#include "pulsemodes/tolerances.hpp"

namespace pulsemodes {

using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Spectral (or per-mode) photon-number statistics: means, covariances,
/// normally ordered covariances C_kl = cov(n_k, n_l) - delta_kl <n_k>, and
/// the normalized correlation C^(n)_kl = C_kl / sqrt(dn_k^2 dn_l^2).
/// `mask` marks entries excluded from analysis (undefined normalization or
/// measurement gaps); masked is distinct from zero throughout.
struct CorrelationData {
  std::optional<FrequencyGrid> grid;  // absent => plain mode-index axis
  Eigen::VectorXd mean_n;
  Eigen::MatrixXd cov_n;
  Eigen::MatrixXd c_normal;
  Eigen::MatrixXd c_normalized;
  MaskArray mask;
  std::vector<std::string> warnings;

  std::size_t size() const { return static_cast<std::size_t>(c_normalized.rows()); }
};

/// <n_k> = (<x_k^2> + <p_k^2> - 1)/2.
inline double mean_photon(const GaussianState& s, std::size_t k) {
  return 0.5 * (moment(s, Quad::X, k, 2) + moment(s, Quad::P, k, 2) - 1.0);
}

inline double total_mean_photons(const GaussianState& s) {
  double sum = 0;
  for (std::size_t k = 0; k < s.num_modes(); ++k) sum += mean_photon(s, k);
  return sum;
}

/// Full Gaussian photon-number covariance
///   cov(n_k, n_l) = sum_{q,q'} m_qk m_q'l V_{qk,q'l}
///                  + (1/2) sum_{q,q'} V_{qk,q'l}^2 - delta_kl / 4.
inline double photon_covariance_exact(const GaussianState& s, std::size_t k, std::size_t l) {
  const double xk = s.mean_of(Quad::X, k), pk = s.mean_of(Quad::P, k);
  const double xl = s.mean_of(Quad::X, l), pl = s.mean_of(Quad::P, l);
  const double vxx = s.var_of(Quad::X, k, Quad::X, l);
  const double vxp = s.var_of(Quad::X, k, Quad::P, l);
  const double vpx = s.var_of(Quad::P, k, Quad::X, l);
  const double vpp = s.var_of(Quad::P, k, Quad::P, l);
  double cov = xk * xl * vxx + xk * pl * vxp + pk * xl * vpx + pk * pl * vpp +
               0.5 * (vxx * vxx + vpx * vpx + vxp * vxp + vpp * vpp);
  if (k == l) cov -= 0.25;
  return cov;
}

/// C_kl = cov(n_k, n_l) - delta_kl <n_k> over all modes of the state.
inline Eigen::MatrixXd normally_ordered_covariance(const GaussianState& s) {
  const auto n = static_cast<Eigen::Index>(s.num_modes());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = k; l < n; ++l) {
      const double v = photon_covariance_exact(s, static_cast<std::size_t>(k),
                                               static_cast<std::size_t>(l));
      c(k, l) = v;
      c(l, k) = v;
    }
    c(k, k) -= mean_photon(s, static_cast<std::size_t>(k));
  }
  return c;
}

/// Exact photon statistics of every mode (or bin) of the state. Entries of
/// the normalized matrix whose variance falls below the floor are masked.
inline CorrelationData photon_correlations(const GaussianState& s,
                                           std::optional<FrequencyGrid> grid = std::nullopt,
                                           const Tolerances& tol = global_tolerances()) {
  const auto n = static_cast<Eigen::Index>(s.num_modes());
  if (grid && grid->num_bins != s.num_modes())
    throw GridMismatch("photon_correlations: grid size does not match state");
  CorrelationData d;
  d.grid = grid;
  d.mean_n.resize(n);
  d.cov_n.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    d.mean_n[k] = mean_photon(s, static_cast<std::size_t>(k));
    for (Eigen::Index l = k; l < n; ++l) {
      const double v = photon_covariance_exact(s, static_cast<std::size_t>(k),
                                               static_cast<std::size_t>(l));
      d.cov_n(k, l) = v;
      d.cov_n(l, k) = v;
    }
  }
  d.c_normal = d.cov_n - d.mean_n.asDiagonal().toDenseMatrix();
  d.c_normalized.setZero(n, n);
  d.mask = MaskArray::Constant(n, n, false);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l) {
      const double denom = d.cov_n(k, k) * d.cov_n(l, l);
      if (d.cov_n(k, k) <= tol.variance_floor || d.cov_n(l, l) <= tol.variance_floor)
        d.mask(k, l) = true;
      else
        d.c_normalized(k, l) = d.c_normal(k, l) / std::sqrt(denom);
    }
  return d;
}

/// Strong-field normalized correlation on the grid:
///   C^(n)(w_j, w_j') = 2 sum_{m,n} f_m(w_j) f_n(w_j') (V_Xm,Xn - delta_mn/2).
/// Valid for real mode functions (iii), zero P means (ii), and coherent
/// amplitudes dominating the variance elements (i). Also fills the per-bin
/// mean photon numbers <n_j> ~ (1/2) (sum_m f_m(w_j) X_m)^2 dw and warns
/// when a bin leaves the narrow-bin regime.
inline CorrelationData spectral_correlation_strongfield(
    const ModeBasis& basis, const Eigen::VectorXd& mean_x, const Eigen::MatrixXd& v_xx,
    const Tolerances& tol = global_tolerances()) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  if (mean_x.size() != n || v_xx.rows() != n || v_xx.cols() != n)
    throw DimensionMismatch("spectral_correlation_strongfield: mean/variance size mismatch");
  if (!basis.is_real(tol))
    throw ApproximationDomainError(
        "strong-field correlation requires real mode functions (condition iii); max |Im f| = " +
        std::to_string(basis.max_imaginary_part()));
  const double excess =
      (v_xx - 0.5 * Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  const double amp = mean_x.cwiseAbs().maxCoeff();
  if (amp < tol.strongfield_mean_ratio * excess)
    throw ApproximationDomainError(
        "strong-field correlation requires a dominant coherent amplitude (condition i): "
        "max |X| = " + std::to_string(amp) + " < " +
        std::to_string(tol.strongfield_mean_ratio) + " * max |V - I/2| = " +
        std::to_string(tol.strongfield_mean_ratio * excess));

  const Eigen::MatrixXd f = basis.real_coefficients();  // B x N
  const double dw = basis.grid().delta_omega;
  CorrelationData d;
  d.grid = basis.grid();
  d.c_normalized =
      2.0 * f * (v_xx - 0.5 * Eigen::MatrixXd::Identity(n, n)) * f.transpose();
  const Eigen::VectorXd envelope = f * mean_x;
  d.mean_n = 0.5 * dw * envelope.array().square();
  const auto b = static_cast<Eigen::Index>(basis.num_bins());
  d.mask = MaskArray::Constant(b, b, false);
  const double peak = d.mean_n.maxCoeff();
  if (peak > tol.narrow_bin_mean_max)
    d.warnings.push_back(
        "narrow-bin regime violated: max per-bin mean photon number " +
        std::to_string(peak) + " exceeds " + std::to_string(tol.narrow_bin_mean_max) +
        "; wide-bin corrections are not implemented");
  return d;
}

/// Overload taking a Gaussian state on the mode basis; additionally enforces
/// condition (ii), zero P means.
inline CorrelationData spectral_correlation_strongfield(
    const GaussianState& s, const ModeBasis& basis,
    const Tolerances& tol = global_tolerances()) {
  if (s.num_modes() != basis.size())
    throw DimensionMismatch("spectral_correlation_strongfield: state/basis size mismatch");
  const auto n = static_cast<Eigen::Index>(s.num_modes());
  const double pmax = s.mean.tail(n).cwiseAbs().maxCoeff();
  if (pmax > 1e-10)
    throw ApproximationDomainError(
        "strong-field correlation requires vanishing P means (condition ii); max |P| = " +
        std::to_string(pmax));
  return spectral_correlation_strongfield(basis, s.mean.head(n),
                                          s.variance.topLeftCorner(n, n), tol);
}

enum class SignVerdict {
  ConsistentSingleModeSub,
  ConsistentSingleModeSuper,
  ConsistentEither,  // all entries vanish
  RequiresMultimode,
};

struct SignTheoremReport {
  bool has_positive = false;
  bool has_negative = false;
  bool sub_consistent = false;
  bool super_consistent = false;
  SignVerdict verdict = SignVerdict::ConsistentEither;
};

/// Single-mode sign theorem check: an effectively single-mode Gaussian
/// state produces normally ordered covariances of one sign (negative iff
/// sub-Poissonian). Mixed signs among unmasked entries imply the field
/// cannot be a single nonmonochromatic mode.
inline SignTheoremReport single_mode_sign_theorem_check(const CorrelationData& corr,
                                                        double tolerance = 1e-12) {
  const Eigen::MatrixXd& c = corr.c_normal.size() > 0 ? corr.c_normal : corr.c_normalized;
  SignTheoremReport r;
  for (Eigen::Index k = 0; k < c.rows(); ++k)
    for (Eigen::Index l = 0; l < c.cols(); ++l) {
      if (corr.mask.size() > 0 && corr.mask(k, l)) continue;
      if (c(k, l) > tolerance) r.has_positive = true;
      if (c(k, l) < -tolerance) r.has_negative = true;
    }
  if (r.has_positive && r.has_negative) {
    r.verdict = SignVerdict::RequiresMultimode;
  } else if (r.has_negative) {
    r.sub_consistent = true;
    r.verdict = SignVerdict::ConsistentSingleModeSub;
  } else if (r.has_positive) {
    r.super_consistent = true;
    r.verdict = SignVerdict::ConsistentSingleModeSuper;
  } else {
    r.sub_consistent = true;
    r.super_consistent = true;
    r.verdict = SignVerdict::ConsistentEither;
  }
  return r;
}

}  // namespace pulsemodes
