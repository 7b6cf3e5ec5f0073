#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "pulsemodes/errors.hpp"
#include "pulsemodes/mode_functions.hpp"
#include "pulsemodes/photon_statistics.hpp"
#include "pulsemodes/rng.hpp"

namespace pulsemodes {

struct ReconstructionResult {
  Eigen::MatrixXd v_xx;
  double masked_fraction = 0.0;    // fraction of kernel entries that were masked
  double symmetric_fill_fraction = 0.0;  // of masked entries, filled from the mirror
  double zero_fill_fraction = 0.0;       // of masked entries, filled with zero
};

namespace detail {

/// Masked entries are filled from the mirror entry when available,
/// otherwise with zero (biasing toward vacuum); fractions are reported.
inline Eigen::MatrixXd fill_masked(const CorrelationData& corr, ReconstructionResult& report,
                                   const Tolerances& tol) {
  Eigen::MatrixXd c = corr.c_normalized;
  const auto b = c.rows();
  if (corr.mask.size() == 0) return c;
  std::size_t masked = 0, symmetric = 0;
  for (Eigen::Index i = 0; i < b; ++i)
    for (Eigen::Index j = 0; j < b; ++j) {
      if (!corr.mask(i, j)) continue;
      ++masked;
      if (!corr.mask(j, i)) {
        c(i, j) = c(j, i);
        ++symmetric;
      } else {
        c(i, j) = 0.0;
      }
    }
  report.masked_fraction = static_cast<double>(masked) / static_cast<double>(b * b);
  if (masked > 0) {
    report.symmetric_fill_fraction = static_cast<double>(symmetric) / static_cast<double>(masked);
    report.zero_fill_fraction = 1.0 - report.symmetric_fill_fraction;
  }
  if (report.masked_fraction > tol.masked_fraction_max)
    throw InsufficientData("reconstruct_vxx: " + std::to_string(report.masked_fraction * 100) +
                           "% of correlation entries are masked (limit " +
                           std::to_string(tol.masked_fraction_max * 100) + "%)");
  return c;
}

}  // namespace detail

/// Invert the measured normalized correlation to the X-quadrature variance
/// block: V_Xk,Xk' = delta/2 + (1/2) integral C^(n)(w,w') f_k(w) f_k'(w').
inline ReconstructionResult reconstruct_vxx(const CorrelationData& corr, const ModeBasis& basis,
                                            const Tolerances& tol = global_tolerances()) {
  if (!basis.is_real(tol))
    throw ApproximationDomainError("reconstruct_vxx: basis must be real");
  if (corr.size() != basis.num_bins())
    throw GridMismatch("reconstruct_vxx: correlation grid does not match basis");
  ReconstructionResult out;
  const Eigen::MatrixXd c = detail::fill_masked(corr, out, tol);
  const double asym = (c - c.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9)
    throw InvalidArgument("reconstruct_vxx: correlation matrix asymmetric by " +
                          std::to_string(asym));
  const Eigen::MatrixXd f = basis.real_coefficients();
  const double dw = basis.grid().delta_omega;
  const auto n = static_cast<Eigen::Index>(basis.size());
  out.v_xx = 0.5 * dw * dw * f.transpose() * c * f +
             0.5 * Eigen::MatrixXd::Identity(n, n);
  out.v_xx = 0.5 * (out.v_xx + out.v_xx.transpose()).eval();
  return out;
}

/// Propagated standard deviations for the reconstructed elements:
///   <dV^2_kk'> = (1/4) sum_{jj'} sigma_jj'^2 f_k^2(j) f_k'^2(j') dw^4,
/// with sigma the per-bin standard deviation of the C^(n) entries
/// (uncorrelated-error assumption).
inline Eigen::MatrixXd reconstruction_error(const Eigen::MatrixXd& sigma_c,
                                            const ModeBasis& basis,
                                            const Tolerances& tol = global_tolerances()) {
  if (!basis.is_real(tol))
    throw ApproximationDomainError("reconstruction_error: basis must be real");
  if (static_cast<std::size_t>(sigma_c.rows()) != basis.num_bins() ||
      sigma_c.rows() != sigma_c.cols())
    throw GridMismatch("reconstruction_error: sigma matrix does not match basis grid");
  if (sigma_c.minCoeff() < 0)
    throw InvalidArgument("reconstruction_error: sigma entries must be nonnegative");
  const double dw = basis.grid().delta_omega;
  const Eigen::MatrixXd f2 = basis.real_coefficients().array().square().matrix();  // B x N
  const Eigen::MatrixXd var =
      0.25 * std::pow(dw, 4) * f2.transpose() * sigma_c.array().square().matrix() * f2;
  return var.cwiseSqrt();
}

struct Diagonalization {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd rotation;      // columns are eigenvectors, deterministic signs
  double squeezing_db = 0.0;     // 10 log10(lambda_min / 0.5)
  std::optional<ModeBasis> modes;  // rotated mode functions when a basis is supplied
};

/// Eigendecomposition of a variance block with deterministic ordering and
/// eigenvector signs (first component above 1e-12 made positive).
inline Diagonalization diagonalize_vxx(const Eigen::MatrixXd& v_xx,
                                       const std::optional<ModeBasis>& basis = std::nullopt,
                                       const Tolerances& tol = global_tolerances()) {
  if (v_xx.rows() != v_xx.cols())
    throw DimensionMismatch("diagonalize_vxx: matrix must be square");
  const double asym = (v_xx - v_xx.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9)
    throw InvalidArgument("diagonalize_vxx: input asymmetric by " + std::to_string(asym));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (v_xx + v_xx.transpose()));
  Diagonalization d;
  d.eigenvalues = es.eigenvalues();  // Eigen returns ascending order
  d.rotation = es.eigenvectors();
  for (Eigen::Index c = 0; c < d.rotation.cols(); ++c) {
    for (Eigen::Index r = 0; r < d.rotation.rows(); ++r) {
      if (std::abs(d.rotation(r, c)) > 1e-12) {
        if (d.rotation(r, c) < 0) d.rotation.col(c) *= -1.0;
        break;
      }
    }
  }
  d.squeezing_db = 10.0 * std::log10(d.eigenvalues[0] / 0.5);
  if (basis) {
    if (basis->size() != static_cast<std::size_t>(v_xx.rows()))
      throw DimensionMismatch("diagonalize_vxx: basis size does not match matrix");
    d.modes = ModeBasis(basis->grid(),
                        basis->coefficients() * d.rotation.cast<Complex>(), tol);
  }
  return d;
}

struct MonteCarloSummary {
  double point_estimate_db = 0.0;
  double min_db = 0.0;
  double max_db = 0.0;
  double median_db = 0.0;
  std::vector<double> samples_db;  // sorted
};

/// Reconstruction uncertainty by resampling: each unmasked correlation
/// entry is perturbed by independent Gaussian noise of the given per-entry
/// standard deviation, the draw is symmetrized, and the reconstruction +
/// diagonalization is repeated. Reproducible for a fixed seed; trials use
/// derived subseeds so the contract permits parallel execution.
inline MonteCarloSummary monte_carlo_uncertainty(const CorrelationData& corr,
                                                 const Eigen::MatrixXd& sigma_c,
                                                 const ModeBasis& basis, std::size_t trials,
                                                 std::uint64_t seed,
                                                 const Tolerances& tol = global_tolerances()) {
  if (trials < 100)
    throw InvalidArgument("monte_carlo_uncertainty: need at least 100 trials");
  if (static_cast<std::size_t>(sigma_c.rows()) != corr.size() ||
      sigma_c.rows() != sigma_c.cols())
    throw DimensionMismatch("monte_carlo_uncertainty: sigma matrix size mismatch");
  MonteCarloSummary summary;
  summary.point_estimate_db =
      diagonalize_vxx(reconstruct_vxx(corr, basis, tol).v_xx, std::nullopt, tol).squeezing_db;
  summary.samples_db.reserve(trials);
  const auto b = static_cast<Eigen::Index>(corr.size());
  Eigen::MatrixXd noise(b, b);
  for (std::size_t t = 0; t < trials; ++t) {
    NormalSampler rng(derive_seed(seed, t));
    for (Eigen::Index i = 0; i < b; ++i)
      for (Eigen::Index j = 0; j < b; ++j) noise(i, j) = sigma_c(i, j) * rng();
    noise = (0.5 * (noise + noise.transpose())).eval();
    CorrelationData noisy = corr;
    for (Eigen::Index i = 0; i < b; ++i)
      for (Eigen::Index j = 0; j < b; ++j)
        if (noisy.mask.size() == 0 || !noisy.mask(i, j)) noisy.c_normalized(i, j) += noise(i, j);
    const auto rec = reconstruct_vxx(noisy, basis, tol);
    summary.samples_db.push_back(diagonalize_vxx(rec.v_xx, std::nullopt, tol).squeezing_db);
  }
  std::sort(summary.samples_db.begin(), summary.samples_db.end());
  summary.min_db = summary.samples_db.front();
  summary.max_db = summary.samples_db.back();
  const std::size_t mid = trials / 2;
  summary.median_db = (trials % 2 == 1)
                          ? summary.samples_db[mid]
                          : 0.5 * (summary.samples_db[mid - 1] + summary.samples_db[mid]);
  return summary;
}

}  // namespace pulsemodes
