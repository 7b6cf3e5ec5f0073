#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "pulsemodes/errors.hpp"
#include "pulsemodes/gaussian_state.hpp"
#include "pulsemodes/mode_functions.hpp"
#include "pulsemodes/photon_statistics.hpp"

namespace pulsemodes {

/// Spectral amplitude transmission 0 <= c(w) <= 1 on a grid. Intensity
/// transmissions T convert at the boundary via c = sqrt(T).
struct FilterFunction {
  FrequencyGrid grid;
  Eigen::VectorXd c;

  FilterFunction() = default;
  FilterFunction(FrequencyGrid g, Eigen::VectorXd values) : grid(g), c(std::move(values)) {
    if (static_cast<std::size_t>(c.size()) != grid.num_bins)
      throw DimensionMismatch("FilterFunction: values length must equal grid.num_bins");
    for (Eigen::Index j = 0; j < c.size(); ++j)
      if (!(c[j] >= 0.0 && c[j] <= 1.0))
        throw InvalidFilter("FilterFunction: transmission outside [0,1] at bin " +
                            std::to_string(j));
  }

  static FilterFunction from_intensity(const FrequencyGrid& g, const Eigen::VectorXd& t) {
    for (Eigen::Index j = 0; j < t.size(); ++j)
      if (!(t[j] >= 0.0 && t[j] <= 1.0))
        throw InvalidFilter("FilterFunction: intensity transmission outside [0,1] at bin " +
                            std::to_string(j));
    return FilterFunction(g, t.cwiseSqrt());
  }
};

enum class QMethod { Auto, Exact, StrongField };

/// Whole-pulse Mandel Q = (dn^2 - <n>)/<n>. The exact path sums the full
/// Gaussian covariances over all modes; the strong-field path evaluates
/// 2 u^T V u - 1 with u the normalized mean-quadrature direction. Auto
/// picks strong-field only when the coherent amplitude dominates
/// (condition (i)), falling back to exact for small means.
inline double mandel_q(const GaussianState& s, QMethod method = QMethod::Auto,
                       const Tolerances& tol = global_tolerances()) {
  const auto d = s.mean.size();
  if (method == QMethod::Auto) {
    const double excess =
        (s.variance - 0.5 * Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
    const double amp = s.mean.cwiseAbs().maxCoeff();
    method = (amp >= tol.strongfield_mean_ratio * excess) ? QMethod::StrongField
                                                          : QMethod::Exact;
  }
  if (method == QMethod::StrongField) {
    const double norm2 = s.mean.squaredNorm();
    if (norm2 <= 0)
      throw UndefinedQ("mandel_q: zero mean field, strong-field Q undefined");
    const Eigen::VectorXd u = s.mean / std::sqrt(norm2);
    return 2.0 * u.dot(s.variance * u) - 1.0;
  }
  const double n = total_mean_photons(s);
  if (n <= 0) throw UndefinedQ("mandel_q: mean photon number vanishes");
  double dn2 = 0;
  const std::size_t nm = s.num_modes();
  for (std::size_t k = 0; k < nm; ++k)
    for (std::size_t l = 0; l < nm; ++l) dn2 += photon_covariance_exact(s, k, l);
  return (dn2 - n) / n;
}

struct OptimalLo {
  Eigen::VectorXd direction;  // unit vector over (X..., P...)
  double q_min = 0.0;         // 2 (lambda_min - 1/2)
  double q_max = 0.0;         // 2 (lambda_max - 1/2)
};

/// The Q-parameter under local-oscillator modulation is bounded by the
/// spectrum of V; the optimum is the eigenvector of the minimum eigenvalue.
inline OptimalLo optimal_lo(const Eigen::MatrixXd& v) {
  if (v.rows() != v.cols() || v.rows() == 0)
    throw DimensionMismatch("optimal_lo: variance matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (v + v.transpose()));
  OptimalLo out;
  out.direction = es.eigenvectors().col(0);
  for (Eigen::Index r = 0; r < out.direction.size(); ++r) {
    if (std::abs(out.direction[r]) > 1e-12) {
      if (out.direction[r] < 0) out.direction *= -1.0;
      break;
    }
  }
  out.q_min = 2.0 * (es.eigenvalues()[0] - 0.5);
  out.q_max = 2.0 * (es.eigenvalues()[es.eigenvalues().size() - 1] - 0.5);
  return out;
}

/// Apply a spectral filter to a frequency-bin state:
///   mean -> c mean,  V_xx -> c V c + diag((1 - c^2)/2) (same for pp),
///   V_xp -> c V c. Blocked components are mixed with vacuum.
inline GaussianState apply_filter(const GaussianState& s, const FilterFunction& filter) {
  const auto b = static_cast<Eigen::Index>(filter.grid.num_bins);
  if (s.mean.size() != 2 * b)
    throw GridMismatch("apply_filter: state dimension does not match filter grid");
  Eigen::VectorXd c2(2 * b);
  c2.head(b) = filter.c;
  c2.tail(b) = filter.c;
  GaussianState out;
  out.label = s.label;
  out.mean = c2.cwiseProduct(s.mean);
  out.variance = c2.asDiagonal() * s.variance * c2.asDiagonal();
  for (Eigen::Index j = 0; j < b; ++j) {
    const double admix = 0.5 * (1.0 - filter.c[j] * filter.c[j]);
    out.variance(j, j) += admix;
    out.variance(b + j, b + j) += admix;
  }
  return out;
}

struct FilteredQ {
  double q_f = 0.0;
  double a_squared = 0.0;      // squared magnitude of the filtered direction, <= 1
  Eigen::MatrixXd c_matrix;    // c_nn' = integral c^2(w) f_n(w) f_n'(w) dw
};

/// Mandel Q of the spectrally filtered pulse (strong-field form):
///   Q^f = 2 [ Xf^T (V_XX - I/2) Xf + 2 Xf^T V_XP Pf + Pf^T (V_PP - I/2) Pf ]
/// with Xf_m = sum_n c_mn X_n / D, Pf likewise, D^2 = sum c_nn'(X X' + P P').
/// The multiplying vector is shorter than unity (A^2 <= 1), so filtering
/// can never beat the optimal-LO squeezing bound.
inline FilteredQ filtered_q(const ModeBasis& basis, const Eigen::VectorXd& mean_x,
                            const Eigen::VectorXd& mean_p, const Eigen::MatrixXd& v,
                            const FilterFunction& filter,
                            const Tolerances& tol = global_tolerances()) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  if (mean_x.size() != n || mean_p.size() != n || v.rows() != 2 * n || v.cols() != 2 * n)
    throw DimensionMismatch("filtered_q: mean/variance dimensions do not match basis");
  require_same_grid(basis.grid(), filter.grid, "filtered_q");
  if (!basis.is_real(tol))
    throw ApproximationDomainError(
        "filtered_q: complex mode functions are not supported (the filtered-Q form is "
        "derived for real bases)");
  const Eigen::MatrixXd f = basis.real_coefficients();
  const double dw = basis.grid().delta_omega;
  FilteredQ out;
  out.c_matrix =
      dw * f.transpose() * filter.c.array().square().matrix().asDiagonal() * f;
  const double d2 = mean_x.dot(out.c_matrix * mean_x) + mean_p.dot(out.c_matrix * mean_p);
  if (d2 <= 0)
    throw UndefinedQ("filtered_q: filter blocks the entire field, Q undefined");
  const double d = std::sqrt(d2);
  Eigen::VectorXd u(2 * n);
  u.head(n) = out.c_matrix * mean_x / d;
  u.tail(n) = out.c_matrix * mean_p / d;
  out.a_squared = u.squaredNorm();
  out.q_f = 2.0 * u.dot(v * u) - out.a_squared;
  return out;
}

}  // namespace pulsemodes
