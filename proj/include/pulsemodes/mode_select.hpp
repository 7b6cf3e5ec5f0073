#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "pulsemodes/errors.hpp"
#include "pulsemodes/gaussian_state.hpp"
#include "pulsemodes/homodyne.hpp"
#include "pulsemodes/mode_functions.hpp"
#include "pulsemodes/quadrature_transform.hpp"

namespace pulsemodes {

/// Measurement backend for the operational mode-selection procedure:
/// given a temporary orthonormal basis of M functions, return the
/// 2M x 2M quadrature variance matrix (X_1..X_M, P_1..P_M ordering).
using MeasurementFn = std::function<Eigen::MatrixXd(const ModeBasis&)>;

struct ModeSelectResult {
  ModeBasis basis;              // f1 first, then accepted modes in order
  Eigen::VectorXd max_variances;  // per accepted mode, non-increasing from index 1
  std::size_t n_modes = 0;
  std::size_t rounds = 0;
};

/// Raised when the temporary family is exhausted before the variance
/// threshold is reached; carries the partial result.
struct ExhaustedBasis : Error {
  ExhaustedBasis(ModeSelectResult r, const std::string& msg)
      : Error("exhausted_basis", msg), partial(std::move(r)) {}
  ModeSelectResult partial;
};

/// Chebyshev-polynomial multiples of f1 on the grid mapped to [-1, 1]:
/// a well conditioned family spanning smooth perturbations of the envelope.
inline std::vector<ModeFunction> default_candidate_family(const ModeFunction& f1,
                                                          std::size_t count) {
  const FrequencyGrid& grid = f1.grid;
  const double mid = 0.5 * (grid.omega_start + grid.omega_end());
  const double half = 0.5 * (grid.omega_end() - grid.omega_start);
  std::vector<ModeFunction> family;
  family.reserve(count);
  family.push_back(f1);
  Eigen::VectorXd t_prev = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(grid.num_bins));
  Eigen::VectorXd t_curr(static_cast<Eigen::Index>(grid.num_bins));
  Eigen::VectorXd x(static_cast<Eigen::Index>(grid.num_bins));
  for (std::size_t j = 0; j < grid.num_bins; ++j)
    x[static_cast<Eigen::Index>(j)] = (grid.center(j) - mid) / half;
  t_curr = x;
  for (std::size_t k = 1; k < count; ++k) {
    family.emplace_back(grid, t_curr.cast<Complex>().cwiseProduct(f1.values).eval());
    const Eigen::VectorXd t_next = 2.0 * x.cwiseProduct(t_curr) - t_prev;
    t_prev = t_curr;
    t_curr = t_next;
  }
  return family;
}

namespace detail {

inline void check_measurement(const Eigen::MatrixXd& v, std::size_t m_modes) {
  const auto d = static_cast<Eigen::Index>(2 * m_modes);
  if (v.rows() != d || v.cols() != d)
    throw MeasurementInvalid("select_modes: measurement returned a " +
                             std::to_string(v.rows()) + "x" + std::to_string(v.cols()) +
                             " matrix, expected " + std::to_string(d) + "x" +
                             std::to_string(d));
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  if ((v - v.transpose()).cwiseAbs().maxCoeff() > 1e-6 * scale)
    throw MeasurementInvalid("select_modes: measurement returned an asymmetric matrix");
}

}  // namespace detail

/// Operational selection of a minimal mode set (measured envelope first):
/// repeatedly measure the variance matrix on [accepted modes + orthonormal
/// complement], drop the accepted rows/columns, diagonalize the reduced
/// matrix, and accept a new mode from the leading eigenvector
///   f_new = sum_k (W_1k + i W_1,k+M) comp_k
/// until the leading variance is within epsilon of the vacuum value 1/2.
/// The temporary set is re-orthogonalized and re-measured every round; the
/// reduced-matrix diagonalization is never reused across rounds (a plain
/// orthogonal diagonalization is not a canonical transformation).
inline ModeSelectResult select_modes(const MeasurementFn& measure, const ModeFunction& f1,
                                     std::size_t temp_size, double epsilon,
                                     const std::vector<ModeFunction>& candidate_family = {},
                                     const Tolerances& tol = global_tolerances()) {
  if (temp_size < 2) throw InvalidArgument("select_modes: temp_size must be >= 2");
  if (!(epsilon > 0)) throw InvalidArgument("select_modes: epsilon must be > 0");
  if (!is_normalized(f1, tol))
    throw InvalidArgument("select_modes: f1 must be normalized");

  const std::vector<ModeFunction> family =
      candidate_family.empty() ? default_candidate_family(f1, temp_size) : candidate_family;
  if (family.size() < temp_size)
    throw InvalidArgument("select_modes: candidate family smaller than temp_size");
  Eigen::MatrixXcd family_matrix(f1.values.size(), static_cast<Eigen::Index>(family.size()));
  for (std::size_t i = 0; i < family.size(); ++i) {
    require_same_grid(f1.grid, family[i].grid, "select_modes");
    family_matrix.col(static_cast<Eigen::Index>(i)) = family[i].values;
  }

  ModeBasis accepted = gram_schmidt({f1}, tol);
  std::vector<double> max_variances;

  auto result = [&](std::size_t rounds) {
    ModeSelectResult r{accepted,
                       Eigen::Map<const Eigen::VectorXd>(max_variances.data(),
                                                         static_cast<Eigen::Index>(
                                                             max_variances.size())),
                       accepted.size(), rounds};
    return r;
  };

  std::size_t round = 0;
  while (true) {
    ++round;
    const Eigen::MatrixXcd complement =
        orthonormal_complement(accepted, family_matrix, tol);
    if (complement.cols() == 0) {
      throw ExhaustedBasis(result(round),
                           "select_modes: temporary family exhausted before the variance "
                           "threshold was reached");
    }
    const auto k = static_cast<Eigen::Index>(accepted.size());
    const auto m = complement.cols();
    Eigen::MatrixXcd joint(family_matrix.rows(), k + m);
    joint << accepted.coefficients(), complement;
    const ModeBasis temp(f1.grid, joint, tol);

    const Eigen::MatrixXd v = measure(temp);
    detail::check_measurement(v, temp.size());
    if (round == 1) {
      // Mode 1's own largest quadrature variance, reported alongside.
      max_variances.push_back(std::max(v(0, 0), v(k + m, k + m)));
    }

    // Reduced matrix: drop rows/columns of the accepted modes, keeping
    // the [X-block, P-block] layout of the remaining temporary modes.
    Eigen::MatrixXd reduced(2 * m, 2 * m);
    const auto total = k + m;
    auto src = [&](Eigen::Index i) { return i < m ? k + i : total + k + (i - m); };
    for (Eigen::Index i = 0; i < 2 * m; ++i)
      for (Eigen::Index j = 0; j < 2 * m; ++j) reduced(i, j) = v(src(i), src(j));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (reduced + reduced.transpose()));
    const Eigen::Index top = reduced.rows() - 1;  // eigenvalues ascending
    const double leading = es.eigenvalues()[top];
    Eigen::VectorXd w = es.eigenvectors().col(top);
    for (Eigen::Index r = 0; r < w.size(); ++r) {
      if (std::abs(w[r]) > 1e-12) {
        if (w[r] < 0) w *= -1.0;
        break;
      }
    }

    if (leading <= 0.5 + epsilon) return result(round);

    Eigen::VectorXcd coeff(m);
    for (Eigen::Index j = 0; j < m; ++j) coeff[j] = Complex(w[j], w[m + j]);
    const Eigen::VectorXcd new_mode = complement * coeff;
    Eigen::MatrixXcd grown(family_matrix.rows(), k + 1);
    grown << accepted.coefficients(), new_mode;
    accepted = ModeBasis(f1.grid, grown, tol);
    max_variances.push_back(leading);
  }
}

/// Noiseless measurement backend: projects the exact frequency-bin
/// statistics of `bins_state` onto any requested temporary basis.
inline MeasurementFn exact_measurement(GaussianState bins_state) {
  return [state = std::move(bins_state)](const ModeBasis& basis) {
    const QuadratureTransform t = build_z(basis);
    return Eigen::MatrixXd(t.z * state.variance * t.z.transpose());
  };
}

/// Sampled measurement backend: runs the full homodyne tomography schedule
/// against the bin-basis state with `shots` samples per LO setting.
inline MeasurementFn homodyne_measurement(GaussianState bins_state, std::size_t shots,
                                          std::uint64_t seed) {
  return [state = std::move(bins_state), shots, seed](const ModeBasis& basis) {
    const QuadratureTransform t = build_z(basis);
    GaussianState mode_state;
    mode_state.mean = t.z * state.mean;
    mode_state.variance = t.z * state.variance * t.z.transpose();
    const auto schedule = tomography_schedule(basis.size());
    Eigen::VectorXd measured(static_cast<Eigen::Index>(schedule.size()));
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      const Eigen::VectorXd samples =
          measured_quadrature_samples(mode_state, schedule[i], shots, derive_seed(seed, i));
      const double mean = samples.mean();
      measured[static_cast<Eigen::Index>(i)] =
          (samples.array() - mean).square().sum() / (static_cast<double>(shots) - 1.0);
    }
    return determine_variance_matrix(measured, basis.size(), schedule).v;
  };
}

}  // namespace pulsemodes
