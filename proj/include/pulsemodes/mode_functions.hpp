#pragma once

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "pulsemodes/errors.hpp"
#include "pulsemodes/grid.hpp"
#include "pulsemodes/tolerances.hpp"

namespace pulsemodes {

using Complex = std::complex<double>;

/// Complex spectral envelope on a frequency grid. Values carry dimension
/// frequency^(-1/2) so that sum |f_j|^2 dw is dimensionless.
struct ModeFunction {
  FrequencyGrid grid;
  Eigen::VectorXcd values;

  ModeFunction() = default;
  ModeFunction(FrequencyGrid g, Eigen::VectorXcd v) : grid(g), values(std::move(v)) {
    if (static_cast<std::size_t>(values.size()) != grid.num_bins)
      throw DimensionMismatch("ModeFunction: values length must equal grid.num_bins");
  }
};

/// Midpoint-rule inner product sum_j conj(f_j) g_j dw.
inline Complex inner_product(const ModeFunction& f, const ModeFunction& g) {
  require_same_grid(f.grid, g.grid, "inner_product");
  return f.values.dot(g.values) * f.grid.delta_omega;  // Eigen dot conjugates the left factor
}

inline double norm(const ModeFunction& f) {
  return std::sqrt(f.values.squaredNorm() * f.grid.delta_omega);
}

inline bool is_normalized(const ModeFunction& f,
                          const Tolerances& tol = global_tolerances()) {
  return std::abs(f.values.squaredNorm() * f.grid.delta_omega - 1.0) <= tol.normalization;
}

inline double max_imag(const Eigen::VectorXcd& v) {
  return v.imag().cwiseAbs().maxCoeff();
}

/// Ordered orthonormal family of mode functions on one grid; columns of
/// `coefficients` are the mode envelopes. Construction checks the Gram
/// matrix against the identity.
class ModeBasis {
 public:
  ModeBasis() = default;
  ModeBasis(FrequencyGrid grid, Eigen::MatrixXcd modes,
            const Tolerances& tol = global_tolerances())
      : grid_(grid), modes_(std::move(modes)) {
    if (static_cast<std::size_t>(modes_.rows()) != grid_.num_bins)
      throw DimensionMismatch("ModeBasis: mode length must equal grid.num_bins");
    if (modes_.cols() == 0) throw InvalidArgument("ModeBasis: needs at least one mode");
    const Eigen::MatrixXcd gram = modes_.adjoint() * modes_ * grid_.delta_omega;
    const double defect = (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols()))
                              .cwiseAbs()
                              .maxCoeff();
    if (defect > tol.orthonormality)
      throw InvalidArgument("ModeBasis: Gram matrix deviates from identity by " +
                            std::to_string(defect));
  }

  const FrequencyGrid& grid() const { return grid_; }
  std::size_t size() const { return static_cast<std::size_t>(modes_.cols()); }
  std::size_t num_bins() const { return grid_.num_bins; }
  const Eigen::MatrixXcd& coefficients() const { return modes_; }
  ModeFunction mode(std::size_t k) const {
    return ModeFunction(grid_, modes_.col(static_cast<Eigen::Index>(k)));
  }

  Eigen::MatrixXcd gram() const { return modes_.adjoint() * modes_ * grid_.delta_omega; }

  double max_imaginary_part() const { return modes_.imag().cwiseAbs().maxCoeff(); }
  bool is_real(const Tolerances& tol = global_tolerances()) const {
    return max_imaginary_part() <= tol.realness;
  }
  /// Real part matrix; callers must have checked is_real().
  Eigen::MatrixXd real_coefficients() const { return modes_.real(); }

 private:
  FrequencyGrid grid_;
  Eigen::MatrixXcd modes_;  // num_bins x N
};

namespace detail {

/// Modified Gram-Schmidt with one re-orthogonalization pass. When
/// `skip_dependent` is set, near-dependent candidates are dropped instead
/// of raising; otherwise DegenerateBasis reports the offending index.
/// A candidate counts as dependent when its squared residual falls below
/// tol.degenerate_basis relative to its squared norm (matching a smallest
/// Gram-matrix singular value at that scale).
inline Eigen::MatrixXcd orthonormalize(const FrequencyGrid& grid,
                                       const Eigen::MatrixXcd& candidates,
                                       const Tolerances& tol, bool skip_dependent,
                                       Eigen::Index keep_prefix = 0) {
  const double dw = grid.delta_omega;
  std::vector<Eigen::VectorXcd> kept;
  kept.reserve(static_cast<std::size_t>(candidates.cols()));
  for (Eigen::Index i = 0; i < keep_prefix; ++i) kept.push_back(candidates.col(i));
  for (Eigen::Index i = keep_prefix; i < candidates.cols(); ++i) {
    Eigen::VectorXcd v = candidates.col(i);
    const double original = v.squaredNorm() * dw;
    if (!(original > 0)) {
      if (skip_dependent) continue;
      throw DegenerateBasis(static_cast<std::size_t>(i), "gram_schmidt: candidate " +
                                                             std::to_string(i) + " is zero");
    }
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : kept) v -= q * (q.dot(v) * dw);
    const double residual = v.squaredNorm() * dw;
    if (residual <= tol.degenerate_basis * original) {
      if (skip_dependent) continue;
      throw DegenerateBasis(static_cast<std::size_t>(i),
                            "gram_schmidt: candidate " + std::to_string(i) +
                                " is linearly dependent on its predecessors");
    }
    kept.push_back(v / std::sqrt(residual));
  }
  Eigen::MatrixXcd out(candidates.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = kept[c];
  return out;
}

}  // namespace detail

/// Orthonormalize a family of candidate envelopes; the first output is the
/// normalized first candidate and the span is preserved.
inline ModeBasis gram_schmidt(const std::vector<ModeFunction>& candidates,
                              const Tolerances& tol = global_tolerances()) {
  if (candidates.empty()) throw InvalidArgument("gram_schmidt: no candidates");
  const FrequencyGrid grid = candidates.front().grid;
  Eigen::MatrixXcd m(grid.num_bins, static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    require_same_grid(grid, candidates[i].grid, "gram_schmidt");
    m.col(static_cast<Eigen::Index>(i)) = candidates[i].values;
  }
  return ModeBasis(grid, detail::orthonormalize(grid, m, tol, /*skip_dependent=*/false), tol);
}

/// Orthonormal complement of `accepted` inside span(accepted + candidates):
/// the accepted columns are kept verbatim, candidates are projected and
/// dependent ones dropped. Returns only the complement columns.
inline Eigen::MatrixXcd orthonormal_complement(const ModeBasis& accepted,
                                               const Eigen::MatrixXcd& candidates,
                                               const Tolerances& tol = global_tolerances()) {
  Eigen::MatrixXcd all(accepted.coefficients().rows(),
                       accepted.coefficients().cols() + candidates.cols());
  all << accepted.coefficients(), candidates;
  const Eigen::MatrixXcd ortho = detail::orthonormalize(
      accepted.grid(), all, tol, /*skip_dependent=*/true, accepted.coefficients().cols());
  return ortho.rightCols(ortho.cols() - accepted.coefficients().cols());
}

/// First four soliton perturbation mode functions (sech family with
/// spectral width omega_o), sampled on the grid and re-orthonormalized so
/// the ModeBasis invariant holds at finite resolution and truncation.
/// f1, f2, f3 are real (even/odd/even), f4 purely imaginary (odd).
inline ModeBasis haus_lai_basis(double omega_o, const FrequencyGrid& grid,
                                const Tolerances& tol = global_tolerances()) {
  if (!(omega_o > 0)) throw InvalidArgument("haus_lai_basis: omega_o must be > 0");
  if (grid.omega_start > -6.0 * omega_o || grid.omega_end() < 6.0 * omega_o) {
    // Norm defect of the dominant sech mode over the offered window.
    const double lo = grid.omega_start / omega_o;
    const double hi = grid.omega_end() / omega_o;
    const double captured = (std::tanh(hi) - std::tanh(lo)) / 2.0;
    throw TruncationError(1.0 - captured,
                          "haus_lai_basis: grid must span at least [-6, 6] omega_o");
  }
  const double inv_sqrt_2w = 1.0 / std::sqrt(2.0 * omega_o);
  const double c3 = 1.0 / std::sqrt(1.0 / 3.0 + M_PI * M_PI / 9.0);
  const double c4 = std::sqrt(3.0) / std::sqrt(M_PI * M_PI / 9.0 - 1.0);
  Eigen::MatrixXcd modes(grid.num_bins, 4);
  for (std::size_t j = 0; j < grid.num_bins; ++j) {
    const double u = grid.center(j) / omega_o;
    const double sech = 1.0 / std::cosh(u);
    const double tanh = std::tanh(u);
    const auto row = static_cast<Eigen::Index>(j);
    modes(row, 0) = inv_sqrt_2w * sech;
    modes(row, 1) = std::sqrt(3.0 / (2.0 * omega_o)) * tanh * sech;
    modes(row, 2) = c3 * inv_sqrt_2w * (2.0 * u * tanh * sech - sech);
    modes(row, 3) = Complex(0.0, c4 * inv_sqrt_2w * (tanh * sech - (2.0 / 3.0) * u * sech));
  }
  return ModeBasis(grid, detail::orthonormalize(grid, modes, tol, false), tol);
}

}  // namespace pulsemodes
