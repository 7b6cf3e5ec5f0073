#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "pulsemodes/errors.hpp"
#include "pulsemodes/mode_functions.hpp"
#include "pulsemodes/quadrature_transform.hpp"
#include "pulsemodes/rng.hpp"
#include "pulsemodes/tolerances.hpp"

namespace pulsemodes {

enum class Quad { X, P };

/// Gaussian state of N modes: mean quadrature vector (X_1..X_N, P_1..P_N)
/// and symmetric 2N x 2N variance matrix, vacuum = I/2 (hbar = 1,
/// x = (a + a^dag)/sqrt(2)). Mean amplitudes follow X = sqrt(2) Re beta,
/// P = sqrt(2) Im beta (the global phase convention adopted here).
struct GaussianState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd variance;
  std::string label;

  std::size_t num_modes() const { return static_cast<std::size_t>(mean.size()) / 2; }

  double& mean_of(Quad q, std::size_t k) { return mean[index(q, k)]; }
  double mean_of(Quad q, std::size_t k) const { return mean[index(q, k)]; }
  double var_of(Quad q, std::size_t k, Quad q2, std::size_t k2) const {
    return variance(index(q, k), index(q2, k2));
  }

  Eigen::Index index(Quad q, std::size_t k) const {
    return static_cast<Eigen::Index>(q == Quad::X ? k : num_modes() + k);
  }
};

inline GaussianState vacuum(std::size_t n_modes, std::string label = {}) {
  if (n_modes == 0) throw InvalidArgument("vacuum: need at least one mode");
  GaussianState s;
  const auto d = static_cast<Eigen::Index>(2 * n_modes);
  s.mean = Eigen::VectorXd::Zero(d);
  s.variance = 0.5 * Eigen::MatrixXd::Identity(d, d);
  s.label = std::move(label);
  return s;
}

inline GaussianState coherent(const Eigen::VectorXcd& beta, std::string label = {}) {
  GaussianState s = vacuum(static_cast<std::size_t>(beta.size()), std::move(label));
  const auto n = beta.size();
  s.mean.head(n) = std::sqrt(2.0) * beta.real();
  s.mean.tail(n) = std::sqrt(2.0) * beta.imag();
  return s;
}

/// Per-mode squeezed vacuum with the given X variances; P variances default
/// to the minimum-uncertainty partners 1/(4 V_XX).
inline GaussianState squeezed_vacuum(const Eigen::VectorXd& v_xx, std::string label = {}) {
  for (Eigen::Index k = 0; k < v_xx.size(); ++k)
    if (!(v_xx[k] > 0))
      throw UncertaintyViolation("squeezed_vacuum: variances must be positive");
  GaussianState s = vacuum(static_cast<std::size_t>(v_xx.size()), std::move(label));
  for (Eigen::Index k = 0; k < v_xx.size(); ++k) {
    s.variance(k, k) = v_xx[k];
    s.variance(v_xx.size() + k, v_xx.size() + k) = 1.0 / (4.0 * v_xx[k]);
  }
  return s;
}

/// Full validity check: symmetry, per-mode 2x2 uncertainty
/// (V_XX V_PP - V_XP^2 >= 1/4 - slack), and positive definiteness.
/// Throws UncertaintyViolation with a diagnostic on failure.
inline void validate(const GaussianState& s, const Tolerances& tol = global_tolerances()) {
  const auto d = s.mean.size();
  if (s.variance.rows() != d || s.variance.cols() != d || d % 2 != 0 || d == 0)
    throw DimensionMismatch("validate: mean/variance dimensions inconsistent");
  const double asym = (s.variance - s.variance.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol.symmetry)
    throw UncertaintyViolation("validate: variance asymmetric by " + std::to_string(asym));
  const std::size_t n = s.num_modes();
  for (std::size_t k = 0; k < n; ++k) {
    const double vxx = s.var_of(Quad::X, k, Quad::X, k);
    const double vpp = s.var_of(Quad::P, k, Quad::P, k);
    const double vxp = s.var_of(Quad::X, k, Quad::P, k);
    if (vxx * vpp - vxp * vxp < 0.25 - tol.uncertainty_slack)
      throw UncertaintyViolation("validate: mode " + std::to_string(k) +
                                 " violates the uncertainty relation");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.variance,
                                                    Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0)
    throw UncertaintyViolation("validate: variance matrix is not positive definite");
}

/// Mode state -> frequency-bin state: xi = Z^T mu, V' = Z^T (V - I/2) Z + I/2.
/// All modes outside the basis are vacuum; the vacuum complement is never
/// materialized.
inline GaussianState transform_to_frequency(const GaussianState& s, const ModeBasis& basis,
                                            const Tolerances& tol = global_tolerances()) {
  if (s.num_modes() != basis.size())
    throw DimensionMismatch("transform_to_frequency: state has " +
                            std::to_string(s.num_modes()) + " modes, basis " +
                            std::to_string(basis.size()));
  const QuadratureTransform t = build_z(basis, tol);
  const auto d = s.mean.size();
  const auto bd = static_cast<Eigen::Index>(2 * t.n_bins);
  GaussianState out;
  out.mean = t.z.transpose() * s.mean;
  out.variance =
      t.z.transpose() * (s.variance - 0.5 * Eigen::MatrixXd::Identity(d, d)) * t.z +
      0.5 * Eigen::MatrixXd::Identity(bd, bd);
  out.label = "frequency-bins";
  return out;
}

/// Frequency-bin state -> mode state: mu = Z xi, V = Z V' Z^T.
inline GaussianState transform_to_modes(const GaussianState& s, const ModeBasis& basis,
                                        std::string label = {},
                                        const Tolerances& tol = global_tolerances()) {
  if (s.num_modes() != basis.num_bins())
    throw GridMismatch("transform_to_modes: state dimension does not match basis grid");
  const QuadratureTransform t = build_z(basis, tol);
  GaussianState out;
  out.mean = t.z * s.mean;
  out.variance = t.z * s.variance * t.z.transpose();
  out.label = std::move(label);
  return out;
}

/// Raw moments <mu^order> of one quadrature, order 1..4, from the Gaussian
/// closed forms (orders 3 and 4 are Gaussian-only identities).
inline double moment(const GaussianState& s, Quad q, std::size_t k, int order) {
  const double m = s.mean_of(q, k);
  const double v = s.var_of(q, k, q, k);
  switch (order) {
    case 1: return m;
    case 2: return m * m + v;
    case 3: return m * m * m + 3.0 * m * v;
    case 4: return m * m * m * m + 6.0 * m * m * v + 3.0 * v * v;
    default: throw InvalidArgument("moment: order must be 1..4");
  }
}

/// Symmetrized second moment (1/2)<{mu_a, mu_b}> = m_a m_b + V_ab.
inline double pair_moment_second(const GaussianState& s, Quad qa, std::size_t ka, Quad qb,
                                 std::size_t kb) {
  return s.mean_of(qa, ka) * s.mean_of(qb, kb) + s.var_of(qa, ka, qb, kb);
}

/// Symmetrized fourth moment (1/2)<{mu_a^2, mu_b^2}>, including the -1/2
/// ordering correction when (a, b) are conjugate quadratures of one mode.
inline double pair_moment_fourth(const GaussianState& s, Quad qa, std::size_t ka, Quad qb,
                                 std::size_t kb) {
  const double ma = s.mean_of(qa, ka), mb = s.mean_of(qb, kb);
  const double va = s.var_of(qa, ka, qa, ka), vb = s.var_of(qb, kb, qb, kb);
  const double vab = s.var_of(qa, ka, qb, kb);
  const bool conjugate = (ka == kb) && (qa != qb);
  return ma * ma * mb * mb + ma * ma * vb + mb * mb * va + va * vb + 4.0 * ma * mb * vab +
         2.0 * vab * vab - (conjugate ? 0.5 : 0.0);
}

/// Symplectic pairing a^T Omega b with Omega = [[0, I], [-I, 0]] in the
/// (X..., P...) ordering.
inline double symplectic_pairing(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() % 2 != 0)
    throw DimensionMismatch("symplectic_pairing: need equal even-dimensional vectors");
  const auto n = a.size() / 2;
  return a.head(n).dot(b.tail(n)) - a.tail(n).dot(b.head(n));
}

struct EliminationResult {
  GaussianState state;
  ModeBasis basis;
  Eigen::MatrixXd quadrature_rotation;  // S with mu_new = S mu_old
};

/// Concentrate all coherent amplitude in mode 1 by a unitary mode
/// redefinition. The new first mode's amplitude magnitude equals
/// sqrt(sum |beta_m|^2); all other new modes have zero mean. The variance
/// matrix transforms congruently and the total photon number is preserved.
inline EliminationResult eliminate_coherent_amplitudes(
    const GaussianState& s, const ModeBasis& basis,
    const Tolerances& tol = global_tolerances()) {
  const std::size_t n = s.num_modes();
  if (n != basis.size())
    throw DimensionMismatch("eliminate_coherent_amplitudes: state/basis size mismatch");
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::VectorXcd beta(ni);
  beta.real() = s.mean.head(ni) / std::sqrt(2.0);
  beta.imag() = s.mean.tail(ni) / std::sqrt(2.0);
  const double total = beta.norm();
  if (total <= tol.amplitude_floor)
    throw NoCoherentAmplitude("eliminate_coherent_amplitudes: all amplitudes vanish");

  bool concentrated = true;
  for (Eigen::Index m = 1; m < ni; ++m)
    if (std::abs(beta[m]) > tol.amplitude_floor) concentrated = false;
  if (concentrated) {
    return EliminationResult{s, basis,
                             Eigen::MatrixXd::Identity(2 * ni, 2 * ni)};
  }

  // Unitary operator-coefficient matrix H acting on the annihilation
  // operators, first row = conj(beta)/|beta|, completed by Gram-Schmidt
  // over the standard basis.
  Eigen::MatrixXcd h(ni, ni);
  h.row(0) = beta.conjugate().transpose() / total;
  Eigen::Index filled = 1;
  for (Eigen::Index e = 0; e < ni && filled < ni; ++e) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(ni);
    v[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index r = 0; r < filled; ++r)
        v -= h.row(r).adjoint() * (h.row(r) * v)(0);
    const double nv = v.norm();
    if (nv > 1e-8) h.row(filled++) = (v / nv).adjoint();
  }
  if (filled != ni)
    throw FactorizationError("eliminate_coherent_amplitudes: failed to complete unitary");

  // Quadrature action of h = H b: X_new = Re(H) X - Im(H) P, etc.
  Eigen::MatrixXd rot(2 * ni, 2 * ni);
  rot.topLeftCorner(ni, ni) = h.real();
  rot.topRightCorner(ni, ni) = -h.imag();
  rot.bottomLeftCorner(ni, ni) = h.imag();
  rot.bottomRightCorner(ni, ni) = h.real();

  GaussianState out;
  out.mean = rot * s.mean;
  out.variance = rot * s.variance * rot.transpose();
  out.label = s.label;

  // Mode functions matching the new operators under the Z-matrix sign
  // convention used throughout: coefficients are the conjugated rows of H.
  const Eigen::MatrixXcd new_modes = basis.coefficients() * h.adjoint();
  return EliminationResult{std::move(out), ModeBasis(basis.grid(), new_modes, tol),
                           std::move(rot)};
}

/// Draw `count` independent samples from N(mean, V). Rows are draws.
/// The factorization requires strictly positive eigenvalues.
inline Eigen::MatrixXd sample(const GaussianState& s, std::size_t count, std::uint64_t seed) {
  const auto d = s.mean.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.variance);
  if (es.info() != Eigen::Success)
    throw FactorizationError("sample: eigendecomposition failed");
  if (es.eigenvalues().minCoeff() <= 0)
    throw FactorizationError("sample: variance matrix is not positive definite");
  const Eigen::MatrixXd l =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal();
  NormalSampler rng(seed);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), d);
  Eigen::VectorXd z(d);
  for (std::size_t i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z[j] = rng();
    out.row(static_cast<Eigen::Index>(i)) = (s.mean + l * z).transpose();
  }
  return out;
}

}  // namespace pulsemodes
