#pragma once

#include <Eigen/Core>
#include <string>

#include "pulsemodes/mode_functions.hpp"

namespace pulsemodes {

/// Real matrix connecting mode quadratures (X_1..X_N, P_1..P_N) to
/// frequency-bin quadratures (x_1..x_B, p_1..p_B): mu = Z xi, xi = Z^T mu.
/// Blocks: Z[X,x] = Z[P,p] = Re f_k(w_j) sqrt(dw),
///         Z[X,p] = -Z[P,x] = Im f_k(w_j) sqrt(dw).
/// Rows are orthonormal: Z Z^T = I(2N).
struct QuadratureTransform {
  std::size_t n_modes = 0;
  std::size_t n_bins = 0;
  Eigen::MatrixXd z;  // 2N x 2B
};

inline QuadratureTransform build_z(const ModeBasis& basis,
                                   const Tolerances& tol = global_tolerances()) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  const auto b = static_cast<Eigen::Index>(basis.num_bins());
  const double root_dw = std::sqrt(basis.grid().delta_omega);
  QuadratureTransform t;
  t.n_modes = basis.size();
  t.n_bins = basis.num_bins();
  t.z.resize(2 * n, 2 * b);
  const Eigen::MatrixXd re = basis.coefficients().real().transpose() * root_dw;  // N x B
  const Eigen::MatrixXd im = basis.coefficients().imag().transpose() * root_dw;
  t.z.block(0, 0, n, b) = re;
  t.z.block(0, b, n, b) = im;
  t.z.block(n, 0, n, b) = -im;
  t.z.block(n, b, n, b) = re;
  const Eigen::MatrixXd gram = t.z * t.z.transpose();
  const double defect =
      (gram - Eigen::MatrixXd::Identity(2 * n, 2 * n)).cwiseAbs().maxCoeff();
  if (defect > tol.orthonormality)
    throw InvalidArgument("build_z: Z Z^T deviates from identity by " + std::to_string(defect));
  return t;
}

}  // namespace pulsemodes
