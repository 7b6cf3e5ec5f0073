#pragma once

#include <Eigen/Core>
#include <cstddef>

#include "pulsemodes/errors.hpp"

namespace pulsemodes {

/// Uniform discretization of angular frequency into bins of width
/// delta_omega. Bin j covers [omega_start + j*dw, omega_start + (j+1)*dw]
/// with center omega_start + (j + 1/2)*dw. Units are any consistent
/// angular-frequency unit; nothing downstream assumes a particular one.
struct FrequencyGrid {
  double omega_start = 0.0;
  double delta_omega = 0.0;
  std::size_t num_bins = 0;

  FrequencyGrid() = default;
  FrequencyGrid(double start, double delta, std::size_t bins)
      : omega_start(start), delta_omega(delta), num_bins(bins) {
    if (!(delta_omega > 0)) throw InvalidArgument("FrequencyGrid: delta_omega must be > 0");
    if (num_bins < 2) throw InvalidArgument("FrequencyGrid: num_bins must be >= 2");
  }

  double center(std::size_t j) const { return omega_start + (static_cast<double>(j) + 0.5) * delta_omega; }
  double omega_end() const { return omega_start + static_cast<double>(num_bins) * delta_omega; }

  Eigen::VectorXd centers() const {
    Eigen::VectorXd c(static_cast<Eigen::Index>(num_bins));
    for (std::size_t j = 0; j < num_bins; ++j) c[static_cast<Eigen::Index>(j)] = center(j);
    return c;
  }

  bool operator==(const FrequencyGrid& other) const {
    return omega_start == other.omega_start && delta_omega == other.delta_omega &&
           num_bins == other.num_bins;
  }
  bool operator!=(const FrequencyGrid& other) const { return !(*this == other); }
};

inline void require_same_grid(const FrequencyGrid& a, const FrequencyGrid& b, const char* what) {
  if (a != b) throw GridMismatch(std::string(what) + ": operands live on different grids");
}

}  // namespace pulsemodes
