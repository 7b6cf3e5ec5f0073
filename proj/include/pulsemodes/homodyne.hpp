#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pulsemodes/errors.hpp"
#include "pulsemodes/gaussian_state.hpp"
#include "pulsemodes/rng.hpp"

namespace pulsemodes {

/// Local oscillator envelope sum_k c_k f_k over a mode basis. Balanced
/// homodyne detection with this LO measures the quadrature combination
/// u . mu with u = (Re c, Im c) normalized: c = e_k measures X_k,
/// c = i e_k measures P_k, mixed forms give cross elements.
struct LocalOscillatorShape {
  Eigen::VectorXcd coefficients;
  bool normalized = false;

  static LocalOscillatorShape from(Eigen::VectorXcd c) {
    const double n = c.norm();
    if (n <= 1e-15) throw DegenerateLO("LocalOscillatorShape: zero envelope");
    return LocalOscillatorShape{c / n, true};
  }
};

/// Projection direction u over (X..., P...), unit length.
inline Eigen::VectorXd lo_projection(const LocalOscillatorShape& lo) {
  const auto n = lo.coefficients.size();
  Eigen::VectorXd u(2 * n);
  u.head(n) = lo.coefficients.real();
  u.tail(n) = lo.coefficients.imag();
  const double norm = u.norm();
  if (norm <= 1e-15) throw DegenerateLO("lo_projection: zero local oscillator");
  return u / norm;
}

inline double measured_quadrature_mean(const GaussianState& s, const LocalOscillatorShape& lo) {
  if (static_cast<std::size_t>(lo.coefficients.size()) != s.num_modes())
    throw DimensionMismatch("measured_quadrature_mean: LO/state size mismatch");
  return lo_projection(lo).dot(s.mean);
}

/// u^T V u: the exact quadrature variance a noiseless balanced homodyne
/// detector reports for this LO shape.
inline double measured_quadrature_variance(const GaussianState& s,
                                           const LocalOscillatorShape& lo) {
  if (static_cast<std::size_t>(lo.coefficients.size()) != s.num_modes())
    throw DimensionMismatch("measured_quadrature_variance: LO/state size mismatch");
  const Eigen::VectorXd u = lo_projection(lo);
  return u.dot(s.variance * u);
}

/// Finite-statistics layer: draws from the Gaussian marginal N(u.mean, u^T V u).
inline Eigen::VectorXd measured_quadrature_samples(const GaussianState& s,
                                                   const LocalOscillatorShape& lo,
                                                   std::size_t shots, std::uint64_t seed) {
  if (shots < 1) throw InvalidArgument("measured_quadrature_samples: shots must be >= 1");
  const double mean = measured_quadrature_mean(s, lo);
  const double var = measured_quadrature_variance(s, lo);
  if (var < 0) throw FactorizationError("measured_quadrature_samples: negative variance");
  const double sd = std::sqrt(var);
  NormalSampler rng(seed);
  Eigen::VectorXd out(static_cast<Eigen::Index>(shots));
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = mean + sd * rng();
  return out;
}

/// The N(2N+1) local oscillator forms that determine every independent
/// element of V: f_k (X diagonals), i f_k (P diagonals), f_k + f_k'
/// (XX' cross), i(f_k + f_k') (PP' cross) for k < k', and f_k + i f_k'
/// for every ordered pair including k = k' (XP block). Combined shapes are
/// normalized so every measured value stays inside V's spectrum.
inline std::vector<LocalOscillatorShape> tomography_schedule(std::size_t n_modes) {
  if (n_modes < 1) throw InvalidArgument("tomography_schedule: need at least one mode");
  const auto n = static_cast<Eigen::Index>(n_modes);
  std::vector<LocalOscillatorShape> schedule;
  schedule.reserve(n_modes * (2 * n_modes + 1));
  auto unit = [n](Eigen::Index k) {
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n);
    c[k] = 1.0;
    return c;
  };
  for (Eigen::Index k = 0; k < n; ++k) schedule.push_back(LocalOscillatorShape::from(unit(k)));
  for (Eigen::Index k = 0; k < n; ++k)
    schedule.push_back(LocalOscillatorShape::from(Complex(0, 1) * unit(k)));
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = k + 1; l < n; ++l)
      schedule.push_back(LocalOscillatorShape::from(unit(k) + unit(l)));
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = k + 1; l < n; ++l)
      schedule.push_back(LocalOscillatorShape::from(Complex(0, 1) * (unit(k) + unit(l))));
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l)
      schedule.push_back(LocalOscillatorShape::from(unit(k) + Complex(0, 1) * unit(l)));
  return schedule;
}

struct TomographyResult {
  Eigen::MatrixXd v;
  double residual = 0.0;           // least-squares residual norm
  double condition_number = 0.0;   // of the schedule design matrix
};

namespace detail {

/// Design matrix mapping the N(2N+1) independent entries of V (upper
/// triangle, row-major) to the measured variances u^T V u.
inline Eigen::MatrixXd schedule_design_matrix(const std::vector<LocalOscillatorShape>& schedule,
                                              std::size_t n_modes) {
  const auto d = static_cast<Eigen::Index>(2 * n_modes);
  const auto unknowns = (d * (d + 1)) / 2;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(schedule.size()), unknowns);
  for (std::size_t row = 0; row < schedule.size(); ++row) {
    const Eigen::VectorXd u = lo_projection(schedule[row]);
    Eigen::Index col = 0;
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = a; b < d; ++b)
        m(static_cast<Eigen::Index>(row), col++) = (a == b ? u[a] * u[a] : 2.0 * u[a] * u[b]);
  }
  return m;
}

inline Eigen::MatrixXd unpack_symmetric(const Eigen::VectorXd& packed, Eigen::Index d) {
  Eigen::MatrixXd v(d, d);
  Eigen::Index col = 0;
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = a; b < d; ++b) {
      v(a, b) = packed[col];
      v(b, a) = packed[col];
      ++col;
    }
  return v;
}

}  // namespace detail

/// Solve the linear system relating scheduled variance measurements to V.
/// With noiseless inputs this reproduces V exactly; with sampled inputs it
/// returns the least-squares estimate plus the fit residual.
inline TomographyResult determine_variance_matrix(
    const Eigen::VectorXd& measurements, std::size_t n_modes,
    const std::vector<LocalOscillatorShape>& schedule) {
  if (static_cast<std::size_t>(measurements.size()) != schedule.size())
    throw DimensionMismatch("determine_variance_matrix: measurement/schedule length mismatch");
  const Eigen::MatrixXd m = detail::schedule_design_matrix(schedule, n_modes);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[sv.size() - 1] <= 1e-10 * sv[0])
    throw SingularSchedule("determine_variance_matrix: schedule does not determine V");
  TomographyResult out;
  out.condition_number = sv[0] / sv[sv.size() - 1];
  const Eigen::VectorXd packed = svd.solve(measurements);
  out.residual = (m * packed - measurements).norm();
  out.v = detail::unpack_symmetric(packed, static_cast<Eigen::Index>(2 * n_modes));
  return out;
}

inline TomographyResult determine_variance_matrix(const Eigen::VectorXd& measurements,
                                                  std::size_t n_modes) {
  return determine_variance_matrix(measurements, n_modes, tomography_schedule(n_modes));
}

}  // namespace pulsemodes
