#include <catch2/catch_amalgamated.hpp>

#include "pulsemodes/reconstruction.hpp"
#include "support/oracles.hpp"

using namespace pulsemodes;
using Catch::Approx;

namespace {

FrequencyGrid sym_grid(double half, std::size_t bins) {
  return FrequencyGrid(-half, 2.0 * half / static_cast<double>(bins), bins);
}

CorrelationData planted_correlation(const ModeBasis& basis, const Eigen::MatrixXd& vxx) {
  Eigen::VectorXd mean_x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  mean_x[0] = 1000.0;  // strong pulse, condition (i) comfortably satisfied
  return spectral_correlation_strongfield(basis, mean_x, vxx);
}

/// Closed-form eigenvalues of a symmetric 3x3 matrix via the trigonometric
/// solution of the characteristic polynomial.
Eigen::Vector3d cubic_eigenvalues(const Eigen::Matrix3d& a) {
  const double q = a.trace() / 3.0;
  const Eigen::Matrix3d b = a - q * Eigen::Matrix3d::Identity();
  const double p2 = (b * b).trace() / 6.0;
  const double p = std::sqrt(p2);
  double detb = b.determinant();
  double r = p > 0 ? detb / (2.0 * p * p * p) : 0.0;
  r = std::clamp(r, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  Eigen::Vector3d ev;
  ev[2] = q + 2.0 * p * std::cos(phi);
  ev[0] = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
  ev[1] = 3.0 * q - ev[0] - ev[2];
  return ev;
}

}  // namespace

TEST_CASE("reconstruction recovers planted variance blocks") {
  const FrequencyGrid g = sym_grid(8, 96);
  const ModeBasis hl = haus_lai_basis(1.0, g);
  const ModeBasis b3(g, hl.coefficients().leftCols(3));

  SECTION("zero correlation means vacuum-level variances") {
    CorrelationData corr;
    corr.grid = g;
    corr.c_normalized = Eigen::MatrixXd::Zero(96, 96);
    corr.mask = MaskArray::Constant(96, 96, false);
    const auto rec = reconstruct_vxx(corr, b3);
    REQUIRE((rec.v_xx - 0.5 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("diagonal plant") {
    Eigen::MatrixXd vxx = Eigen::MatrixXd::Zero(3, 3);
    vxx.diagonal() << 0.29, 1.39, 2.69;
    const auto rec = reconstruct_vxx(planted_correlation(b3, vxx), b3);
    REQUIRE((rec.v_xx - vxx).cwiseAbs().maxCoeff() < 1e-10);
  }

  SECTION("off-diagonal plant") {
    Eigen::MatrixXd vxx = Eigen::MatrixXd::Zero(3, 3);
    vxx.diagonal() << 0.29, 1.39, 2.69;
    vxx(0, 2) = vxx(2, 0) = 0.15;
    const auto rec = reconstruct_vxx(planted_correlation(b3, vxx), b3);
    REQUIRE(rec.v_xx(0, 2) == Approx(0.15).margin(1e-10));
    REQUIRE((rec.v_xx - vxx).cwiseAbs().maxCoeff() < 1e-10);
  }

  SECTION("random bases and arbitrary symmetric blocks round-trip") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
      const std::size_t n = 3 + static_cast<std::size_t>(rep % 3);
      const ModeBasis basis = oracles::random_real_basis(sym_grid(6, 64), n, gen);
      Eigen::MatrixXd vxx(n, n);
      for (Eigen::Index i = 0; i < vxx.rows(); ++i)
        for (Eigen::Index j = 0; j < vxx.cols(); ++j) vxx(i, j) = uni(gen);
      vxx = (0.5 * (vxx + vxx.transpose())).eval();
      const auto rec = reconstruct_vxx(planted_correlation(basis, vxx), basis);
      REQUIRE((rec.v_xx - vxx).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("masked-entry handling") {
  const FrequencyGrid g = sym_grid(8, 32);
  const ModeBasis hl = haus_lai_basis(1.0, g);
  const ModeBasis b1(g, hl.coefficients().leftCols(1));
  Eigen::MatrixXd vxx(1, 1);
  vxx << 0.3;
  CorrelationData corr = planted_correlation(b1, vxx);

  SECTION("one-sided masks are filled from the mirror entry") {
    corr.mask(3, 7) = true;
    const double mirror = corr.c_normalized(7, 3);
    corr.c_normalized(3, 7) = 99.0;  // garbage that must be ignored
    const auto rec = reconstruct_vxx(corr, b1);
    REQUIRE(rec.masked_fraction == Approx(1.0 / (32.0 * 32.0)));
    REQUIRE(rec.symmetric_fill_fraction == Approx(1.0));
    REQUIRE(rec.v_xx(0, 0) == Approx(0.3).margin(1e-10));
    (void)mirror;
  }

  SECTION("excessive masking raises InsufficientData") {
    for (Eigen::Index i = 0; i < 32; ++i)
      for (Eigen::Index j = 0; j < 32; ++j)
        if ((i + j) % 3 != 0) corr.mask(i, j) = true;
    REQUIRE_THROWS_AS(reconstruct_vxx(corr, b1), InsufficientData);
  }
}

TEST_CASE("reconstruction error propagation") {
  const FrequencyGrid g = sym_grid(8, 64);
  const ModeBasis hl = haus_lai_basis(1.0, g);
  const ModeBasis b1(g, hl.coefficients().leftCols(1));

  SECTION("zero noise gives a zero error matrix") {
    const Eigen::MatrixXd err =
        reconstruction_error(Eigen::MatrixXd::Zero(64, 64), b1);
    REQUIRE(err.cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("error scales linearly with sigma") {
    const Eigen::MatrixXd e1 =
        reconstruction_error(Eigen::MatrixXd::Constant(64, 64, 0.1), b1);
    const Eigen::MatrixXd e2 =
        reconstruction_error(Eigen::MatrixXd::Constant(64, 64, 0.2), b1);
    REQUIRE((2.0 * e1 - e2).cwiseAbs().maxCoeff() < 1e-14);
  }

  SECTION("uniform sigma on one mode: (sigma/2) dw, confirmed by Monte-Carlo") {
    const double sigma = 0.1;
    const Eigen::MatrixXd sig = Eigen::MatrixXd::Constant(64, 64, sigma);
    const Eigen::MatrixXd err = reconstruction_error(sig, b1);
    // sum_j f^2 dw = 1 makes the quadrature collapse to sigma/2 * dw
    REQUIRE(err(0, 0) == Approx(0.5 * sigma * g.delta_omega).epsilon(1e-10));

    Eigen::MatrixXd vxx(1, 1);
    vxx << 0.3;
    const CorrelationData corr = planted_correlation(b1, vxx);
    const auto mc = monte_carlo_uncertainty(corr, sig, b1, 10000, 99);
    // turn the squeezing-dB samples back into variance samples
    double sum = 0, sum2 = 0;
    for (double db : mc.samples_db) {
      const double v = 0.5 * std::pow(10.0, db / 10.0);
      sum += v;
      sum2 += v * v;
    }
    const double n = static_cast<double>(mc.samples_db.size());
    const double sd = std::sqrt(sum2 / n - (sum / n) * (sum / n));
    REQUIRE(sd == Approx(err(0, 0)).epsilon(0.05));
  }
}

TEST_CASE("diagonalization") {
  SECTION("planted eigenvalues and squeezing in dB") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 3);
    v.diagonal() << 1.39, 0.29, 2.69;  // deliberately unsorted
    const auto d = diagonalize_vxx(v);
    REQUIRE(d.eigenvalues[0] == Approx(0.29));
    REQUIRE(d.eigenvalues[2] == Approx(2.69));
    REQUIRE(d.squeezing_db == Approx(-2.3657).margin(5e-5));
  }
  SECTION("vacuum block reports 0 dB") {
    const auto d = diagonalize_vxx(0.5 * Eigen::MatrixXd::Identity(2, 2));
    REQUIRE(d.squeezing_db == Approx(0.0).margin(1e-12));
  }
  SECTION("rotation diagonalizes the input") {
    std::mt19937_64 gen(13);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd v(3, 3);
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) v(i, j) = normal(gen);
    v = (v + v.transpose()).eval();
    const auto d = diagonalize_vxx(v);
    const Eigen::MatrixXd rotated = d.rotation.transpose() * v * d.rotation;
    REQUIRE((rotated - Eigen::MatrixXd(d.eigenvalues.asDiagonal())).cwiseAbs().maxCoeff() <
            1e-12);
    REQUIRE((d.rotation * d.rotation.transpose() - Eigen::MatrixXd::Identity(3, 3))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
    // characteristic-polynomial oracle
    const Eigen::Vector3d brute = cubic_eigenvalues(v);
    for (int i = 0; i < 3; ++i) REQUIRE(d.eigenvalues[i] == Approx(brute[i]).margin(1e-10));
  }
  SECTION("rotated mode functions diagonalize the X covariance") {
    const FrequencyGrid g = sym_grid(8, 64);
    const ModeBasis hl = haus_lai_basis(1.0, g);
    const ModeBasis b3(g, hl.coefficients().leftCols(3));
    Eigen::MatrixXd vxx(3, 3);
    vxx << 0.6, 0.1, 0.0, 0.1, 1.1, -0.2, 0.0, -0.2, 2.0;
    const auto d = diagonalize_vxx(vxx, b3);
    REQUIRE(d.modes.has_value());
    REQUIRE((d.modes->gram() - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("monte-carlo uncertainty") {
  const FrequencyGrid g = sym_grid(8, 48);
  const ModeBasis hl = haus_lai_basis(1.0, g);
  const ModeBasis b3(g, hl.coefficients().leftCols(3));
  Eigen::MatrixXd vxx = Eigen::MatrixXd::Zero(3, 3);
  vxx.diagonal() << 0.29, 1.39, 2.69;
  const CorrelationData corr = planted_correlation(b3, vxx);

  SECTION("zero noise degenerates to the point estimate") {
    const auto mc =
        monte_carlo_uncertainty(corr, Eigen::MatrixXd::Zero(48, 48), b3, 100, 5);
    REQUIRE(mc.min_db == Approx(mc.point_estimate_db).margin(1e-12));
    REQUIRE(mc.max_db == Approx(mc.point_estimate_db).margin(1e-12));
  }

  SECTION("spread grows with sigma") {
    auto iqr = [&](double sigma) {
      const auto mc = monte_carlo_uncertainty(
          corr, Eigen::MatrixXd::Constant(48, 48, sigma), b3, 400, 21);
      return mc.samples_db[300] - mc.samples_db[100];
    };
    REQUIRE(iqr(0.1) / iqr(0.05) > 1.5);
  }

  SECTION("noise biases the minimum eigenvalue to more-negative dB") {
    // a dB-scale spread pushes the smallest eigenvalue systematically
    // below the noiseless squeezing estimate (level repulsion)
    const auto mc = monte_carlo_uncertainty(
        corr, Eigen::MatrixXd::Constant(48, 48, 0.15), b3, 2000, 77);
    REQUIRE(mc.max_db - mc.min_db > 1.0);
    REQUIRE(mc.median_db < mc.point_estimate_db - 0.005);
    double mean = 0;
    for (double db : mc.samples_db) mean += db;
    mean /= static_cast<double>(mc.samples_db.size());
    REQUIRE(mean < mc.point_estimate_db - 0.01);
  }

  SECTION("reproducible per seed, trials validated") {
    const Eigen::MatrixXd sig = Eigen::MatrixXd::Constant(48, 48, 0.05);
    const auto a = monte_carlo_uncertainty(corr, sig, b3, 120, 9);
    const auto b = monte_carlo_uncertainty(corr, sig, b3, 120, 9);
    REQUIRE(a.median_db == b.median_db);
    REQUIRE_THROWS_AS(monte_carlo_uncertainty(corr, sig, b3, 99, 9), InvalidArgument);
  }
}
