#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "ldon/error.hpp"
#include "ldon/random_fields.hpp"
#include "ldon/rng.hpp"

using namespace ldon;

namespace {

GrfConfig small_grid(double ell, double energy = 0.99) {
  GrfConfig cfg;
  cfg.nx = 8;
  cfg.ny = 8;
  cfg.length_x = ell;
  cfg.length_y = ell;
  cfg.kle_energy = energy;
  return cfg;
}

}  // namespace

TEST(Kle, ZeroVarianceGivesZeroModes) {
  GrfConfig cfg = small_grid(0.3);
  cfg.variance = 0.0;
  const auto basis = build_kle(cfg);
  EXPECT_EQ(basis.mode_count(), 0u);
  for (double v : sample_field(basis, 7)) EXPECT_EQ(v, 0.0);
}

TEST(Kle, LongCorrelationIsNearlyConstant) {
  const auto basis = build_kle(small_grid(1e3));
  ASSERT_GE(basis.mode_count(), 1u);
  EXPECT_GE(basis.eigenvalues[0], 0.99 * basis.total_energy);
  const auto col = basis.modes.col(0);
  EXPECT_LT(col.maxCoeff() - col.minCoeff(), 1e-3 * col.cwiseAbs().maxCoeff());
}

TEST(Kle, SmoothKernelTruncatesBelowGridSize) {
  GrfConfig cfg = small_grid(0.35);
  cfg.nx = cfg.ny = 16;
  const auto basis = build_kle(cfg);
  EXPECT_LT(basis.mode_count(), 256u);
  EXPECT_GE(basis.eigenvalues.sum(), 0.99 * basis.total_energy * (1.0 - 1e-12));
  for (Eigen::Index i = 1; i < basis.eigenvalues.size(); ++i) EXPECT_LE(basis.eigenvalues[i], basis.eigenvalues[i - 1]);
}

TEST(Kle, FullBasisReproducesAssembledCovariance) {
  GrfConfig cfg = small_grid(0.25, 1.0);
  cfg.ny = 4;
  cfg.length_y = 0.4;
  cfg.variance = 2.0;
  const auto basis = build_kle(cfg);
  const Matrix c = assemble_covariance(cfg);
  EXPECT_LT((basis.modes * basis.modes.transpose() - c).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(basis.total_energy, c.trace(), 1e-10);
}

TEST(Kle, CovarianceEntriesFollowKernel) {
  GrfConfig cfg = small_grid(0.3);
  const Matrix c = assemble_covariance(cfg);
  // points (0,0) and (1,2) on the 8x8 cell-centred grid: dx = 1/8, dy = 2/8
  const double expected = std::exp(-(1.0 / 64.0) / (2 * 0.09) - (4.0 / 64.0) / (2 * 0.09));
  EXPECT_NEAR(c(0, 1 * 8 + 2), expected, 1e-15);
  EXPECT_DOUBLE_EQ(c(5, 5), 1.0);
}

TEST(Kle, RejectsInvalidConfigs) {
  GrfConfig big = small_grid(0.3);
  big.nx = big.ny = 128;
  try {
    build_kle(big);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("4096"), std::string::npos);
  }
  GrfConfig bad = small_grid(0.3);
  bad.length_x = 0.0;
  EXPECT_THROW(build_kle(bad), ShapeError);
  bad = small_grid(0.3, 0.0);
  EXPECT_THROW(build_kle(bad), ShapeError);
  bad = small_grid(0.3, 1.5);
  EXPECT_THROW(build_kle(bad), ShapeError);
}

TEST(Sample, ZeroCoefficientsGiveZeroField) {
  const auto basis = build_kle(small_grid(0.3));
  const std::vector<double> xi(basis.mode_count(), 0.0);
  for (double v : field_from_coefficients(basis, xi)) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(field_from_coefficients(basis, std::vector<double>(basis.mode_count() + 1)), ShapeError);
}

TEST(Sample, SameSeedSameField) {
  const auto basis = build_kle(small_grid(0.3));
  EXPECT_EQ(sample_field(basis, 42), sample_field(basis, 42));
  EXPECT_NE(sample_field(basis, 42), sample_field(basis, 43));
}

TEST(Sample, PointwiseVarianceMatchesKernel) {
  GrfConfig cfg = small_grid(0.35, 1.0);
  cfg.variance = 1.0;
  const auto basis = build_kle(cfg);
  const std::size_t m = 4000;
  std::vector<double> sum(64, 0.0), sum2(64, 0.0);
  for (std::size_t s = 0; s < m; ++s) {
    const auto f = sample_field(basis, derive_seed(99, s));
    for (std::size_t i = 0; i < 64; ++i) {
      sum[i] += f[i];
      sum2[i] += f[i] * f[i];
    }
  }
  const double tol = 3.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < 64; ++i) {
    const double mean = sum[i] / m;
    EXPECT_NEAR(sum2[i] / m - mean * mean, 1.0, tol) << i;
  }
}

TEST(Sample, TransposeSymmetryWithMatchedCoefficients) {
  const auto basis = build_kle(small_grid(0.3, 1.0));
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> where;
  for (std::size_t m = 0; m < basis.mode_count(); ++m) where[basis.factors[m]] = m;

  CounterRng rng(5);
  std::vector<double> xi(basis.mode_count());
  for (auto& v : xi) v = rng.normal();
  std::vector<double> swapped(xi.size());
  for (std::size_t m = 0; m < basis.mode_count(); ++m) {
    const auto [a, b] = basis.factors[m];
    swapped[where.at({b, a})] = xi[m];
  }
  const auto f = field_from_coefficients(basis, xi);
  const auto g = field_from_coefficients(basis, swapped);
  for (std::size_t ix = 0; ix < 8; ++ix)
    for (std::size_t iy = 0; iy < 8; ++iy) EXPECT_NEAR(g[iy * 8 + ix], f[ix * 8 + iy], 1e-12);
}

TEST(Sample, EmpiricalCovarianceCloseToKernel) {
  GrfConfig cfg = small_grid(0.35);
  const auto basis = build_kle(cfg);
  const std::size_t m = 5000;
  Matrix acc = Matrix::Zero(64, 64);
  for (std::size_t s = 0; s < m; ++s) {
    const auto f = sample_field(basis, derive_seed(3, s));
    const Eigen::Map<const Vector> v(f.data(), 64);
    acc.noalias() += v * v.transpose();
  }
  acc /= static_cast<double>(m);
  const Matrix c = assemble_covariance(cfg);
  EXPECT_LT((acc - c).norm() / c.norm(), 0.06);
}
