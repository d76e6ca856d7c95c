#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "ldon/error.hpp"
#include "ldon/fft.hpp"
#include "ldon/linalg.hpp"
#include "ldon/quadrature.hpp"
#include "ldon/rng.hpp"

using namespace ldon;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  CounterRng rng(seed);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

Matrix random_symmetric(Eigen::Index n, std::uint64_t seed) {
  const Matrix a = random_matrix(n, n, seed);
  return 0.5 * (a + a.transpose());
}

// Direct O(M^2) DFT with the exp(-2 pi i <x,k>) convention.
ComplexSpectrum naive_dft(const ComplexSpectrum& f) {
  ComplexSpectrum out{f.rows, f.cols, std::vector<Complex>(f.values.size())};
  for (std::size_t kr = 0; kr < f.rows; ++kr)
    for (std::size_t kc = 0; kc < f.cols; ++kc) {
      Complex acc = 0.0;
      for (std::size_t r = 0; r < f.rows; ++r)
        for (std::size_t c = 0; c < f.cols; ++c) {
          const double phase = -2.0 * std::numbers::pi *
                               (static_cast<double>(kr * r) / f.rows + static_cast<double>(kc * c) / f.cols);
          acc += f.at(r, c) * std::polar(1.0, phase);
        }
      out.at(kr, kc) = acc;
    }
  return out;
}

ComplexSpectrum random_complex(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  CounterRng rng(seed);
  ComplexSpectrum s{rows, cols, std::vector<Complex>(rows * cols)};
  for (auto& v : s.values) v = {rng.normal(), rng.normal()};
  return s;
}

double max_abs_diff(const ComplexSpectrum& a, const ComplexSpectrum& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

}  // namespace

TEST(SymEig, DiagonalIsSortedAndAxisAligned) {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 3, 1, 2;
  const auto r = sym_eig(a);
  EXPECT_DOUBLE_EQ(r.eigenvalues[0], 3.0);
  EXPECT_DOUBLE_EQ(r.eigenvalues[1], 2.0);
  EXPECT_DOUBLE_EQ(r.eigenvalues[2], 1.0);
  EXPECT_NEAR(std::abs(r.eigenvectors(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(r.eigenvectors(2, 1)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(r.eigenvectors(1, 2)), 1.0, 1e-15);
}

TEST(SymEig, TwoByTwoRootsOfCharacteristicPolynomial) {
  Matrix a(2, 2);
  a << 2, 1, 1, 2;
  // (2 - l)^2 - 1 = 0 -> l = 3, 1
  const auto r = sym_eig(a);
  EXPECT_NEAR(r.eigenvalues[0], 3.0, 1e-14);
  EXPECT_NEAR(r.eigenvalues[1], 1.0, 1e-14);
}

TEST(SymEig, ResidualOrthonormalityTraceAndDeterminant) {
  for (Eigen::Index n : {2, 3, 4, 17, 40}) {
    const Matrix a = random_symmetric(n, static_cast<std::uint64_t>(n));
    const auto r = sym_eig(a);
    const double fro = a.norm();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector v = r.eigenvectors.col(i);
      EXPECT_LT((a * v - r.eigenvalues[i] * v).norm(), 1e-10 * fro);
    }
    const Matrix vtv = r.eigenvectors.transpose() * r.eigenvectors;
    EXPECT_LT((vtv - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(r.eigenvalues.sum(), a.trace(), 1e-10);
    if (n <= 4) {
      const double det = Eigen::MatrixXd(a).determinant();
      EXPECT_NEAR(r.eigenvalues.prod(), det, 1e-8 * std::max(1.0, std::abs(det)));
    }
    // Independent solver as a cross-check on the spectrum.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref{Eigen::MatrixXd(a)};
    for (Eigen::Index i = 0; i < n; ++i) EXPECT_NEAR(r.eigenvalues[i], ref.eigenvalues()[n - 1 - i], 1e-10);
  }
}

TEST(SymEig, RejectsAsymmetricAndReportsIt) {
  Matrix a(2, 2);
  a << 1, 2, 2.5, 1;
  try {
    sym_eig(a);
    FAIL() << "expected rejection";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("0.5"), std::string::npos) << e.what();
  }
  EXPECT_ANY_THROW(sym_eig(Matrix(2, 3)));
}

TEST(TruncatedSvd, RankOneExact) {
  Vector u(4), v(3);
  u << 1, -2, 0.5, 3;
  v << 0.3, 1, -1;
  const Matrix x = u * v.transpose();
  const auto s = truncated_svd(x, 1);
  EXPECT_LT((x - s.u * s.s.asDiagonal() * s.v.transpose()).norm(), 1e-10);
}

TEST(TruncatedSvd, FullRankExact) {
  for (auto [n, d] : {std::pair{20, 7}, std::pair{6, 15}}) {
    const Matrix x = random_matrix(n, d, 11);
    const auto k = static_cast<std::size_t>(std::min(n, d));
    const auto s = truncated_svd(x, k);
    EXPECT_LT((x - s.u * s.s.asDiagonal() * s.v.transpose()).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(TruncatedSvd, DiagonalResidualIsDroppedValue) {
  Matrix x = Matrix::Zero(3, 3);
  x.diagonal() << 5, 3, 1;
  const auto s = truncated_svd(x, 2);
  EXPECT_NEAR((x - s.u * s.s.asDiagonal() * s.v.transpose()).norm(), 1.0, 1e-12);
  EXPECT_NEAR(s.s[0], 5.0, 1e-12);
  EXPECT_NEAR(s.s[1], 3.0, 1e-12);
}

TEST(TruncatedSvd, EckartYoungResidualMatchesIndependentSvd) {
  const Matrix x = random_matrix(30, 12, 5);
  Eigen::JacobiSVD<Eigen::MatrixXd> ref{Eigen::MatrixXd(x)};
  const Eigen::VectorXd sv = ref.singularValues();
  for (std::size_t k : {1u, 4u, 9u}) {
    const auto s = truncated_svd(x, k);
    const double residual2 = (x - s.u * s.s.asDiagonal() * s.v.transpose()).squaredNorm();
    const double dropped2 = sv.tail(sv.size() - static_cast<Eigen::Index>(k)).squaredNorm();
    EXPECT_NEAR(residual2, dropped2, 1e-8 * dropped2);
  }
}

TEST(TruncatedSvd, RejectsBadRank) {
  const Matrix x = random_matrix(4, 3, 1);
  EXPECT_ANY_THROW(truncated_svd(x, 0));
  EXPECT_ANY_THROW(truncated_svd(x, 4));
}

TEST(Fft, DeltaGivesOnes) {
  std::vector<double> f(8 * 4, 0.0);
  f[0] = 1.0;
  const auto s = fft2(f, 8, 4, FftDirection::forward);
  for (const auto& v : s.values) EXPECT_LT(std::abs(v - Complex(1.0, 0.0)), 1e-15);
}

TEST(Fft, ConstantConcentratesAtZeroMode) {
  const double c = 2.5;
  const auto s = fft2(std::vector<double>(16 * 16, c), 16, 16, FftDirection::forward);
  EXPECT_LT(std::abs(s.values[0] - Complex(c * 256.0, 0.0)), 1e-12);
  for (std::size_t i = 1; i < s.values.size(); ++i) EXPECT_LT(std::abs(s.values[i]), 1e-12);
}

TEST(Fft, MatchesDirectDft) {
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{8, 8}, {4, 16}, {2, 2}}) {
    const auto x = random_complex(r, c, 3);
    EXPECT_LT(max_abs_diff(fft2(x, FftDirection::forward), naive_dft(x)), 1e-10);
  }
}

TEST(Fft, RoundtripParsevalLinearityShift) {
  const std::size_t n = 16;
  const auto x = random_complex(n, n, 4);
  const auto y = random_complex(n, n, 5);
  const auto fx = fft2(x, FftDirection::forward);
  const auto fy = fft2(y, FftDirection::forward);

  EXPECT_LT(max_abs_diff(fft2(fx, FftDirection::inverse), x), 1e-10);

  double ex = 0.0, ek = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    ex += std::norm(x.values[i]);
    ek += std::norm(fx.values[i]);
  }
  EXPECT_NEAR(ex, ek / static_cast<double>(n * n), 1e-9 * ex);

  const Complex a(0.3, -1.2), b(2.0, 0.5);
  ComplexSpectrum combo = x;
  ComplexSpectrum expected = fx;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    combo.values[i] = a * x.values[i] + b * y.values[i];
    expected.values[i] = a * fx.values[i] + b * fy.values[i];
  }
  EXPECT_LT(max_abs_diff(fft2(combo, FftDirection::forward), expected), 1e-10);

  const std::size_t sr = 3, sc = 5;
  ComplexSpectrum shifted = x;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) shifted.at((r + sr) % n, (c + sc) % n) = x.at(r, c);
  ComplexSpectrum phase = fx;
  for (std::size_t kr = 0; kr < n; ++kr)
    for (std::size_t kc = 0; kc < n; ++kc)
      phase.at(kr, kc) *= std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(kr * sr + kc * sc) / n);
  EXPECT_LT(max_abs_diff(fft2(shifted, FftDirection::forward), phase), 1e-10);
}

TEST(Fft, RejectsNonPowerOfTwo) {
  EXPECT_ANY_THROW(fft2(std::vector<double>(12, 0.0), 3, 4, FftDirection::forward));
  EXPECT_ANY_THROW(fft2(std::vector<double>(1, 0.0), 1, 1, FftDirection::forward));
  EXPECT_FALSE(is_power_of_two(0));
  EXPECT_TRUE(is_power_of_two(64));
}

TEST(Quadrature, PolynomialExactness) {
  EXPECT_NEAR(gauss_legendre([](double x) { return x * x; }, 0.0, 1.0, 2), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(gauss_legendre([](double x) { return std::pow(x, 7); }, -1.0, 1.0, 4), 0.0, 1e-14);
  for (int n : {2, 5, 11, 32, 64}) {
    const int deg = 2 * n - 1;
    // integral of x^deg on [0, 1] is 1 / (deg + 1)
    EXPECT_NEAR(gauss_legendre([deg](double x) { return std::pow(x, deg); }, 0.0, 1.0, n), 1.0 / (deg + 1), 1e-12)
        << n;
  }
}

TEST(Quadrature, SineIntegral) {
  EXPECT_NEAR(gauss_legendre([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 16), 2.0, 1e-10);
}

TEST(Quadrature, WeightsSumToTwo) {
  for (int n : {2, 7, 64}) {
    const auto& rule = gauss_legendre_rule(n);
    double s = 0.0;
    for (double w : rule.weights) s += w;
    EXPECT_NEAR(s, 2.0, 1e-13);
  }
}

TEST(Quadrature, RejectsBadArguments) {
  auto f = [](double x) { return x; };
  EXPECT_ANY_THROW(gauss_legendre(f, 1.0, 0.0, 4));
  EXPECT_ANY_THROW(gauss_legendre(f, 0.0, 1.0, 1));
  EXPECT_ANY_THROW(gauss_legendre(f, 0.0, 1.0, 65));
}
