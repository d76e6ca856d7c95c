#include "ldon/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ldon/error.hpp"

namespace ldon {

namespace {

constexpr std::size_t kMaxEigSize = 4096;
constexpr int kMaxSweeps = 100;

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

}  // namespace

SymEigResult sym_eig(const Matrix& input) {
  const auto n = input.rows();
  if (n != input.cols()) {
    throw ShapeError("sym_eig: matrix must be square, got " + std::to_string(n) + "x" + std::to_string(input.cols()));
  }
  if (static_cast<std::size_t>(n) > kMaxEigSize) {
    throw ShapeError("sym_eig: size " + std::to_string(n) + " exceeds limit " + std::to_string(kMaxEigSize));
  }
  if (!input.allFinite()) throw NumericError("sym_eig: non-finite input");
  const double scale = std::max(1.0, input.cwiseAbs().maxCoeff());
  const double asym = (input - input.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw ShapeError("sym_eig: matrix is not symmetric (max |a_ij - a_ji| = " + std::to_string(asym) + ")");
  }

  // Rows of vt are the eigenvectors, so rotations touch contiguous memory.
  Matrix a = 0.5 * (input + input.transpose());
  Matrix vt = Matrix::Identity(n, n);
  const double target = 1e-12 * a.norm();
  int sweeps = 0;
  while (off_diagonal_norm(a) > target) {
    if (sweeps == kMaxSweeps) throw NumericError("sym_eig: Jacobi did not converge in 100 sweeps");
    ++sweeps;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double app = a(p, p);
        const double aqq = a(q, q);
        double* rp = a.row(p).data();
        double* rq = a.row(q).data();
        for (Eigen::Index r = 0; r < n; ++r) {
          const double xp = rp[r];
          const double xq = rq[r];
          rp[r] = c * xp - s * xq;
          rq[r] = s * xp + c * xq;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          a(r, p) = rp[r];
          a(r, q) = rq[r];
        }
        // 2x2 block from the closed form.
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        double* vp = vt.row(p).data();
        double* vq = vt.row(q).data();
        for (Eigen::Index r = 0; r < n; ++r) {
          const double xp = vp[r];
          const double xq = vq[r];
          vp[r] = c * xp - s * xq;
          vq[r] = s * xp + c * xq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });

  SymEigResult result;
  result.sweeps = sweeps;
  result.eigenvalues.resize(n);
  result.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    result.eigenvalues[k] = a(src, src);
    Eigen::Index big = 0;
    vt.row(src).cwiseAbs().maxCoeff(&big);
    const double sign = vt(src, big) < 0.0 ? -1.0 : 1.0;
    result.eigenvectors.col(k) = sign * vt.row(src).transpose();
  }
  return result;
}

SvdResult truncated_svd(const Matrix& x, std::size_t k) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (k == 0 || k > std::min(n, d)) {
    throw ShapeError("truncated_svd: k=" + std::to_string(k) + " outside [1, " + std::to_string(std::min(n, d)) + "]");
  }
  const auto kk = static_cast<Eigen::Index>(k);
  SvdResult out;
  const bool tall = d <= n;
  Matrix gram = tall ? Matrix(x.transpose() * x) : Matrix(x * x.transpose());
  gram = 0.5 * (gram + gram.transpose());
  auto eig = sym_eig(gram);
  out.s.resize(kk);
  for (Eigen::Index i = 0; i < kk; ++i) out.s[i] = std::sqrt(std::max(eig.eigenvalues[i], 0.0));
  Matrix basis = eig.eigenvectors.leftCols(kk);
  Matrix other = tall ? Matrix(x * basis) : Matrix(x.transpose() * basis);
  for (Eigen::Index i = 0; i < kk; ++i) {
    if (out.s[i] > 0.0) {
      other.col(i) /= out.s[i];
    } else {
      other.col(i).setZero();
    }
  }
  if (tall) {
    out.v = std::move(basis);
    out.u = std::move(other);
  } else {
    out.u = std::move(basis);
    out.v = std::move(other);
  }
  return out;
}

}  // namespace ldon
