#include "ldon/random_fields.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ldon/error.hpp"
#include "ldon/rng.hpp"

namespace ldon {

double grid_coordinate(std::size_t i, std::size_t n) {
  return (static_cast<double>(i) + 0.5) / static_cast<double>(n);
}

double squared_exponential(const GrfConfig& cfg, double dx, double dy) {
  return cfg.variance *
         std::exp(-dx * dx / (2.0 * cfg.length_x * cfg.length_x) - dy * dy / (2.0 * cfg.length_y * cfg.length_y));
}

namespace {

void validate(const GrfConfig& cfg) {
  if (cfg.nx == 0 || cfg.ny == 0) throw ShapeError("grf: grid extents must be positive");
  if (cfg.nx * cfg.ny > kMaxKlePoints) {
    throw ShapeError("grf: grid has " + std::to_string(cfg.nx * cfg.ny) +
                     " points; dense covariance assembly is limited to " + std::to_string(kMaxKlePoints));
  }
  if (!(cfg.length_x > 0.0) || !(cfg.length_y > 0.0)) throw ShapeError("grf: length scales must be > 0");
  if (!(cfg.variance >= 0.0)) throw ShapeError("grf: variance must be >= 0");
  if (!(cfg.kle_energy > 0.0) || cfg.kle_energy > 1.0) throw ShapeError("grf: kle_energy must lie in (0, 1]");
}

// Unit-variance 1-D SE kernel on an n-point axis.
SymEigResult axis_eig(std::size_t n, double length) {
  Matrix k(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = grid_coordinate(i, n) - grid_coordinate(j, n);
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::exp(-d * d / (2.0 * length * length));
    }
  }
  auto eig = sym_eig(k);
  const double tol = 1e-12 * std::max(1.0, eig.eigenvalues[0]);
  for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
    double& lam = eig.eigenvalues[i];
    if (lam < -tol) throw NumericError("grf: covariance has eigenvalue " + std::to_string(lam) + " below -1e-12");
    lam = std::max(lam, 0.0);
  }
  return eig;
}

}  // namespace

Matrix assemble_covariance(const GrfConfig& cfg) {
  validate(cfg);
  const auto n = static_cast<Eigen::Index>(cfg.nx * cfg.ny);
  Matrix c(n, n);
  for (std::size_t a = 0; a < cfg.nx * cfg.ny; ++a) {
    const double xa = grid_coordinate(a / cfg.ny, cfg.nx);
    const double ya = grid_coordinate(a % cfg.ny, cfg.ny);
    for (std::size_t b = 0; b < cfg.nx * cfg.ny; ++b) {
      const double xb = grid_coordinate(b / cfg.ny, cfg.nx);
      const double yb = grid_coordinate(b % cfg.ny, cfg.ny);
      c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = squared_exponential(cfg, xa - xb, ya - yb);
    }
  }
  return c;
}

KleBasis build_kle(const GrfConfig& cfg) {
  validate(cfg);
  KleBasis basis;
  basis.nx = cfg.nx;
  basis.ny = cfg.ny;
  const auto points = static_cast<Eigen::Index>(cfg.nx * cfg.ny);

  // Separable kernel: C = variance * (Kx kron Ky), eigenpairs are products.
  const auto ex = axis_eig(cfg.nx, cfg.length_x);
  const auto ey = axis_eig(cfg.ny, cfg.length_y);
  struct Candidate {
    double lambda;
    std::size_t a, b;
  };
  std::vector<Candidate> all;
  all.reserve(cfg.nx * cfg.ny);
  for (std::size_t a = 0; a < cfg.nx; ++a) {
    for (std::size_t b = 0; b < cfg.ny; ++b) {
      all.push_back({cfg.variance * ex.eigenvalues[static_cast<Eigen::Index>(a)] *
                         ey.eigenvalues[static_cast<Eigen::Index>(b)],
                     a, b});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Candidate& l, const Candidate& r) { return l.lambda > r.lambda; });
  const double total = std::accumulate(all.begin(), all.end(), 0.0, [](double s, const Candidate& c) { return s + c.lambda; });
  basis.total_energy = total;

  std::size_t keep = 0;
  if (total > 0.0) {
    double acc = 0.0;
    const double goal = cfg.kle_energy * total;
    while (keep < all.size() && all[keep].lambda > 0.0) {
      acc += all[keep].lambda;
      ++keep;
      if (acc >= goal * (1.0 - 1e-14)) break;
    }
  }

  basis.modes = Matrix::Zero(points, static_cast<Eigen::Index>(keep));
  basis.eigenvalues.resize(static_cast<Eigen::Index>(keep));
  for (std::size_t m = 0; m < keep; ++m) {
    const auto& c = all[m];
    const double amp = std::sqrt(c.lambda);
    basis.eigenvalues[static_cast<Eigen::Index>(m)] = c.lambda;
    basis.factors.emplace_back(c.a, c.b);
    for (std::size_t ix = 0; ix < cfg.nx; ++ix) {
      const double ux = ex.eigenvectors(static_cast<Eigen::Index>(ix), static_cast<Eigen::Index>(c.a));
      for (std::size_t iy = 0; iy < cfg.ny; ++iy) {
        basis.modes(static_cast<Eigen::Index>(ix * cfg.ny + iy), static_cast<Eigen::Index>(m)) =
            amp * ux * ey.eigenvectors(static_cast<Eigen::Index>(iy), static_cast<Eigen::Index>(c.b));
      }
    }
  }
  return basis;
}

std::vector<double> field_from_coefficients(const KleBasis& basis, std::span<const double> xi) {
  if (xi.size() != basis.mode_count()) {
    throw ShapeError("grf: expected " + std::to_string(basis.mode_count()) + " coefficients, got " +
                     std::to_string(xi.size()));
  }
  std::vector<double> field(basis.nx * basis.ny, 0.0);
  if (xi.empty()) return field;
  Eigen::Map<Vector>(field.data(), static_cast<Eigen::Index>(field.size())).noalias() =
      basis.modes * Eigen::Map<const Vector>(xi.data(), static_cast<Eigen::Index>(xi.size()));
  return field;
}

std::vector<double> sample_field(const KleBasis& basis, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> xi(basis.mode_count());
  for (auto& v : xi) v = rng.normal();
  return field_from_coefficients(basis, xi);
}

}  // namespace ldon
