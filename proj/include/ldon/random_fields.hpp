#pragma once

// Gaussian random fields on the unit square by truncated Karhunen-Loeve
// expansion of a separable squared-exponential covariance
//   C(p, q) = variance * exp(-dx^2 / (2 lx^2) - dy^2 / (2 ly^2)).

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ldon/linalg.hpp"

namespace ldon {

struct GrfConfig {
  std::size_t nx = 32;
  std::size_t ny = 32;
  double length_x = 0.2;
  double length_y = 0.2;
  double variance = 1.0;
  double kle_energy = 0.99;  ///< retained fraction of total variance, (0, 1]
  std::uint64_t seed = 0;
};

/// Largest grid the covariance may be assembled for.
inline constexpr std::size_t kMaxKlePoints = 4096;

struct KleBasis {
  std::size_t nx = 0;
  std::size_t ny = 0;
  /// (nx*ny) x n_modes; column i is eigenvector i scaled by sqrt(eigenvalue i).
  Matrix modes;
  Vector eigenvalues;  ///< descending, retained only
  double total_energy = 0.0;
  /// For mode i, the (x-factor, y-factor) 1-D eigenvector indices.
  std::vector<std::pair<std::size_t, std::size_t>> factors;

  std::size_t mode_count() const { return static_cast<std::size_t>(modes.cols()); }
};

/// Grid coordinate of index i on an n-point axis (cell centers).
double grid_coordinate(std::size_t i, std::size_t n);

double squared_exponential(const GrfConfig& cfg, double dx, double dy);

/// Dense covariance of the full grid (point index ix*ny + iy).
Matrix assemble_covariance(const GrfConfig& cfg);

KleBasis build_kle(const GrfConfig& cfg);

/// sum_i xi_i * mode_i with xi ~ N(0,1) drawn from CounterRng(seed).
std::vector<double> sample_field(const KleBasis& basis, std::uint64_t seed);

/// sum_i xi_i * mode_i for explicit coefficients.
std::vector<double> field_from_coefficients(const KleBasis& basis, std::span<const double> xi);

}  // namespace ldon
