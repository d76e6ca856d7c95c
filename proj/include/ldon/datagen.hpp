#pragma once

// Labeled datasets and analytic initial conditions.
//
// Fields are flattened with index ix * ny + iy. Trajectories store m_t
// snapshots back to back.

#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "ldon/linalg.hpp"
#include "ldon/random_fields.hpp"

namespace ldon {

struct MinMax {
  double min = 0.0;
  double max = 1.0;

  double range() const { return max - min > 0.0 ? max - min : 1.0; }
  double normalize(double v) const { return (v - min) / range(); }
  double denormalize(double v) const { return min + v * range(); }
  static MinMax of(std::span<const double> values);
};

struct FieldDataset {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t m_t = 0;
  std::size_t n_train = 0;   ///< rows [0, n_train) are the training split
  std::vector<double> zeta;  ///< m_t time coordinates, strictly increasing in [0, 1]
  Matrix inputs;             ///< N x (nx*ny), physical units
  Matrix outputs;            ///< N x (m_t*nx*ny), physical units
  MinMax input_norm;         ///< from training inputs
  MinMax output_norm;        ///< from training outputs

  std::size_t samples() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t points() const { return nx * ny; }
  std::size_t n_test() const { return samples() - n_train; }

  Matrix normalized_inputs() const;
  Matrix normalized_outputs() const;
  /// Recomputes input_norm/output_norm from the training rows.
  void fit_normalization();
  /// Throws ShapeError if sizes or zeta break the dataset invariants.
  void validate() const;
};

struct DiffusionConfig {
  GrfConfig grf;
  std::size_t samples = 200;
  std::size_t snapshots = 10;
  double diffusivity = 0.005;
  double reaction_rate = 1.0;
  double t_final = 1.0;
  std::size_t steps_per_snapshot = 20;
  double train_fraction = 0.9;
};

/// D * dt / min(dx, dy)^2 for the explicit scheme on the periodic unit square.
double stability_ratio(const DiffusionConfig& cfg);

/// Advances du/dt = D lap(u) - r u with periodic boundaries: explicit
/// five-point diffusion step, reaction integrated exactly. Returns the
/// snapshots at t_final * (k+1)/m_t, k < m_t, concatenated.
std::vector<double> diffuse(std::span<const double> initial, const DiffusionConfig& cfg);

/// GRF initial conditions, diffusion-reaction trajectories, train/test split
/// and min-max normalization constants from the training split.
FieldDataset generate_diffusion_dataset(const DiffusionConfig& cfg);

// ---------------------------------------------------------------------------
// Shallow-water initial conditions (barotropic jet on the sphere).

struct EarthConstants {
  double radius = 6.37122e6;    ///< m
  double gravity = 9.80616;     ///< m s^-2
  double rotation = 7.292e-5;   ///< s^-1
};

struct JetParams {
  double u_max = 80.0;
  double phi0 = std::numbers::pi / 7.0;
  double phi1 = std::numbers::pi / 2.0 - std::numbers::pi / 7.0;

  /// exp(-4 / (phi1 - phi0)^2): places u_max at the jet midpoint.
  double normalizer() const;
};

struct PerturbParams {
  double h_hat = 120.0;
  double phi2 = std::numbers::pi / 4.0;
  double alpha = 1.0 / 3.0;
  double beta = 1.0 / 15.0;
};

/// alpha ~ U[1/9, 0.5], beta ~ U[1/30, 0.2]; h_hat = 120, phi2 = pi/4.
PerturbParams sample_perturb_params(std::uint64_t seed);

/// -pi/2 + j*pi/n, j < n.
std::vector<double> latitude_grid(std::size_t n);
/// Cell centers of (-pi, pi).
std::vector<double> longitude_grid(std::size_t n);

double zonal_jet_u(double phi, const JetParams& p);
std::vector<double> zonal_jet_u(std::span<const double> phi, const JetParams& p);

/// h'(lambda, phi) laid out [lambda index][phi index].
std::vector<double> height_perturbation(std::span<const double> lambda, std::span<const double> phi,
                                        const PerturbParams& p);

/// Geostrophically balanced depth h(phi) for the jet, integrated from -pi/2
/// with `nodes`-point Gauss-Legendre per grid interval; h0 is chosen so the
/// cos(phi)-weighted mean over the grid equals `mean_depth`.
std::vector<double> balanced_height(std::span<const double> phi, const JetParams& p, double mean_depth,
                                    int nodes = 16, const EarthConstants& earth = {});

// ---------------------------------------------------------------------------
// Phase-field fracture initial strain history.

struct CrackParams {
  double y_c = 0.5;       ///< crack height, U[0.3, 0.7]
  double l_c = 0.5;       ///< crack length, U[0.4, 0.6]
  double l0 = 0.0125;     ///< phase-field length scale
  double B = 1e3;         ///< history magnitude
  double G_c = 2.7e-3;    ///< critical energy release rate
};

CrackParams sample_crack_params(std::uint64_t seed);

/// Distance from (x, y) to the edge crack segment (0, y_c)-(l_c, y_c).
double crack_distance(double x, double y, const CrackParams& c);
double strain_history_at(double x, double y, const CrackParams& c);
/// H on the nx x ny cell-centered unit-square grid.
std::vector<double> strain_history(std::size_t nx, std::size_t ny, const CrackParams& c);

}  // namespace ldon
