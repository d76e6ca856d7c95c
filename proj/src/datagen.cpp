#include "ldon/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ldon/error.hpp"
#include "ldon/fft.hpp"
#include "ldon/quadrature.hpp"
#include "ldon/rng.hpp"

namespace ldon {

MinMax MinMax::of(std::span<const double> values) {
  if (values.empty()) return {};
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

Matrix FieldDataset::normalized_inputs() const {
  return inputs.unaryExpr([this](double v) { return input_norm.normalize(v); });
}

Matrix FieldDataset::normalized_outputs() const {
  return outputs.unaryExpr([this](double v) { return output_norm.normalize(v); });
}

void FieldDataset::fit_normalization() {
  if (n_train == 0) throw ShapeError("dataset: empty training split");
  const auto train_in = inputs.topRows(static_cast<Eigen::Index>(n_train));
  const auto train_out = outputs.topRows(static_cast<Eigen::Index>(n_train));
  input_norm = {train_in.minCoeff(), train_in.maxCoeff()};
  output_norm = {train_out.minCoeff(), train_out.maxCoeff()};
}

void FieldDataset::validate() const {
  if (m_t < 2) throw ShapeError("dataset: need at least 2 snapshots, got " + std::to_string(m_t));
  if (zeta.size() != m_t) throw ShapeError("dataset: zeta has " + std::to_string(zeta.size()) + " entries, m_t = " + std::to_string(m_t));
  for (std::size_t k = 0; k < m_t; ++k) {
    if (zeta[k] < 0.0 || zeta[k] > 1.0 || (k > 0 && !(zeta[k] > zeta[k - 1]))) {
      throw ShapeError("dataset: zeta must be strictly increasing in [0, 1]");
    }
  }
  if (static_cast<std::size_t>(inputs.cols()) != points()) throw ShapeError("dataset: input width does not match grid");
  if (static_cast<std::size_t>(outputs.cols()) != points() * m_t) throw ShapeError("dataset: output width does not match grid * m_t");
  if (outputs.rows() != inputs.rows()) throw ShapeError("dataset: input/output sample counts differ");
  if (n_train == 0 || n_train > samples()) throw ShapeError("dataset: invalid training split");
}

double stability_ratio(const DiffusionConfig& cfg) {
  const double dt = cfg.t_final / static_cast<double>(cfg.snapshots * cfg.steps_per_snapshot);
  const double dx = 1.0 / static_cast<double>(std::max(cfg.grf.nx, cfg.grf.ny));
  return cfg.diffusivity * dt / (dx * dx);
}

namespace {

void check_diffusion_config(const DiffusionConfig& cfg) {
  const auto& g = cfg.grf;
  if (!is_power_of_two(g.nx) || !is_power_of_two(g.ny) || g.nx > 64 || g.ny > 64 || g.nx < 2 || g.ny < 2) {
    throw ShapeError("datagen: grid extents must be powers of two in [2, 64], got " + std::to_string(g.nx) + "x" +
                     std::to_string(g.ny));
  }
  if (cfg.snapshots < 2) throw ShapeError("datagen: need at least 2 snapshots");
  if (cfg.steps_per_snapshot == 0 || !(cfg.t_final > 0.0)) throw ShapeError("datagen: invalid time stepping");
  if (cfg.diffusivity < 0.0 || cfg.reaction_rate < 0.0) throw ShapeError("datagen: diffusivity and reaction rate must be >= 0");
  const double ratio = stability_ratio(cfg);
  if (ratio > 0.2) {
    throw ShapeError("datagen: explicit step unstable, D*dt/dx^2 = " + std::to_string(ratio) + " > 0.2");
  }
}

}  // namespace

std::vector<double> diffuse(std::span<const double> initial, const DiffusionConfig& cfg) {
  check_diffusion_config(cfg);
  const std::size_t nx = cfg.grf.nx, ny = cfg.grf.ny;
  if (initial.size() != nx * ny) throw ShapeError("diffuse: initial field size does not match grid");
  const double dt = cfg.t_final / static_cast<double>(cfg.snapshots * cfg.steps_per_snapshot);
  const double cx = cfg.diffusivity * dt * static_cast<double>(nx * nx);
  const double cy = cfg.diffusivity * dt * static_cast<double>(ny * ny);
  const double decay = std::exp(-cfg.reaction_rate * dt);

  std::vector<double> u(initial.begin(), initial.end());
  std::vector<double> next(u.size());
  std::vector<double> out;
  out.reserve(cfg.snapshots * u.size());
  for (std::size_t s = 0; s < cfg.snapshots; ++s) {
    for (std::size_t step = 0; step < cfg.steps_per_snapshot; ++step) {
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const std::size_t xm = (ix + nx - 1) % nx, xp = (ix + 1) % nx;
        for (std::size_t iy = 0; iy < ny; ++iy) {
          const std::size_t ym = (iy + ny - 1) % ny, yp = (iy + 1) % ny;
          const double c = u[ix * ny + iy];
          const double lap_x = u[xm * ny + iy] - 2.0 * c + u[xp * ny + iy];
          const double lap_y = u[ix * ny + ym] - 2.0 * c + u[ix * ny + yp];
          next[ix * ny + iy] = decay * (c + cx * lap_x + cy * lap_y);
        }
      }
      std::swap(u, next);
    }
    out.insert(out.end(), u.begin(), u.end());
  }
  return out;
}

FieldDataset generate_diffusion_dataset(const DiffusionConfig& cfg) {
  check_diffusion_config(cfg);
  if (cfg.samples < 2) throw ShapeError("datagen: need at least 2 samples");
  if (!(cfg.train_fraction > 0.0) || !(cfg.train_fraction < 1.0)) throw ShapeError("datagen: train_fraction must lie in (0, 1)");
  const auto basis = build_kle(cfg.grf);

  FieldDataset ds;
  ds.nx = cfg.grf.nx;
  ds.ny = cfg.grf.ny;
  ds.m_t = cfg.snapshots;
  for (std::size_t k = 0; k < cfg.snapshots; ++k) {
    ds.zeta.push_back(static_cast<double>(k + 1) / static_cast<double>(cfg.snapshots));
  }
  const auto n = static_cast<Eigen::Index>(cfg.samples);
  ds.inputs.resize(n, static_cast<Eigen::Index>(ds.points()));
  ds.outputs.resize(n, static_cast<Eigen::Index>(ds.points() * ds.m_t));
  for (std::size_t j = 0; j < cfg.samples; ++j) {
    const auto ic = sample_field(basis, derive_seed(cfg.grf.seed, j));
    const auto traj = diffuse(ic, cfg);
    const auto row = static_cast<Eigen::Index>(j);
    ds.inputs.row(row) = Eigen::Map<const Eigen::RowVectorXd>(ic.data(), static_cast<Eigen::Index>(ic.size()));
    ds.outputs.row(row) = Eigen::Map<const Eigen::RowVectorXd>(traj.data(), static_cast<Eigen::Index>(traj.size()));
  }
  ds.n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(cfg.samples))), 1,
      cfg.samples - 1);
  ds.fit_normalization();
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------

double JetParams::normalizer() const { return std::exp(-4.0 / ((phi1 - phi0) * (phi1 - phi0))); }

PerturbParams sample_perturb_params(std::uint64_t seed) {
  CounterRng rng(seed, 11);
  PerturbParams p;
  p.alpha = rng.uniform(1.0 / 9.0, 0.5);
  p.beta = rng.uniform(1.0 / 30.0, 0.2);
  return p;
}

std::vector<double> latitude_grid(std::size_t n) {
  std::vector<double> phi(n);
  for (std::size_t j = 0; j < n; ++j) {
    phi[j] = -std::numbers::pi / 2.0 + static_cast<double>(j) * std::numbers::pi / static_cast<double>(n);
  }
  return phi;
}

std::vector<double> longitude_grid(std::size_t n) {
  std::vector<double> lam(n);
  for (std::size_t i = 0; i < n; ++i) {
    lam[i] = -std::numbers::pi + (static_cast<double>(i) + 0.5) * 2.0 * std::numbers::pi / static_cast<double>(n);
  }
  return lam;
}

namespace {

void check_jet(const JetParams& p) {
  if (!(p.phi0 < p.phi1)) throw ShapeError("zonal jet: need phi0 < phi1");
}

}  // namespace

double zonal_jet_u(double phi, const JetParams& p) {
  check_jet(p);
  if (phi <= p.phi0 || phi >= p.phi1) return 0.0;
  return p.u_max / p.normalizer() * std::exp(1.0 / ((phi - p.phi0) * (phi - p.phi1)));
}

std::vector<double> zonal_jet_u(std::span<const double> phi, const JetParams& p) {
  check_jet(p);
  std::vector<double> u(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (phi[i] < -std::numbers::pi / 2.0 || phi[i] > std::numbers::pi / 2.0) {
      throw ShapeError("zonal jet: latitude outside [-pi/2, pi/2]");
    }
    u[i] = zonal_jet_u(phi[i], p);
  }
  return u;
}

std::vector<double> height_perturbation(std::span<const double> lambda, std::span<const double> phi,
                                        const PerturbParams& p) {
  if (!(p.alpha > 0.0) || !(p.beta > 0.0)) throw ShapeError("height perturbation: alpha and beta must be > 0");
  std::vector<double> h(lambda.size() * phi.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const double lam = lambda[i];
    if (!(lam > -std::numbers::pi && lam < std::numbers::pi)) {
      throw ShapeError("height perturbation: longitude outside (-pi, pi)");
    }
    const double zonal = std::exp(-(lam / p.alpha) * (lam / p.alpha));
    for (std::size_t j = 0; j < phi.size(); ++j) {
      const double r = (p.phi2 - phi[j]) / p.beta;
      h[i * phi.size() + j] = p.h_hat * std::cos(phi[j]) * zonal * std::exp(-r * r);
    }
  }
  return h;
}

std::vector<double> balanced_height(std::span<const double> phi, const JetParams& p, double mean_depth, int nodes,
                                    const EarthConstants& earth) {
  check_jet(p);
  if (phi.empty()) return {};
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (phi[i] < -std::numbers::pi / 2.0 || phi[i] > std::numbers::pi / 2.0 || (i > 0 && !(phi[i] > phi[i - 1]))) {
      throw ShapeError("balanced height: latitudes must be increasing within [-pi/2, pi/2]");
    }
  }
  auto integrand = [&](double ph) {
    const double u = zonal_jet_u(ph, p);
    if (u == 0.0) return 0.0;
    const double f = 2.0 * earth.rotation * std::sin(ph);
    return earth.radius * u * (f + std::tan(ph) * u / earth.radius);
  };
  // Cumulative integral from -pi/2 to each grid latitude.
  std::vector<double> cumulative(phi.size());
  double acc = 0.0;
  double prev = -std::numbers::pi / 2.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (phi[i] > prev) acc += gauss_legendre(integrand, prev, phi[i], nodes);
    cumulative[i] = acc;
    prev = phi[i];
  }
  double wsum = 0.0, isum = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double w = std::cos(phi[i]);
    wsum += w;
    isum += w * cumulative[i];
  }
  if (!(wsum > 0.0)) throw ShapeError("balanced height: grid has zero area weight");
  const double h0 = mean_depth + isum / (earth.gravity * wsum);
  std::vector<double> h(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) h[i] = h0 - cumulative[i] / earth.gravity;
  return h;
}

// ---------------------------------------------------------------------------

CrackParams sample_crack_params(std::uint64_t seed) {
  CounterRng rng(seed, 17);
  CrackParams c;
  c.y_c = rng.uniform(0.3, 0.7);
  c.l_c = rng.uniform(0.4, 0.6);
  return c;
}

double crack_distance(double x, double y, const CrackParams& c) {
  const double dx = x < 0.0 ? -x : (x > c.l_c ? x - c.l_c : 0.0);
  const double dy = y - c.y_c;
  return std::sqrt(dx * dx + dy * dy);
}

double strain_history_at(double x, double y, const CrackParams& c) {
  if (!(c.l0 > 0.0)) throw ShapeError("strain history: l0 must be > 0");
  const double d = crack_distance(x, y, c);
  if (d > c.l0 / 2.0) return 0.0;
  return c.B * c.G_c / (2.0 * c.l0) * (1.0 - 2.0 * d / c.l0);
}

std::vector<double> strain_history(std::size_t nx, std::size_t ny, const CrackParams& c) {
  std::vector<double> h(nx * ny);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      h[ix * ny + iy] = strain_history_at(grid_coordinate(ix, nx), grid_coordinate(iy, ny), c);
    }
  }
  return h;
}

}  // namespace ldon
