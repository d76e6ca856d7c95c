#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ldon/datagen.hpp"
#include "ldon/error.hpp"
#include "ldon/rng.hpp"

using namespace ldon;

namespace {

constexpr double kPi = std::numbers::pi;

DiffusionConfig small_diffusion() {
  DiffusionConfig cfg;
  cfg.grf.nx = 16;
  cfg.grf.ny = 8;
  cfg.grf.length_x = cfg.grf.length_y = 0.3;
  cfg.samples = 12;
  cfg.snapshots = 5;
  return cfg;
}

std::vector<double> random_field(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> f(n);
  for (auto& v : f) v = rng.uniform(-1.0, 2.0);
  return f;
}

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

// Composite Simpson on a fine mesh, used as an independent integration oracle.
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST(ZonalJet, ZeroOutsideAndUmaxAtMidpoint) {
  JetParams p;
  EXPECT_EQ(zonal_jet_u(p.phi0 - 0.1, p), 0.0);
  EXPECT_EQ(zonal_jet_u(p.phi1 + 0.1, p), 0.0);
  EXPECT_EQ(zonal_jet_u(p.phi0, p), 0.0);
  EXPECT_NEAR(zonal_jet_u(0.5 * (p.phi0 + p.phi1), p), p.u_max, 1e-12);
}

TEST(ZonalJet, GridMaximumIsUmax) {
  JetParams p;
  p.u_max = 80.0;
  p.phi0 = kPi / 7.0;
  p.phi1 = kPi / 2.0 - kPi / 7.0;
  const auto u = zonal_jet_u(latitude_grid(256), p);
  EXPECT_NEAR(*std::max_element(u.begin(), u.end()), 80.0, 1e-6);
}

TEST(ZonalJet, ContinuousAtBoundaries) {
  JetParams p;
  EXPECT_LT(zonal_jet_u(p.phi0 + 1e-3, p), 1e-100);
  EXPECT_LT(zonal_jet_u(p.phi1 - 1e-3, p), 1e-100);
}

TEST(ZonalJet, RejectsInvertedBounds) {
  JetParams p;
  std::swap(p.phi0, p.phi1);
  EXPECT_THROW(zonal_jet_u(0.3, p), ShapeError);
}

TEST(HeightPerturbation, PeakAndDecay) {
  PerturbParams p;
  const std::vector<double> lam{0.0, 3.0 * p.alpha, -3.0 * p.alpha};
  const std::vector<double> phi{p.phi2};
  const auto h = height_perturbation(lam, phi, p);
  EXPECT_NEAR(h[0], p.h_hat * std::cos(p.phi2), 1e-12);
  EXPECT_NEAR(h[1], p.h_hat * std::cos(p.phi2) * std::exp(-9.0), 1e-14);
  EXPECT_NEAR(h[2], h[1], 1e-18);
}

TEST(HeightPerturbation, EvenInLongitude) {
  const auto p = sample_perturb_params(3);
  const auto lam = longitude_grid(64);
  const auto phi = latitude_grid(32);
  const auto h = height_perturbation(lam, phi, p);
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 32; ++j) EXPECT_NEAR(h[i * 32 + j], h[(63 - i) * 32 + j], 1e-12);
}

TEST(HeightPerturbation, SampledShapeParametersInSupport) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto p = sample_perturb_params(s);
    EXPECT_GE(p.alpha, 1.0 / 9.0);
    EXPECT_LE(p.alpha, 0.5);
    EXPECT_GE(p.beta, 1.0 / 30.0);
    EXPECT_LE(p.beta, 0.2);
  }
  PerturbParams bad;
  bad.alpha = 0.0;
  EXPECT_THROW(height_perturbation(std::vector<double>{0.0}, std::vector<double>{0.0}, bad), ShapeError);
}

TEST(BalancedHeight, RestingFluidIsFlat) {
  JetParams p;
  p.u_max = 0.0;
  for (double h : balanced_height(latitude_grid(64), p, 10000.0)) EXPECT_NEAR(h, 10000.0, 1e-9);
}

TEST(BalancedHeight, WeightedMeanDepth) {
  const auto phi = latitude_grid(128);
  const auto h = balanced_height(phi, JetParams{}, 10000.0);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    num += std::cos(phi[i]) * h[i];
    den += std::cos(phi[i]);
  }
  EXPECT_NEAR(num / den, 10000.0, 1e-8);
}

TEST(BalancedHeight, QuadratureRefinementAndIndependentIntegral) {
  const auto phi = latitude_grid(64);
  const JetParams p;
  const auto h16 = balanced_height(phi, p, 10000.0, 16);
  const auto h32 = balanced_height(phi, p, 10000.0, 32);
  for (std::size_t i = 0; i < phi.size(); ++i) EXPECT_NEAR(h16[i], h32[i], 1e-6 * std::abs(h32[i]));

  // g*(h(b) - h(a)) = -integral of a*u*(f + tan(phi) u / a) between two latitudes.
  const EarthConstants e;
  auto integrand = [&](double ph) {
    const double u = zonal_jet_u(ph, p);
    return e.radius * u * (2.0 * e.rotation * std::sin(ph) + std::tan(ph) * u / e.radius);
  };
  const std::size_t ia = 16, ib = 48;
  const double expected = -simpson(integrand, phi[ia], phi[ib], 20000) / e.gravity;
  EXPECT_NEAR(h32[ib] - h32[ia], expected, 1e-6 * std::abs(expected));
  EXPECT_LT(h32[ib], h32[ia]);  // northern-hemisphere westerly jet: depth drops poleward
}

TEST(StrainHistory, OnCrackValue) {
  CrackParams c;
  c.B = 1e3;
  c.G_c = 2.7e-3;
  c.l0 = 0.0125;
  // B * G_c / (2 l0) = 2.7 / 0.025 = 108
  EXPECT_NEAR(strain_history_at(0.5 * c.l_c, c.y_c, c), 108.0, 1e-9);
  EXPECT_NEAR(strain_history_at(0.0, c.y_c, c), 108.0, 1e-9);
}

TEST(StrainHistory, VanishesAtAndBeyondHalfLengthScale) {
  CrackParams c;
  EXPECT_NEAR(strain_history_at(0.2, c.y_c + c.l0 / 2.0, c), 0.0, 1e-12);
  EXPECT_EQ(strain_history_at(0.2, c.y_c + 0.6 * c.l0, c), 0.0);
  EXPECT_EQ(strain_history_at(c.l_c + c.l0, c.y_c, c), 0.0);
  EXPECT_NEAR(strain_history_at(0.2, c.y_c + c.l0 / 4.0, c), 54.0, 1e-9);
}

TEST(StrainHistory, DistanceIsToSegment) {
  CrackParams c;
  c.y_c = 0.5;
  c.l_c = 0.4;
  EXPECT_DOUBLE_EQ(crack_distance(0.2, 0.8, c), 0.3);
  EXPECT_NEAR(crack_distance(0.7, 0.9, c), 0.5, 1e-15);  // 3-4-5 triangle from the tip
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto r = sample_crack_params(s);
    EXPECT_GE(r.y_c, 0.3);
    EXPECT_LE(r.y_c, 0.7);
    EXPECT_GE(r.l_c, 0.4);
    EXPECT_LE(r.l_c, 0.6);
  }
}

TEST(AnalyticIcs, Deterministic) {
  EXPECT_EQ(strain_history(16, 16, sample_crack_params(4)), strain_history(16, 16, sample_crack_params(4)));
  const auto p = sample_perturb_params(9);
  EXPECT_EQ(height_perturbation(longitude_grid(8), latitude_grid(8), p),
            height_perturbation(longitude_grid(8), latitude_grid(8), p));
}

TEST(Diffusion, ConstantIsFixedPointWithoutReaction) {
  auto cfg = small_diffusion();
  cfg.reaction_rate = 0.0;
  const std::vector<double> ic(128, 1.75);
  for (double v : diffuse(ic, cfg)) EXPECT_NEAR(v, 1.75, 1e-12);
}

TEST(Diffusion, PureReactionIsExponentialDecay) {
  auto cfg = small_diffusion();
  cfg.diffusivity = 0.0;
  cfg.reaction_rate = 1.3;
  const auto ic = random_field(128, 1);
  const auto traj = diffuse(ic, cfg);
  for (std::size_t k = 0; k < cfg.snapshots; ++k) {
    const double t = cfg.t_final * static_cast<double>(k + 1) / cfg.snapshots;
    for (std::size_t i = 0; i < 128; ++i) EXPECT_NEAR(traj[k * 128 + i], ic[i] * std::exp(-1.3 * t), 1e-12);
  }
}

TEST(Diffusion, MeanDecaysExponentially) {
  auto cfg = small_diffusion();
  cfg.reaction_rate = 0.7;
  const auto ic = random_field(128, 2);
  const auto traj = diffuse(ic, cfg);
  const double m0 = mean_of(ic);
  for (std::size_t k = 0; k < cfg.snapshots; ++k) {
    const double t = cfg.t_final * static_cast<double>(k + 1) / cfg.snapshots;
    const double mk = mean_of(std::span<const double>(traj).subspan(k * 128, 128));
    EXPECT_NEAR(mk, m0 * std::exp(-0.7 * t), 1e-6 * std::abs(m0 * std::exp(-0.7 * t)));
  }
}

TEST(Diffusion, MeanConservedWithoutReaction) {
  auto cfg = small_diffusion();
  cfg.reaction_rate = 0.0;
  const auto ic = random_field(128, 3);
  const auto traj = diffuse(ic, cfg);
  for (std::size_t k = 0; k < cfg.snapshots; ++k) {
    EXPECT_NEAR(mean_of(std::span<const double>(traj).subspan(k * 128, 128)), mean_of(ic), 1e-10);
  }
}

TEST(Diffusion, MaximumNonIncreasing) {
  auto cfg = small_diffusion();
  const auto ic = random_field(128, 4);
  const auto traj = diffuse(ic, cfg);
  double prev = *std::max_element(ic.begin(), ic.end());
  for (std::size_t k = 0; k < cfg.snapshots; ++k) {
    const double mx = *std::max_element(traj.begin() + k * 128, traj.begin() + (k + 1) * 128);
    EXPECT_LE(mx, prev + 1e-12);
    prev = mx;
  }
}

TEST(Diffusion, RejectsUnstableStep) {
  auto cfg = small_diffusion();
  cfg.diffusivity = 1.0;
  try {
    diffuse(std::vector<double>(128, 0.0), cfg);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("D*dt/dx^2"), std::string::npos);
  }
  auto odd = small_diffusion();
  odd.grf.nx = 12;
  EXPECT_THROW(generate_diffusion_dataset(odd), ShapeError);
}

TEST(Dataset, ShapesSplitAndNormalization) {
  const auto cfg = small_diffusion();
  const auto ds = generate_diffusion_dataset(cfg);
  EXPECT_EQ(ds.samples(), 12u);
  EXPECT_EQ(ds.n_train, 11u);
  EXPECT_EQ(ds.outputs.cols(), static_cast<Eigen::Index>(5 * 128));
  ASSERT_EQ(ds.zeta.size(), 5u);
  EXPECT_DOUBLE_EQ(ds.zeta.back(), 1.0);
  for (std::size_t k = 1; k < ds.zeta.size(); ++k) EXPECT_GT(ds.zeta[k], ds.zeta[k - 1]);

  const Matrix ni = ds.normalized_inputs().topRows(static_cast<Eigen::Index>(ds.n_train));
  const Matrix no = ds.normalized_outputs().topRows(static_cast<Eigen::Index>(ds.n_train));
  EXPECT_GE(ni.minCoeff(), 0.0);
  EXPECT_LE(ni.maxCoeff(), 1.0);
  EXPECT_NEAR(ni.minCoeff(), 0.0, 1e-15);
  EXPECT_NEAR(ni.maxCoeff(), 1.0, 1e-15);
  EXPECT_GE(no.minCoeff(), 0.0);
  EXPECT_LE(no.maxCoeff(), 1.0);
  // Normalization constants come from the training rows only.
  const Matrix train_in = ds.inputs.topRows(static_cast<Eigen::Index>(ds.n_train));
  EXPECT_EQ(ds.input_norm.min, train_in.minCoeff());
  EXPECT_EQ(ds.input_norm.max, train_in.maxCoeff());
}

TEST(Dataset, RowsAreTrajectoriesOfTheirInitialConditions) {
  const auto cfg = small_diffusion();
  const auto ds = generate_diffusion_dataset(cfg);
  const Eigen::RowVectorXd ic = ds.inputs.row(4);
  const auto traj = diffuse(std::vector<double>(ic.data(), ic.data() + ic.size()), cfg);
  for (std::size_t i = 0; i < traj.size(); ++i) EXPECT_EQ(ds.outputs(4, static_cast<Eigen::Index>(i)), traj[i]);
}

TEST(Dataset, DeterministicForSeed) {
  auto cfg = small_diffusion();
  const auto a = generate_diffusion_dataset(cfg);
  const auto b = generate_diffusion_dataset(cfg);
  EXPECT_TRUE(a.inputs == b.inputs);
  EXPECT_TRUE(a.outputs == b.outputs);
  cfg.grf.seed = 1;
  EXPECT_FALSE(generate_diffusion_dataset(cfg).inputs == a.inputs);
}

TEST(Dataset, ValidateCatchesBrokenInvariants) {
  auto ds = generate_diffusion_dataset(small_diffusion());
  auto broken = ds;
  broken.zeta[2] = broken.zeta[1];
  EXPECT_THROW(broken.validate(), ShapeError);
  broken = ds;
  broken.m_t = 1;
  EXPECT_THROW(broken.validate(), ShapeError);
}
