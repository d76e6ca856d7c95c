#pragma once

// Two-dimensional Fourier neural operator applied recurrently in time:
// u_{k+1} = Q(L_T(...L_1(P(u_k, x, y)))), with
// L(v) = act(W v + b + IFFT(R . FFT(v))) and R acting on the retained modes.

#include <cstdint>
#include <utility>
#include <vector>

#include "ldon/deeponet.hpp"
#include "ldon/nn.hpp"

namespace ldon {

/// Frequency pairs (fx, fy) kept by a k_max truncation: each axis keeps
/// f in [-k_max, k_max - 1], stored as grid indices (f mod extent). Row-major
/// over (fx, fy). Requires 2 * k_max <= extent.
std::vector<std::pair<std::size_t, std::size_t>> retained_modes(std::size_t rows, std::size_t cols, std::size_t k_max);

/// x [B,C,H,W] real, weights [2, K, C, O] (real and imaginary parts, K the
/// retained mode count) -> [B,O,H,W] = Re(IFFT(sum_c FFT(x)[.,c,k] W[k,c,o])).
Var spectral_conv2d(const Var& x, const Var& weights, std::size_t k_max);

struct FnoConfig {
  std::size_t width = 32;
  std::size_t layers = 4;
  std::size_t modes = 8;
  Activation activation = Activation::relu;
  std::uint64_t seed = 0;
};

class FnoModel {
 public:
  FnoModel(FnoConfig cfg, std::size_t nx, std::size_t ny);

  const FnoConfig& config() const { return cfg_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  std::size_t parameter_count() const { return params_.scalar_count(); }

  /// v [B,width,H,W] -> [B,width,H,W], Fourier layer `l`.
  Var fourier_layer(const BoundParams& p, std::size_t l, const Var& v) const;
  /// One time step: u [B,1,H,W] -> [B,1,H,W].
  Var step(const BoundParams& p, const Var& u) const;

  /// u0 [B, nx*ny] -> [B, steps*nx*ny] by feeding each prediction back in.
  Matrix rollout(const Matrix& initial, std::size_t steps) const;

 private:
  FnoConfig cfg_;
  std::size_t nx_;
  std::size_t ny_;
  ParamStore params_;
  Tensor coords_;  ///< [1,2,H,W]: x then y cell-center coordinates
};

/// Teacher-forced one-step training on (u_k, u_{k+1}) pairs, u_0 = initial.
/// initial [N, nx*ny], trajectories [N, m_t*nx*ny], all normalized alike.
TrainLog train_fno(FnoModel& model, const Matrix& initial, const Matrix& trajectories, const TrainOptions& opts);

}  // namespace ldon
