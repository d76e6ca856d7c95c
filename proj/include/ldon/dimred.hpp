#pragma once

// Invertible dimension reducers (multi-layer autoencoder and PCA) fitted on
// snapshot matrices: each row is one flattened field.

#include <cstdint>
#include <vector>

#include "ldon/datagen.hpp"
#include "ldon/linalg.hpp"
#include "ldon/nn.hpp"

namespace ldon {

enum class SnapshotMode { combined, outputs_only, inputs_only };

struct SnapshotSet {
  Matrix rows;  ///< one normalized snapshot per row
  std::size_t nx = 0;
  std::size_t ny = 0;
};

/// Normalized training-split snapshots: inputs first (one row per sample),
/// then every output time slice (sample-major, time-minor).
SnapshotSet assemble_snapshots(const FieldDataset& ds, SnapshotMode mode);

enum class ReducerKind { mlae, pca };

struct MlaeConfig {
  std::size_t latent_dim = 64;
  /// Full width list [D, ..., d]; empty selects default_mlae_widths.
  std::vector<std::size_t> widths;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

/// [D, w1, w2, w3, d] with w_k = round(D * (d/D)^(k/4)).
std::vector<std::size_t> default_mlae_widths(std::size_t input_dim, std::size_t latent_dim);

class ReducerModel {
 public:
  ReducerKind kind = ReducerKind::pca;
  std::size_t input_dim = 0;
  std::size_t latent_dim = 0;

  // mlae: encoder widths [D, ..., d]; decoder mirrors them.
  std::vector<std::size_t> widths;
  ParamStore params;

  // pca
  Vector mean;
  Matrix basis;  ///< D x d, orthonormal columns

  std::vector<double> training_log;  ///< per-epoch mean loss (mlae)

  Matrix encode(const Matrix& rows) const;
  Matrix decode(const Matrix& latents) const;
  Matrix reconstruct(const Matrix& rows) const { return decode(encode(rows)); }

  /// Encoder-then-decoder layer count (mlae).
  std::size_t layer_count() const { return widths.empty() ? 0 : 2 * (widths.size() - 1); }
  /// Builds the (mlae) reconstruction graph on a tape; input [B, D].
  Var mlae_forward(const BoundParams& p, const Var& x) const;
  Var mlae_encode(const BoundParams& p, const Var& x) const;
  Var mlae_decode(const BoundParams& p, const Var& z) const;
};

ReducerModel fit_mlae(const SnapshotSet& snaps, const MlaeConfig& cfg);
ReducerModel fit_pca(const SnapshotSet& snaps, std::size_t latent_dim);

/// Mean over rows and coordinates of (z - decode(encode(z)))^2.
double reconstruction_mse(const ReducerModel& model, const Matrix& rows);

bool is_perfect_square(std::size_t n);

}  // namespace ldon
