#pragma once

// DeepONet in two layouts.
//
// latent: the branch sees the d latent coordinates as a sqrt(d) x sqrt(d)
//   image and emits d*p values; each latent coordinate k at time zeta is
//   sum_i B[k,i] T_i(zeta) + b0.
// full: the branch sees the nx x ny field and emits p values; the trunk
//   emits p values per output pixel.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ldon/datagen.hpp"
#include "ldon/dimred.hpp"
#include "ldon/linalg.hpp"
#include "ldon/nn.hpp"

namespace ldon {

enum class DeepOnetMode { latent, full };
enum class BranchKind { conv, dense };

struct DeepOnetConfig {
  DeepOnetMode mode = DeepOnetMode::latent;
  BranchKind branch = BranchKind::conv;
  std::size_t p = 5;
  std::size_t input_rows = 8;   ///< branch image height (sqrt(d) or nx)
  std::size_t input_cols = 8;   ///< branch image width
  std::size_t output_dim = 64;  ///< values per time step (d or nx*ny)
  std::vector<std::size_t> conv_filters{32, 16, 16};
  std::size_t dense_width = 100;  ///< branch fallback hidden width
  std::size_t trunk_width = 100;
  std::size_t trunk_layers = 2;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return input_rows * input_cols; }
};

/// Latent layout for a d-dimensional encoding. A non-square d selects the
/// dense branch and appends a warning.
DeepOnetConfig latent_deeponet_config(std::size_t d, std::size_t p, std::uint64_t seed,
                                      std::vector<std::string>* warnings = nullptr);
DeepOnetConfig full_deeponet_config(std::size_t nx, std::size_t ny, std::size_t p, std::uint64_t seed);

struct BatchNormStats {
  std::vector<double> mean;
  std::vector<double> var;
  bool initialized = false;
};

class DeepOnetModel {
 public:
  explicit DeepOnetModel(DeepOnetConfig cfg);

  const DeepOnetConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  std::vector<BatchNormStats>& batch_norm() { return bn_; }
  const std::vector<BatchNormStats>& batch_norm() const { return bn_; }
  std::size_t parameter_count() const { return params_.scalar_count(); }

  /// inputs [B, input_dim], zeta [m_t, 1] -> [B, m_t, output_dim]. With
  /// `training` set, batch-norm running statistics absorb this batch first.
  Var forward(const BoundParams& p, const Var& inputs, const Var& zeta, bool training);
  Var forward(const BoundParams& p, const Var& inputs, const Var& zeta) const;

  /// Inference. inputs [B, input_dim] -> [B, m_t * output_dim] (time-major per row).
  Matrix predict(const Matrix& inputs, std::span<const double> zeta) const;

  /// Branch output [B, p*output_dim] (latent) or [B, p] (full).
  Matrix branch_outputs(const Matrix& inputs) const;
  /// Trunk output [m_t, p] (latent) or [m_t, p*output_dim] (full).
  Matrix trunk_outputs(std::span<const double> zeta) const;
  double bias() const { return params_.get("b0").item(); }

 private:
  Var branch(const BoundParams& p, const Var& inputs, std::vector<BatchNormStats>* update) const;
  Var trunk(const BoundParams& p, const Var& zeta) const;
  Var combine(const Var& b, const Var& t, const Var& b0) const;
  Var build(const BoundParams& p, const Var& inputs, const Var& zeta, std::vector<BatchNormStats>* update) const;

  DeepOnetConfig cfg_;
  ParamStore params_;
  std::vector<BatchNormStats> bn_;
};

/// Rejects zeta outside [0, 1].
void check_zeta(std::span<const double> zeta);

struct OperatorData {
  Matrix inputs;              ///< [N, input_dim]
  Matrix targets;             ///< [N, m_t * output_dim]
  std::vector<double> zeta;   ///< m_t
};

struct TrainOptions {
  std::size_t epochs = 100;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  /// Called every `validate_every` epochs (0 disables) after the update.
  std::function<double()> validate;
  std::size_t validate_every = 0;
};

struct TrainLog {
  std::vector<double> epoch_loss;
  std::vector<std::pair<std::size_t, double>> validation;
  double seconds = 0.0;
};

/// Minimizes the mean squared error between model(inputs, zeta) and targets.
TrainLog train_deeponet(DeepOnetModel& model, const OperatorData& data, const TrainOptions& opts);

/// Raw input fields [B, nx*ny] -> decoded, denormalized trajectories
/// [B, m_t*nx*ny]: normalize, encode, operator, decode, denormalize.
Matrix l_deeponet_predict(const ReducerModel& reducer, const DeepOnetModel& model, const Matrix& raw_inputs,
                          std::span<const double> zeta, const MinMax& input_norm, const MinMax& output_norm);
/// Single field; result shaped [m_t, nx, ny].
Tensor l_deeponet_predict(const ReducerModel& reducer, const DeepOnetModel& model, std::span<const double> raw_input,
                          std::size_t nx, std::size_t ny, std::span<const double> zeta, const MinMax& input_norm,
                          const MinMax& output_norm);

}  // namespace ldon
