#pragma once

// Experiment configuration: flat `key = value` text with dotted keys and
// `#` comments. Unknown keys are errors.

#include <cstdint>
#include <string>
#include <vector>

#include "ldon/datagen.hpp"
#include "ldon/dimred.hpp"

namespace ldon {

enum class OperatorKind { latent, full, fno };

struct ExperimentConfig {
  DiffusionConfig data;

  ReducerKind reducer_kind = ReducerKind::mlae;
  std::size_t reducer_d = 64;
  std::size_t reducer_epochs = 200;
  std::size_t reducer_batch = 32;
  double reducer_lr = 1e-3;

  OperatorKind operator_kind = OperatorKind::latent;
  std::size_t operator_p = 5;
  std::size_t operator_epochs = 200;
  std::size_t operator_batch = 16;
  double operator_lr = 1e-3;
  std::string operator_branch = "conv";
  bool decode_in_loss = false;
  std::size_t validate_every = 0;

  std::size_t fno_width = 32;
  std::size_t fno_layers = 4;
  std::size_t fno_modes = 8;
  std::size_t fno_epochs = 20;
  std::size_t fno_batch = 16;
  double fno_lr = 1e-3;

  std::vector<std::string> compare_models{"latent", "full"};
  std::vector<std::size_t> compare_d{16, 64};

  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string output_dir = "ldon_out";

  /// Non-fatal advice collected by validate().
  std::vector<std::string> warnings;

  /// Cross-field checks; throws ConfigError.
  void validate();
};

/// Parses text on top of the defaults. Errors carry "line L, column C".
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Applies one `key=value` override.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Every key in a fixed order; reals with 17 significant digits.
std::string canonical_config(const ExperimentConfig& cfg);
/// FNV-1a 64 of the canonical text without output.dir, 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

std::string format_real(double v);

}  // namespace ldon
