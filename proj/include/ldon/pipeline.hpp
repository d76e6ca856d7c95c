#pragma once

// Experiment orchestration: data, reducers, operators, the seed matrix and
// the artifacts each step leaves on disk.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ldon/config.hpp"
#include "ldon/container.hpp"
#include "ldon/datagen.hpp"
#include "ldon/deeponet.hpp"
#include "ldon/dimred.hpp"
#include "ldon/fno.hpp"

namespace ldon {

struct RunReport {
  std::string config_hash;
  std::string model;  ///< latent, full or fno
  std::string reducer;  ///< mlae, pca or empty
  std::size_t d = 0;
  std::uint64_t seed = 0;
  std::vector<double> train_loss;
  std::vector<double> reducer_loss;
  std::vector<std::pair<std::size_t, double>> validation_mse;
  std::optional<double> latent_mse;  ///< test split, latent space
  double decoded_mse = 0.0;          ///< test split, physical units
  std::map<std::string, double> seconds;  ///< per phase
  std::map<std::string, std::size_t> parameters;
  std::vector<std::string> warnings;
};

std::string report_json(const RunReport& r);

// Artifact conversion. Every from_container rejects a container of the wrong
// kind with ArtifactError.
TensorContainer to_container(const FieldDataset& ds);
FieldDataset dataset_from_container(const TensorContainer& c);
TensorContainer to_container(const ReducerModel& m);
ReducerModel reducer_from_container(const TensorContainer& c);
TensorContainer to_container(const DeepOnetModel& m);
DeepOnetModel deeponet_from_container(const TensorContainer& c);
TensorContainer to_container(const FnoModel& m);
FnoModel fno_from_container(const TensorContainer& c);
/// "dataset", "reducer", "deeponet" or "fno".
std::string artifact_kind(const TensorContainer& c);

FieldDataset generate_dataset(const ExperimentConfig& cfg);

ReducerModel fit_reducer(const ExperimentConfig& cfg, const FieldDataset& ds, std::size_t d, std::uint64_t seed);

/// Latent-mode operator for `d`; throws if its parameter count is not below
/// the full-field model's for the same configuration.
DeepOnetModel make_latent_deeponet(const ExperimentConfig& cfg, std::size_t d, std::uint64_t seed,
                                   std::vector<std::string>* warnings = nullptr);
DeepOnetModel make_full_deeponet(const ExperimentConfig& cfg, std::uint64_t seed);
FnoModel make_fno(const ExperimentConfig& cfg, std::uint64_t seed);

struct TrainedOperator {
  OperatorKind kind = OperatorKind::latent;
  std::shared_ptr<ReducerModel> reducer;  ///< latent only
  std::shared_ptr<DeepOnetModel> deeponet;
  std::shared_ptr<FnoModel> fno;
  RunReport report;
};

/// Fits (or reuses) the reducer, trains the operator on the training split
/// and evaluates on the test split.
TrainedOperator train_operator(const ExperimentConfig& cfg, const FieldDataset& ds, OperatorKind kind, std::size_t d,
                               std::uint64_t seed, std::shared_ptr<ReducerModel> reducer = nullptr);

/// Decoded, denormalized trajectories [rows, m_t * points] for dataset rows
/// [begin, end).
Matrix predict_rows(const TrainedOperator& op, const FieldDataset& ds, std::size_t begin, std::size_t end);

struct CompareRow {
  std::string model;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  double seconds = 0.0;  ///< operator training wall-clock
  std::size_t parameters = 0;
  RunReport report;
};

/// Every (model, d) entry crossed with every seed, `threads` jobs at a time.
/// Row order is fixed by the config, not by completion order.
std::vector<CompareRow> run_compare(const ExperimentConfig& cfg, const FieldDataset& ds, std::size_t threads);

/// model,d,seed,mse,wallclock
std::string compare_csv(const std::vector<CompareRow>& rows);
/// model,d,seed,mse,params (no timing, so reruns are byte-identical)
std::string compare_mse_csv(const std::vector<CompareRow>& rows);

/// One row per value: tensor,index,value. The manifest becomes key,value rows
/// under a `__manifest` tensor name.
std::string export_csv(const TensorContainer& c);

std::string operator_name(OperatorKind k);

/// LDON_THREADS, or the hardware concurrency when unset.
std::size_t thread_budget();

/// Writes text through a temporary file and rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace ldon
