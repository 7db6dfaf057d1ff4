#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cedl/checkpoint.hpp"
#include "cedl/data.hpp"
#include "cedl/eval.hpp"
#include "cedl/trainer.hpp"

namespace cedl {

enum class SourceKind { Csv, Svmlight, Clusters, SpikeSeries };
enum class Modality { Tabular, Series, LabelledClasses };
enum class Protocol { Single, Rotation, ProportionSweep };

struct DataSource {
  SourceKind kind = SourceKind::Csv;
  std::filesystem::path path;
  CsvOptions csv;
  std::vector<ClusterSpec> clusters;
  SpikeSeriesSpec spikes;
  /// Generator seed for synthetic sources; defaults to the training seed.
  std::optional<std::uint64_t> generator_seed;
};

struct EncoderConfig {
  std::vector<std::size_t> hidden{1000, 256, 64};
  std::size_t latent_dim = 32;
  Activation hidden_activation = Activation::Relu;
  Activation output_activation = Activation::Tanh;
};

/// Everything one experiment needs. Defaults are the tabular settings:
/// d -> 1000 -> 256 -> 64 -> 32 (relu, tanh output), Adam lr 1e-4, batch 64,
/// 100 epochs, seed 42, stratified 60/40 split, w1 = N_normal / N_anomalous.
struct ExperimentConfig {
  std::string id = "experiment";
  DataSource data;
  Modality modality = Modality::Tabular;
  EncoderConfig encoder;
  TrainConfig train;
  bool auto_weight = true;
  double train_fraction = 0.6;
  /// Class ids held out of training (test-only anomalies).
  std::vector<int> unseen_classes;
  SeriesWindowSpec window;
  double chronological_fraction = 0.5;
  Protocol protocol = Protocol::Single;
  std::vector<double> proportions{0.01, 0.05, 0.10, 0.15, 0.20};
  std::vector<ObjectiveKind> sweep_objectives{ObjectiveKind::Cedl, ObjectiveKind::Bce};
  std::filesystem::path output_dir = "results";
  bool record_timing = false;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// FNV-1a-64 (hex) of the canonical JSON form, excluding output_dir. Key
/// order in the source file does not matter.
std::string config_digest(const ExperimentConfig& cfg);

/// Environment variable that overrides the output directory.
inline constexpr const char* kOutputDirEnv = "CEDL_OUTPUT_DIR";
void apply_environment(ExperimentConfig& cfg);

struct ResultRecord {
  std::string experiment_id;
  std::string config_digest;
  std::string protocol;
  ObjectiveKind objective = ObjectiveKind::Cedl;
  std::uint64_t seed = 0;
  MetricReport metrics;
  std::optional<MetricReport> seen;
  std::optional<MetricReport> unseen;
  std::size_t train_size = 0;
  std::size_t train_anomalies = 0;
  double realized_anomaly_fraction = 0.0;
  std::optional<double> requested_anomaly_fraction;
  std::size_t test_size = 0;
  double w0 = 1.0;
  double w1 = 1.0;
  double alpha = 1.0;
  double best_loss = 0.0;
  std::size_t best_epoch = 0;
  std::string checkpoint;  // file name relative to the output directory
  std::optional<double> wall_time_s;
};

/// One JSON object per line; keys are emitted in sorted order.
std::string to_json_line(const ResultRecord& record);
nlohmann::json to_json(const MetricReport& report);

/// Serialised appends to <output_dir>/results.jsonl.
class ResultWriter {
 public:
  explicit ResultWriter(std::filesystem::path path) : path_(std::move(path)) {}
  void append(const ResultRecord& record);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

/// Train/test data after loading, splitting (and windowing for series).
struct PreparedData {
  Dataset train;
  Dataset test;
};

Dataset load_source(const ExperimentConfig& cfg);
PreparedData prepare_data(const ExperimentConfig& cfg);

/// The shared train -> score -> checkpoint step used by every protocol. The
/// seen/unseen breakdown is filled when the test set holds anomaly classes
/// that never occur in `train`.
struct CellOutcome {
  ResultRecord record;
  TrainReport report;
  ScoreBatch test_scores;
};
CellOutcome run_cell(const ExperimentConfig& cfg, const Dataset& train, const Dataset& test,
                     const std::string& cell_id, std::uint64_t seed);

std::vector<ResultRecord> run_single(const ExperimentConfig& cfg);

/// Per-cell seed for the rotation cell whose known anomaly class is k.
inline std::uint64_t rotation_cell_seed(std::uint64_t master, int k) noexcept {
  return master + static_cast<std::uint64_t>(k);
}
std::vector<ResultRecord> run_rotation(const ExperimentConfig& cfg);

/// Subsampling seed of the i-th sweep proportion.
inline std::uint64_t sweep_sampling_seed(std::uint64_t master, std::size_t i) noexcept {
  return master + 100 * static_cast<std::uint64_t>(i);
}
std::vector<ResultRecord> run_proportion_sweep(const ExperimentConfig& cfg);

/// Dispatches on cfg.protocol.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg);

/// CSV with header "label,r0..r{D-1},distance,score", one row per sample in
/// dataset order. `distance` is ||r - c||; `score` is the detector's anomaly
/// probability.
void export_embeddings(const Checkpoint& ckpt, const Dataset& ds,
                       const std::filesystem::path& out_path);
std::string embeddings_csv(const Checkpoint& ckpt, const Dataset& ds);

/// Scores `ds` with the checkpoint and computes metrics.
MetricReport eval_checkpoint(const Checkpoint& ckpt, const Dataset& ds);

}  // namespace cedl
