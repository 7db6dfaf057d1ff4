#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cedl/numerics.hpp"

namespace cedl {

/// Labelled feature records. `labels` are binary (0 normal, 1 anomaly);
/// `classes` keeps the source class id (equal to the label for binary
/// sources) and `ids` the stable sample id used for leakage checks.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<int> classes;
  std::vector<std::size_t> ids;
  std::string provenance;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t width() const noexcept { return features.cols(); }
  std::size_t count_label(int y) const noexcept;

  /// Rows at `indices`, in that order, carrying labels/classes/ids along.
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Throws Error(Format) if widths/lengths disagree, the set is empty, a
/// feature is non-finite or a label is not binary.
void validate(const Dataset& ds);

struct CsvOptions {
  /// Zero-based label column; negative counts from the end (-1 = last).
  int label_column = -1;
  bool header = false;
  /// Accept any non-negative integer class id; label = (class != 0).
  bool multiclass = false;
};

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
/// Features then label, shortest round-trip decimal form.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// "label idx:val ..." with 1-based ascending indices; densified to the
/// largest index seen in the file. Labels -1/0 map to 0 and 1/+1 to 1.
Dataset load_svmlight(const std::filesystem::path& path);

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double train_fraction = 0.6,
                                             std::uint64_t seed = 42);

/// Same rounding rule, stratified on `classes` instead of the binary label.
std::pair<Dataset, Dataset> stratified_split_by_class(const Dataset& ds,
                                                      double train_fraction = 0.6,
                                                      std::uint64_t seed = 42);

// ---- time series ------------------------------------------------------------

/// T x C values with one binary label per timestep.
struct LabelledSeries {
  Matrix values;
  std::vector<int> labels;

  std::size_t length() const noexcept { return values.rows(); }
  std::size_t channels() const noexcept { return values.cols(); }
};

std::pair<LabelledSeries, LabelledSeries> chronological_split(const LabelledSeries& series,
                                                              double fraction = 0.5);

struct ChannelStats {
  Vec mean;
  Vec stdev;  // population stdev; zero-variance channels stored as 1
};

ChannelStats channel_stats(const LabelledSeries& series);

enum class WindowLabelRule { AnyAnomalous };
enum class WindowStandardization { TrainStatistics, PerWindow, None };

struct SeriesWindowSpec {
  std::size_t window_length = 100;
  std::size_t stride = 1;
  WindowLabelRule label_rule = WindowLabelRule::AnyAnomalous;
  WindowStandardization standardization = WindowStandardization::TrainStatistics;
};

std::size_t window_count(std::size_t length, std::size_t window_length, std::size_t stride);

/// One row per window, flattened timestep-major (t0c0, t0c1, ..., t1c0, ...).
/// `stats` is used only under TrainStatistics.
Dataset window_series(const LabelledSeries& series, const SeriesWindowSpec& spec,
                      const ChannelStats& stats);

// ---- subsampling and generators ---------------------------------------------

/// Keeps every normal and round(p * n_normal / (1 - p)) anomalies chosen by
/// seeded shuffle; kept samples stay in their original order.
Dataset subsample_anomaly_proportion(const Dataset& train, double p, std::uint64_t seed);

struct ClusterSpec {
  Vec mean;
  double stdev = 1.0;
  std::size_t count = 0;
  int label = 0;
  int class_id = -1;  // -1: use label
};

Dataset gen_gaussian_clusters(std::span<const ClusterSpec> clusters, std::uint64_t seed);

struct Spike {
  std::size_t position = 0;
  double magnitude = 0.0;
};

struct SpikeSeriesSpec {
  std::size_t length = 0;
  std::size_t channels = 1;
  std::vector<Spike> spikes;
  double noise_stdev = 0.1;
};

/// Gaussian noise on every channel plus each spike added to all channels.
LabelledSeries gen_spike_series(const SpikeSeriesSpec& spec, std::uint64_t seed);

}  // namespace cedl
