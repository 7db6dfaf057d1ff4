#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cedl/data.hpp"
#include "cedl/detector.hpp"
#include "cedl/optimizer.hpp"

namespace cedl {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
  std::uint64_t seed = 42;
  ObjectiveKind objective = ObjectiveKind::Cedl;
  ObjectiveConfig objective_config;
  bool shuffle = true;
  double sad_eps = kSadEps;
  AdamConstants adam;
  /// Keep every epoch's batch schedule in the report.
  bool record_schedule = false;
};

using BatchSchedule = std::vector<std::vector<std::size_t>>;

struct TrainReport {
  /// Per-sample mean loss of each epoch (sum of per-sample losses / N).
  std::vector<double> epoch_losses;
  double best_loss = 0.0;
  std::size_t best_epoch = 0;  // 1-based
  std::size_t optimizer_steps = 0;
  Detector best;
  std::vector<BatchSchedule> schedules;
};

/// Indices 0..n-1, shuffled by a SeededRng(seed) when `shuffle`, cut into
/// chunks of batch_size; the last chunk may be short.
BatchSchedule batch_iterator(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                             bool shuffle);

/// Seed of epoch `epoch` (0-based) shuffle: the Shuffle stream offset of the
/// master seed plus the epoch index.
std::uint64_t epoch_shuffle_seed(std::uint64_t master_seed, std::size_t epoch) noexcept;

/// Mini-batch training with Adam, keeping the parameters of the epoch with
/// the lowest average training loss.
TrainReport train(const Dataset& ds, EncoderModel model, const TrainConfig& cfg);

}  // namespace cedl
