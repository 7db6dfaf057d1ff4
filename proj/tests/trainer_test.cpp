#include "cedl/trainer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cedl/error.hpp"
#include "cedl/eval.hpp"

namespace cedl {
namespace {

Vec params(const EncoderModel& m) { return {m.parameters().begin(), m.parameters().end()}; }

Dataset two_clusters(std::size_t normals, std::size_t anomalies, std::uint64_t seed) {
  return gen_gaussian_clusters(
      std::vector<ClusterSpec>{{{0.0, 0.0}, 0.3, normals, 0, 0}, {{4.0, 0.0}, 0.3, anomalies, 1, 1}}, seed);
}

EncoderModel small_model(std::uint64_t seed, std::size_t latent = 2) {
  const std::vector<std::size_t> hidden{8};
  SeededRng rng(seed, RngStream::Init);
  return init_encoder(mlp_specs(2, hidden, latent, Activation::Tanh, Activation::Tanh), rng);
}

TrainConfig quick_config(std::size_t epochs, ObjectiveKind kind = ObjectiveKind::Cedl) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-2;
  cfg.seed = 3;
  cfg.objective = kind;
  return cfg;
}

TEST(BatchIteratorTest, IdentityChunking) {
  const auto b = batch_iterator(5, 2, 0, false);
  EXPECT_EQ(b, (BatchSchedule{{0, 1}, {2, 3}, {4}}));
  EXPECT_EQ(batch_iterator(3, 10, 0, false), (BatchSchedule{{0, 1, 2}}));
  EXPECT_THROW(batch_iterator(3, 0, 0, false), Error);
}

TEST(BatchIteratorTest, ShuffledBatchesPartitionIndices) {
  for (std::size_t n = 1; n < 80; n += 7) {
    for (std::size_t bs = 1; bs <= n + 2; bs += 3) {
      const auto schedule = batch_iterator(n, bs, n * 31 + bs, true);
      std::vector<std::size_t> all;
      for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (i + 1 < schedule.size()) EXPECT_EQ(schedule[i].size(), bs);
        all.insert(all.end(), schedule[i].begin(), schedule[i].end());
      }
      std::sort(all.begin(), all.end());
      std::vector<std::size_t> expected(n);
      std::iota(expected.begin(), expected.end(), std::size_t{0});
      EXPECT_EQ(all, expected);
      EXPECT_EQ(schedule, batch_iterator(n, bs, n * 31 + bs, true));
    }
  }
  EXPECT_NE(batch_iterator(50, 50, 1, true), batch_iterator(50, 50, 2, true));
  EXPECT_EQ(epoch_shuffle_seed(42, 3), epoch_shuffle_seed(42, 0) + 3);
}

TEST(TrainTest, SingleFullBatchIsOneStep) {
  const auto ds = two_clusters(30, 10, 1);
  auto cfg = quick_config(1);
  cfg.batch_size = 40;
  EXPECT_EQ(train(ds, small_model(1), cfg).optimizer_steps, 1u);
  cfg.batch_size = 1000;
  EXPECT_EQ(train(ds, small_model(1), cfg).optimizer_steps, 1u);
  cfg.epochs = 3;
  cfg.batch_size = 16;
  EXPECT_EQ(train(ds, small_model(1), cfg).optimizer_steps, 9u);
}

TEST(TrainTest, BestLossIsPrefixMinimum) {
  const auto ds = two_clusters(60, 20, 2);
  double previous = std::numeric_limits<double>::infinity();
  std::vector<double> longest;
  for (std::size_t epochs : {1, 2, 5, 10, 20}) {
    const auto report = train(ds, small_model(2), quick_config(epochs));
    EXPECT_LE(report.best_loss, previous);
    previous = report.best_loss;
    const auto it = std::min_element(report.epoch_losses.begin(), report.epoch_losses.end());
    EXPECT_EQ(report.best_loss, *it);
    EXPECT_EQ(report.best_epoch, static_cast<std::size_t>(it - report.epoch_losses.begin()) + 1);
    if (!longest.empty()) {
      for (std::size_t e = 0; e < longest.size(); ++e) EXPECT_EQ(report.epoch_losses[e], longest[e]);
    }
    longest = report.epoch_losses;
  }
}

TEST(TrainTest, ZeroLearningRateFreezesParameters) {
  const auto ds = two_clusters(50, 13, 4);
  auto model = small_model(4);
  auto cfg = quick_config(4);
  cfg.learning_rate = 0.0;
  cfg.objective_config.w1 = 3.0;
  const auto report = train(ds, model, cfg);
  EXPECT_EQ(params(report.best.encoder), params(model));
  for (double loss : report.epoch_losses) EXPECT_NEAR(loss, report.epoch_losses.front(), 1e-12);

  const Matrix reps = encode(model, ds.features);
  const auto objective = with_origin_centre(cfg.objective_config, 2);
  double direct = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) direct += cedl_loss(radial_logit(reps.row(i), objective), ds.labels[i], objective);
  EXPECT_NEAR(report.epoch_losses.front(), direct / static_cast<double>(ds.size()), 1e-12);
}

TEST(TrainTest, DeterministicGivenSeed) {
  const auto ds = two_clusters(40, 12, 5);
  const auto a = train(ds, small_model(5), quick_config(5));
  const auto b = train(ds, small_model(5), quick_config(5));
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  EXPECT_EQ(params(a.best.encoder), params(b.best.encoder));
}

TEST(TrainTest, SameScheduleAcrossObjectives) {
  const auto ds = two_clusters(45, 15, 6);
  std::vector<BatchSchedule> reference;
  for (auto kind : {ObjectiveKind::Cedl, ObjectiveKind::Bce, ObjectiveKind::Svdd, ObjectiveKind::Sad}) {
    auto cfg = quick_config(3, kind);
    cfg.record_schedule = true;
    const auto report = train(ds, small_model(6), cfg);
    ASSERT_EQ(report.schedules.size(), 3u);
    if (reference.empty()) reference.assign(report.schedules.begin(), report.schedules.end());
    EXPECT_EQ(std::vector<BatchSchedule>(report.schedules.begin(), report.schedules.end()), reference)
        << to_string(kind);
    EXPECT_EQ(report.best.kind, kind);
  }
}

TEST(TrainTest, TwoClusterSeparation) {
  const auto ds = two_clusters(300, 100, 7);
  auto cfg = quick_config(200);
  cfg.batch_size = 64;
  cfg.learning_rate = 1e-3;
  cfg.objective_config.w1 = 3.0;
  const auto report = train(ds, small_model(7), cfg);
  const auto scores = score(report.best, ds.features);
  double normal = 0.0;
  double anomalous = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) (ds.labels[i] ? anomalous : normal) += scores.raw[i];
  EXPECT_LT(normal / 300.0, anomalous / 100.0);
}

TEST(TrainTest, LearnableCentreMoves) {
  const auto ds = two_clusters(40, 10, 8);
  auto cfg = quick_config(3);
  cfg.objective_config.centre_mode = CentreMode::Learnable;
  const auto report = train(ds, small_model(8), cfg);
  ASSERT_EQ(report.best.objective.centre.size(), 2u);
  EXPECT_NE(report.best.objective.centre, (Vec{0.0, 0.0}));

  cfg.objective_config.centre_mode = CentreMode::Fixed;
  EXPECT_EQ(train(ds, small_model(8), cfg).best.objective.centre, (Vec{0.0, 0.0}));
}

TEST(TrainTest, DegenerateAndShapeErrors) {
  const auto normals_only = two_clusters(20, 0, 9);
  for (auto kind : {ObjectiveKind::Cedl, ObjectiveKind::Bce, ObjectiveKind::Sad}) {
    try {
      train(normals_only, small_model(9), quick_config(1, kind));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::DegenerateSplit);
    }
  }
  EXPECT_NO_THROW(train(normals_only, small_model(9), quick_config(1, ObjectiveKind::Svdd)));

  SeededRng rng(1);
  const auto wide = init_encoder(mlp_specs(3, {}, 2, Activation::Tanh, Activation::Tanh), rng);
  try {
    train(two_clusters(5, 5, 1), wide, quick_config(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Dimension);
  }
}

TEST(TrainTest, DivergenceNamesEpochAndBatch) {
  auto ds = two_clusters(20, 5, 10);
  ds.features(3, 0) = 1e308;
  SeededRng rng(1);
  const auto linear = init_encoder(mlp_specs(2, {}, 2, Activation::Identity, Activation::Identity), rng);
  auto cfg = quick_config(2);
  cfg.shuffle = false;
  cfg.batch_size = 4;
  cfg.objective = ObjectiveKind::Svdd;
  try {
    train(ds, linear, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Divergence);
    EXPECT_NE(std::string(e.what()).find("epoch 1, batch 1"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace cedl
