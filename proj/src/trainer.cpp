#include "cedl/trainer.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cedl/error.hpp"

namespace cedl {

std::string_view to_string(ObjectiveKind kind) noexcept {
  switch (kind) {
    case ObjectiveKind::Cedl: return "cedl";
    case ObjectiveKind::Bce: return "bce";
    case ObjectiveKind::Svdd: return "svdd";
    case ObjectiveKind::Sad: return "sad";
  }
  return "cedl";
}

ObjectiveKind parse_objective_kind(std::string_view name) {
  if (name == "cedl") return ObjectiveKind::Cedl;
  if (name == "bce") return ObjectiveKind::Bce;
  if (name == "svdd") return ObjectiveKind::Svdd;
  if (name == "sad") return ObjectiveKind::Sad;
  throw Error(ErrorKind::Config, "unknown objective '" + std::string(name) + "'");
}

BatchSchedule batch_iterator(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                             bool shuffle) {
  if (batch_size == 0) throw Error(ErrorKind::Config, "batch size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    SeededRng rng(seed);
    rng.shuffle(order);
  }
  BatchSchedule batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

std::uint64_t epoch_shuffle_seed(std::uint64_t master_seed, std::size_t epoch) noexcept {
  return master_seed + static_cast<std::uint64_t>(RngStream::Shuffle) + epoch;
}

namespace {

// Mean batch loss and its gradients. grad_r rows carry the 1/B factor.
struct BatchGrad {
  double loss = 0.0;
  Matrix grad_r;
  Vec grad_c;     // learnable centre only
  Vec grad_head;  // u then b, BCE only
};

BatchGrad batch_objective(const TrainConfig& cfg, const Detector& det, const Matrix& reps,
                          std::span<const int> labels) {
  const std::size_t batch = reps.rows();
  const std::size_t dim = reps.cols();
  const double inv = 1.0 / static_cast<double>(batch);

  if (cfg.objective == ObjectiveKind::Cedl) {
    auto lg = cedl_batch_loss_grad(reps, labels, det.objective);
    return {lg.loss, std::move(lg.grad_r), std::move(lg.grad_c), {}};
  }

  BatchGrad out{0.0, Matrix(batch, dim), {}, {}};
  if (cfg.objective == ObjectiveKind::Bce) out.grad_head.assign(dim + 1, 0.0);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto r = reps.row(i);
    auto dst = out.grad_r.row(i);
    switch (cfg.objective) {
      case ObjectiveKind::Bce: {
        const auto res = bce_head_loss(r, labels[i], det.head);
        out.loss += res.loss;
        for (std::size_t j = 0; j < dim; ++j) {
          dst[j] = res.grad_r[j] * inv;
          out.grad_head[j] += res.grad_u[j] * inv;
        }
        out.grad_head[dim] += res.grad_b * inv;
        break;
      }
      case ObjectiveKind::Svdd: {
        // One-class objective: anomalies in the batch contribute nothing.
        if (labels[i] != 0) break;
        const auto res = svdd_loss(r, det.objective.centre);
        out.loss += res.loss;
        for (std::size_t j = 0; j < dim; ++j) dst[j] = res.grad_r[j] * inv;
        break;
      }
      case ObjectiveKind::Sad: {
        const auto res = sad_loss(r, labels[i], det.objective.centre, cfg.sad_eps);
        out.loss += res.loss;
        for (std::size_t j = 0; j < dim; ++j) dst[j] = res.grad_r[j] * inv;
        break;
      }
      case ObjectiveKind::Cedl: break;
    }
  }
  out.loss *= inv;
  return out;
}

void check_train_inputs(const Dataset& ds, const EncoderModel& model, const TrainConfig& cfg) {
  if (cfg.epochs == 0) throw Error(ErrorKind::Config, "epochs must be >= 1");
  if (cfg.batch_size == 0) throw Error(ErrorKind::Config, "batch size must be >= 1");
  if (!(cfg.learning_rate >= 0.0)) throw Error(ErrorKind::Config, "learning rate must be non-negative");
  validate(ds);
  if (ds.width() != model.input_dim()) {
    throw Error(ErrorKind::Dimension, "dataset width " + std::to_string(ds.width()) +
                                          " but encoder expects " +
                                          std::to_string(model.input_dim()));
  }
  const std::size_t normals = ds.count_label(0);
  const std::size_t anomalies = ds.count_label(1);
  if (needs_both_classes(cfg.objective) && (normals == 0 || anomalies == 0)) {
    throw Error(ErrorKind::DegenerateSplit, std::string(to_string(cfg.objective)) +
                                                " training needs both classes (normals=" +
                                                std::to_string(normals) +
                                                ", anomalies=" + std::to_string(anomalies) + ")");
  }
  if (!needs_both_classes(cfg.objective) && normals == 0) {
    throw Error(ErrorKind::DegenerateSplit, "svdd training needs normal samples");
  }
}

}  // namespace

TrainReport train(const Dataset& ds, EncoderModel model, const TrainConfig& cfg) {
  check_train_inputs(ds, model, cfg);
  const std::size_t dim = model.latent_dim();

  Detector det;
  det.kind = cfg.objective;
  det.objective = with_origin_centre(cfg.objective_config, dim);
  validate(det.objective, dim);
  const bool learn_centre =
      cfg.objective == ObjectiveKind::Cedl && det.objective.centre_mode == CentreMode::Learnable;
  if (cfg.objective == ObjectiveKind::Bce) {
    SeededRng head_rng(cfg.seed, RngStream::HeadInit);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    det.head.u.resize(dim);
    for (auto& w : det.head.u) w = head_rng.uniform(-scale, scale);
    det.head.b = 0.0;
  }

  AdamState encoder_opt(model.parameter_count(), cfg.learning_rate, cfg.adam);
  AdamState centre_opt(dim, cfg.learning_rate, cfg.adam);
  AdamState head_opt(dim + 1, cfg.learning_rate, cfg.adam);
  Vec head_params(dim + 1, 0.0);

  TrainReport report;
  report.best_loss = std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(ds.size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto schedule =
        batch_iterator(ds.size(), cfg.batch_size, epoch_shuffle_seed(cfg.seed, epoch), cfg.shuffle);
    double total = 0.0;
    for (std::size_t b = 0; b < schedule.size(); ++b) {
      const auto& idx = schedule[b];
      const Matrix x = ds.features.select_rows(idx);
      std::vector<int> y(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) y[i] = ds.labels[idx[i]];

      auto [reps, cache] = forward(model, x);
      BatchGrad g = batch_objective(cfg, det, reps, y);
      if (!std::isfinite(g.loss)) {
        throw Error(ErrorKind::Divergence, "non-finite loss at epoch " + std::to_string(epoch + 1) +
                                               ", batch " + std::to_string(b + 1));
      }
      const Vec grads = backward(model, cache, g.grad_r);
      adam_step(encoder_opt, model.mutable_parameters(), grads);
      if (learn_centre) adam_step(centre_opt, det.objective.centre, g.grad_c);
      if (cfg.objective == ObjectiveKind::Bce) {
        std::copy(det.head.u.begin(), det.head.u.end(), head_params.begin());
        head_params[dim] = det.head.b;
        adam_step(head_opt, head_params, g.grad_head);
        std::copy(head_params.begin(), head_params.begin() + static_cast<std::ptrdiff_t>(dim),
                  det.head.u.begin());
        det.head.b = head_params[dim];
      }
      total += g.loss * static_cast<double>(idx.size());
      ++report.optimizer_steps;
    }
    const double avg = total / n;
    report.epoch_losses.push_back(avg);
    if (cfg.record_schedule) report.schedules.push_back(schedule);
    if (avg < report.best_loss) {
      report.best_loss = avg;
      report.best_epoch = epoch + 1;
      det.encoder = model;
      report.best = det;
    }
  }
  return report;
}

}  // namespace cedl
