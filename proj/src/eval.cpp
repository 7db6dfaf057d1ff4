#include "cedl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cedl/error.hpp"

namespace cedl {

ScoreBatch score(const EncoderModel& model, const ObjectiveConfig& cfg, const Matrix& batch) {
  const std::size_t dim = model.latent_dim();
  if (cfg.centre.size() != dim) {
    throw Error(ErrorKind::Dimension, "centre length " + std::to_string(cfg.centre.size()) +
                                          " vs latent dimension " + std::to_string(dim));
  }
  ScoreBatch out;
  out.representations = encode(model, batch);
  const double scale = cfg.alpha / std::sqrt(static_cast<double>(dim));
  out.raw.resize(batch.rows());
  out.probability.resize(batch.rows());
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    out.raw[i] = l2_distance(out.representations.row(i), cfg.centre);
    out.probability[i] = stable_sigmoid(scale * out.raw[i]);
  }
  return out;
}

ScoreBatch score(const Detector& detector, const Matrix& batch) {
  if (detector.kind != ObjectiveKind::Bce) return score(detector.encoder, detector.objective, batch);
  ScoreBatch out;
  out.representations = encode(detector.encoder, batch);
  out.raw.resize(batch.rows());
  out.probability.resize(batch.rows());
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    out.raw[i] = dot(detector.head.u, out.representations.row(i)) + detector.head.b;
    out.probability[i] = stable_sigmoid(out.raw[i]);
  }
  return out;
}

namespace {

void check_scored(const ScoredSet& s) {
  if (s.scores.size() != s.labels.size()) {
    throw Error(ErrorKind::Dimension, "scores and labels differ in length");
  }
  for (int y : s.labels) {
    if (y != 0 && y != 1) throw Error(ErrorKind::Label, "label " + std::to_string(y) + " not in {0,1}");
  }
  for (double v : s.scores) {
    if (std::isnan(v)) throw Error(ErrorKind::Input, "NaN score");
  }
}

std::size_t count_positive(const ScoredSet& s) {
  return static_cast<std::size_t>(std::count(s.labels.begin(), s.labels.end(), 1));
}

// Indices sorted by (score desc, index asc).
std::vector<std::size_t> descending_order(const Vec& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double auroc(const ScoredSet& s) {
  check_scored(s);
  const std::size_t pos = count_positive(s);
  const std::size_t neg = s.labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorKind::UndefinedMetric, "AUROC needs both classes");

  // Rank-sum with average ranks over tied blocks.
  std::vector<std::size_t> order(s.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && s.scores[order[j + 1]] == s.scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (s.labels[order[k]] == 1) positive_rank_sum += avg_rank;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(pos);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

double aupr(const ScoredSet& s) {
  check_scored(s);
  const std::size_t pos = count_positive(s);
  if (pos == 0) throw Error(ErrorKind::UndefinedMetric, "AUPR needs at least one positive");
  const auto order = descending_order(s.scores);
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (s.labels[order[rank]] == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return sum / static_cast<double>(pos);
}

F1Result best_f1(const ScoredSet& s) {
  check_scored(s);
  const std::size_t pos = count_positive(s);
  if (pos == 0) throw Error(ErrorKind::UndefinedMetric, "best F1 needs at least one positive");

  std::vector<std::size_t> order(s.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });

  const auto f1_of = [pos](std::size_t tp, std::size_t predicted) {
    return predicted + pos == 0 ? 0.0
                                : 2.0 * static_cast<double>(tp) / static_cast<double>(predicted + pos);
  };

  // Ascending sweep of the threshold: everything above it is predicted
  // anomalous. Start at -inf (all predicted positive).
  std::size_t tp = pos;
  std::size_t predicted = order.size();
  F1Result best{f1_of(tp, predicted), -std::numeric_limits<double>::infinity()};
  std::size_t i = 0;
  while (i < order.size()) {
    const double value = s.scores[order[i]];
    std::size_t j = i;
    while (j < order.size() && s.scores[order[j]] == value) {
      if (s.labels[order[j]] == 1) --tp;
      --predicted;
      ++j;
    }
    const double threshold = j < order.size() ? 0.5 * (value + s.scores[order[j]])
                                              : std::numeric_limits<double>::infinity();
    const double f1 = f1_of(tp, predicted);
    if (f1 > best.f1) best = {f1, threshold};
    i = j;
  }
  return best;
}

MetricReport evaluate(const ScoredSet& s) {
  MetricReport r;
  r.auroc = auroc(s);
  r.aupr = aupr(s);
  const auto f1 = best_f1(s);
  r.best_f1 = f1.f1;
  r.best_threshold = f1.threshold;
  r.positives = count_positive(s);
  r.negatives = s.labels.size() - r.positives;
  return r;
}

MetricReport mean_report(std::span<const MetricReport> reports) {
  if (reports.empty()) throw Error(ErrorKind::UndefinedMetric, "no reports to aggregate");
  MetricReport out;
  for (const auto& r : reports) {
    out.auroc += r.auroc;
    out.aupr += r.aupr;
    out.best_f1 += r.best_f1;
    out.best_threshold += r.best_threshold;
    out.positives += r.positives;
    out.negatives += r.negatives;
  }
  const double n = static_cast<double>(reports.size());
  out.auroc /= n;
  out.aupr /= n;
  out.best_f1 /= n;
  out.best_threshold /= n;
  return out;
}

}  // namespace cedl
