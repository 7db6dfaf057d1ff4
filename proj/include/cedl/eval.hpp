#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cedl/detector.hpp"
#include "cedl/numerics.hpp"

namespace cedl {

/// Scores (higher = more anomalous) paired with binary labels.
struct ScoredSet {
  Vec scores;
  std::vector<int> labels;
};

struct MetricReport {
  double auroc = 0.0;
  double aupr = 0.0;
  double best_f1 = 0.0;
  double best_threshold = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct ScoreBatch {
  Matrix representations;
  /// Distance-based detectors: ||r - c||. BCE detector: the head logit.
  Vec raw;
  /// sigma(alpha/sqrt(D) * raw) for distance-based detectors, sigma(logit)
  /// for BCE. Monotone in raw either way.
  Vec probability;
};

/// Distance scoring against cfg.centre.
ScoreBatch score(const EncoderModel& model, const ObjectiveConfig& cfg, const Matrix& batch);
/// Dispatches on the detector kind.
ScoreBatch score(const Detector& detector, const Matrix& batch);

/// Mann-Whitney AUROC with ties counted as 1/2.
double auroc(const ScoredSet& s);

/// Average precision over positives, ranked by (score desc, index asc).
double aupr(const ScoredSet& s);

struct F1Result {
  double f1 = 0.0;
  double threshold = 0.0;
};

/// Maximum F1 of the rule "anomalous iff score > threshold" over the
/// thresholds -inf, midpoints between consecutive distinct scores, and +inf.
/// Ties in F1 resolve to the lowest threshold.
F1Result best_f1(const ScoredSet& s);

MetricReport evaluate(const ScoredSet& s);

/// Unweighted mean of per-entity reports; counts are summed and the
/// threshold is the mean threshold.
MetricReport mean_report(std::span<const MetricReport> reports);

}  // namespace cedl
