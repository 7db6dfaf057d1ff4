#pragma once

// Independent reference implementations used only by tests. None of these
// call into the library code paths they are compared against.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cedl/encoder.hpp"

namespace oracle {

inline double naive_distance(const std::vector<double>& a, const std::vector<double>& b) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (long double)(a[i] - b[i]) * (a[i] - b[i]);
  return static_cast<double>(std::sqrt(sum));
}

inline double apply(cedl::Activation act, double z) {
  switch (act) {
    case cedl::Activation::Relu: return std::max(z, 0.0);
    case cedl::Activation::LeakyRelu: return z >= 0.0 ? z : 0.01 * z;
    case cedl::Activation::Tanh: return std::tanh(z);
    case cedl::Activation::Identity: return z;
  }
  return z;
}

/// Layer-by-layer evaluation of one sample through the accessor API.
inline std::vector<double> reference_forward(const cedl::EncoderModel& model,
                                             std::vector<double> x) {
  for (std::size_t k = 0; k < model.layer_count(); ++k) {
    const auto& s = model.specs()[k];
    std::vector<double> y(s.out_dim);
    for (std::size_t o = 0; o < s.out_dim; ++o) {
      double z = model.bias(k, o);
      for (std::size_t i = 0; i < s.in_dim; ++i) z += model.weight(k, o, i) * x[i];
      y[o] = apply(s.activation, z);
    }
    x = std::move(y);
  }
  return x;
}

/// Pairwise Mann-Whitney statistic.
inline double brute_auroc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Average precision with ranks defined by (score desc, index asc), counted
/// directly per positive.
inline double brute_average_precision(const std::vector<double>& s, const std::vector<int>& y) {
  double total = 0.0;
  int positives = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    ++positives;
    int rank = 1;
    int positives_at_or_above = 1;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j == i) continue;
      const bool above = s[j] > s[i] || (s[j] == s[i] && j < i);
      if (above) {
        ++rank;
        if (y[j] == 1) ++positives_at_or_above;
      }
    }
    total += static_cast<double>(positives_at_or_above) / rank;
  }
  return total / positives;
}

inline double f1_at(const std::vector<double>& s, const std::vector<int>& y, double threshold) {
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool predicted = s[i] > threshold;
    if (predicted && y[i] == 1) ++tp;
    else if (predicted) ++fp;
    else if (y[i] == 1) ++fn;
  }
  return tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
}

struct ScanResult {
  double f1;
  double threshold;
};

/// Tries -inf, every midpoint between distinct sorted scores, and +inf.
inline ScanResult exhaustive_f1(const std::vector<double>& s, const std::vector<int>& y) {
  std::vector<double> distinct = s;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> candidates{-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    candidates.push_back(0.5 * (distinct[i] + distinct[i + 1]));
  }
  candidates.push_back(std::numeric_limits<double>::infinity());
  ScanResult best{-1.0, 0.0};
  for (double t : candidates) {
    const double f = f1_at(s, y, t);
    if (f > best.f1) best = {f, t};
  }
  return best;
}

struct SparseRow {
  int label;
  std::vector<std::pair<int, double>> entries;
};

/// Minimal sscanf-based SVMLight reader; densifies to the max index.
inline std::vector<std::vector<double>> naive_svmlight(const std::string& path,
                                                       std::vector<int>& labels) {
  std::ifstream in(path);
  std::vector<SparseRow> rows;
  int width = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream is(line);
    std::string tok;
    if (!(is >> tok)) continue;
    SparseRow row{std::stoi(tok) > 0 ? 1 : 0, {}};
    while (is >> tok) {
      int idx = 0;
      double val = 0.0;
      std::sscanf(tok.c_str(), "%d:%lf", &idx, &val);
      row.entries.emplace_back(idx, val);
      width = std::max(width, idx);
    }
    rows.push_back(row);
  }
  std::vector<std::vector<double>> dense;
  labels.clear();
  for (const auto& r : rows) {
    std::vector<double> d(width, 0.0);
    for (auto [i, v] : r.entries) d[i - 1] = v;
    dense.push_back(d);
    labels.push_back(r.label);
  }
  return dense;
}

}  // namespace oracle
