#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "cedl/numerics.hpp"

namespace cedl {

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamConstants&, const AdamConstants&) = default;
};

/// Bias-corrected Adam state for one flat parameter block.
struct AdamState {
  double lr = 1e-4;
  AdamConstants constants;
  std::uint64_t t = 0;
  Vec m;
  Vec v;

  AdamState() = default;
  AdamState(std::size_t size, double learning_rate, AdamConstants c = {})
      : lr(learning_rate), constants(c), m(size, 0.0), v(size, 0.0) {}
};

/// One Adam update of `params` in place. Throws Error(Shape) on size
/// mismatch and Error(Gradient) on a non-finite gradient; on error neither
/// params nor state change.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

/// params -= lr * grads.
void sgd_step(std::span<double> params, std::span<const double> grads, double lr);

}  // namespace cedl
