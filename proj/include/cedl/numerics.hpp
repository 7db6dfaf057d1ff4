#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace cedl {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. Rows are samples wherever a matrix
/// carries a batch.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Copies the listed rows, in the listed order.
  Matrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Stable nonlinearities. Both are total on finite input.
double stable_sigmoid(double z) noexcept;
double stable_softplus(double z) noexcept;

/// Euclidean distance; throws Error(Dimension) on a length mismatch.
double l2_distance(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a) noexcept;
double dot(std::span<const double> a, std::span<const double> b);

bool all_finite(std::span<const double> values) noexcept;

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h for every coordinate.
/// Throws Error(Evaluation) if f returns a non-finite value.
Vec finite_difference_gradient(const ScalarFunction& f, std::span<const double> x, double h);

/// Named streams derived from a master seed. The offset is added to the
/// master seed before SplitMix64 expansion, so streams never share state.
enum class RngStream : std::uint64_t {
  Init = 0x1000,
  Shuffle = 0x2000,
  Split = 0x3000,
  Sampling = 0x4000,
  Generator = 0x5000,
  HeadInit = 0x6000,
};

/// xoshiro256** seeded through SplitMix64. Implemented here rather than via
/// <random> engines/distributions so the stream is identical on every
/// toolchain.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) noexcept;
  SeededRng(std::uint64_t master_seed, RngStream stream) noexcept
      : SeededRng(master_seed + static_cast<std::uint64_t>(stream)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Standard normal via Box-Muller; the spare deviate is cached.
  double normal() noexcept;

  template <typename T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cedl
