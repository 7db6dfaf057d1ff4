#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cedl/numerics.hpp"

namespace cedl {

enum class Activation { Relu, LeakyRelu, Tanh, Identity };

inline constexpr double kLeakyReluSlope = 0.01;

std::string_view to_string(Activation act) noexcept;
Activation parse_activation(std::string_view name);

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::Identity;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Builds in -> hidden... -> latent with `hidden_act` on hidden layers and
/// `output_act` on the last one.
std::vector<LayerSpec> mlp_specs(std::size_t input_dim, std::span<const std::size_t> hidden,
                                 std::size_t latent_dim, Activation hidden_act,
                                 Activation output_act);

/// Throws Error(Spec) unless the layers are non-empty, positive and chain.
void validate_specs(std::span<const LayerSpec> specs);

class ForwardCache;

/// Dense MLP. Parameters live in one flat buffer laid out per layer as the
/// row-major weight matrix (out x in) followed by the bias vector; optimizers
/// and checkpoints operate on that buffer directly.
class EncoderModel {
 public:
  EncoderModel() = default;
  /// Zero-initialised parameters.
  explicit EncoderModel(std::vector<LayerSpec> specs);

  const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
  std::size_t input_dim() const noexcept { return specs_.empty() ? 0 : specs_.front().in_dim; }
  std::size_t latent_dim() const noexcept { return specs_.empty() ? 0 : specs_.back().out_dim; }
  std::size_t layer_count() const noexcept { return specs_.size(); }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<const double> parameters() const noexcept { return params_; }
  /// Mutable access bumps the revision, invalidating outstanding caches.
  std::span<double> mutable_parameters() noexcept {
    ++revision_;
    return params_;
  }

  std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_.at(layer) + specs_[layer].in_dim * specs_[layer].out_dim;
  }
  double weight(std::size_t layer, std::size_t out, std::size_t in) const {
    return params_[weight_offset(layer) + out * specs_[layer].in_dim + in];
  }
  double bias(std::size_t layer, std::size_t out) const {
    return params_[bias_offset(layer) + out];
  }

  std::uint64_t revision() const noexcept { return revision_; }

 private:
  std::vector<LayerSpec> specs_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  std::uint64_t revision_ = 0;
};

/// Pre-activations and activations of one forward pass, tagged with the
/// model instance and revision that produced them.
class ForwardCache {
 public:
  std::size_t batch_size() const noexcept { return input_.rows(); }
  const Matrix& input() const noexcept { return input_; }
  const std::vector<Matrix>& pre_activations() const noexcept { return pre_; }
  const std::vector<Matrix>& activations() const noexcept { return post_; }

 private:
  friend std::pair<Matrix, ForwardCache> forward(const EncoderModel&, const Matrix&);
  friend Vec backward(const EncoderModel&, const ForwardCache&, const Matrix&);

  const EncoderModel* owner_ = nullptr;
  std::uint64_t revision_ = 0;
  Matrix input_;
  std::vector<Matrix> pre_;
  std::vector<Matrix> post_;
};

/// Weights ~ U(-1/sqrt(in_dim), 1/sqrt(in_dim)), biases zero. Draws come
/// from `rng` in layer order, row-major.
EncoderModel init_encoder(std::vector<LayerSpec> specs, SeededRng& rng);

/// batch is B x input_dim. Returns representations (B x latent_dim) and the
/// cache needed by backward.
std::pair<Matrix, ForwardCache> forward(const EncoderModel& model, const Matrix& batch);

/// Forward without keeping the cache.
Matrix encode(const EncoderModel& model, const Matrix& batch);

/// Gradient of sum_b <grad_r[b], r[b]> with respect to every parameter, in
/// the model's flat layout. No batch averaging happens here.
Vec backward(const EncoderModel& model, const ForwardCache& cache, const Matrix& grad_r);

}  // namespace cedl
