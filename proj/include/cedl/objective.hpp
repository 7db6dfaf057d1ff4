#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "cedl/numerics.hpp"

namespace cedl {

enum class CentreMode { Fixed, Learnable };

std::string_view to_string(CentreMode mode) noexcept;
CentreMode parse_centre_mode(std::string_view name);

/// Parameters of the radial-logit objective. `centre` must have the encoder's
/// latent dimension; an empty centre is expanded to the origin by
/// `with_origin_centre`.
struct ObjectiveConfig {
  double alpha = 1.0;
  double w0 = 1.0;
  double w1 = 1.0;
  Vec centre;
  CentreMode centre_mode = CentreMode::Fixed;

  /// Class weight w_y for a binary label.
  double weight(int y) const noexcept { return y == 1 ? w1 : w0; }
};

/// Throws Error(Config) for non-positive alpha/weights and Error(Dimension)
/// when the centre length differs from latent_dim.
void validate(const ObjectiveConfig& cfg, std::size_t latent_dim);

ObjectiveConfig with_origin_centre(ObjectiveConfig cfg, std::size_t latent_dim);

/// Throws Error(Label) unless y is 0 or 1.
void check_label(int y);

/// a = alpha / sqrt(D) * ||r - c||.
double radial_logit(std::span<const double> r, const ObjectiveConfig& cfg);

/// w1 y softplus(-a) + w0 (1 - y) softplus(a): the weighted negative
/// log-likelihood of sigma(a) as the anomaly probability.
double cedl_loss(double a, int y, const ObjectiveConfig& cfg);

/// Mean per-sample loss over the rows of `representations`.
double cedl_batch_loss(const Matrix& representations, std::span<const int> labels,
                       const ObjectiveConfig& cfg);

struct PerSampleGrad {
  Vec grad_r;
  Vec grad_c;  // -grad_r for a learnable centre, zeros otherwise
};

/// w_y (sigma(a) - y) alpha/sqrt(D) (r - c)/||r - c||. Zero at r == c.
PerSampleGrad cedl_grad(std::span<const double> r, int y, const ObjectiveConfig& cfg);

/// Batch loss and gradients for a mean-reduced batch: grad_r rows already
/// carry the 1/B factor, grad_c is summed over the batch.
struct BatchLossGrad {
  double loss = 0.0;
  Matrix grad_r;
  Vec grad_c;
};
BatchLossGrad cedl_batch_loss_grad(const Matrix& representations, std::span<const int> labels,
                                   const ObjectiveConfig& cfg);

/// N_normal / N_anomalous, used as w1 with w0 = 1.
double weight_ratio(std::size_t n_normal, std::size_t n_anomalous);

// ---- baseline heads -------------------------------------------------------

/// Linear logit z = <u, r> + b on top of the encoder.
struct LinearHead {
  Vec u;
  double b = 0.0;
};

struct BceHeadResult {
  double loss = 0.0;
  Vec grad_r;
  Vec grad_u;
  double grad_b = 0.0;
};

BceHeadResult bce_head_loss(std::span<const double> r, int y, const LinearHead& head);

struct DistanceLoss {
  double loss = 0.0;
  Vec grad_r;
};

/// ||r - c||^2.
DistanceLoss svdd_loss(std::span<const double> r, std::span<const double> c);

inline constexpr double kSadEps = 1e-6;

/// ||r - c||^2 for normals, 1 / (||r - c||^2 + eps) for anomalies.
DistanceLoss sad_loss(std::span<const double> r, int y, std::span<const double> c,
                      double eps = kSadEps);

}  // namespace cedl
