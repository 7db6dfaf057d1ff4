#include "cedl/objective.hpp"

#include <cmath>
#include <string>

#include "cedl/error.hpp"

namespace cedl {

std::string_view to_string(CentreMode mode) noexcept {
  return mode == CentreMode::Learnable ? "learnable" : "fixed";
}

CentreMode parse_centre_mode(std::string_view name) {
  if (name == "fixed") return CentreMode::Fixed;
  if (name == "learnable") return CentreMode::Learnable;
  throw Error(ErrorKind::Config, "unknown centre mode '" + std::string(name) + "'");
}

void validate(const ObjectiveConfig& cfg, std::size_t latent_dim) {
  if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) {
    throw Error(ErrorKind::Config, "alpha must be positive");
  }
  if (!(cfg.w0 > 0.0) || !(cfg.w1 > 0.0) || !std::isfinite(cfg.w0) || !std::isfinite(cfg.w1)) {
    throw Error(ErrorKind::Config, "class weights must be positive");
  }
  if (cfg.centre.size() != latent_dim) {
    throw Error(ErrorKind::Dimension, "centre has length " + std::to_string(cfg.centre.size()) +
                                          ", latent dimension is " + std::to_string(latent_dim));
  }
}

ObjectiveConfig with_origin_centre(ObjectiveConfig cfg, std::size_t latent_dim) {
  if (cfg.centre.empty()) cfg.centre.assign(latent_dim, 0.0);
  return cfg;
}

void check_label(int y) {
  if (y != 0 && y != 1) throw Error(ErrorKind::Label, "label " + std::to_string(y) + " not in {0,1}");
}

namespace {

double radial_scale(std::size_t dim) { return 1.0 / std::sqrt(static_cast<double>(dim)); }

void check_dim(std::span<const double> r, const ObjectiveConfig& cfg) {
  if (r.size() != cfg.centre.size() || r.empty()) {
    throw Error(ErrorKind::Dimension, "representation length " + std::to_string(r.size()) +
                                          " vs centre length " +
                                          std::to_string(cfg.centre.size()));
  }
}

}  // namespace

double radial_logit(std::span<const double> r, const ObjectiveConfig& cfg) {
  check_dim(r, cfg);
  return cfg.alpha * radial_scale(r.size()) * l2_distance(r, cfg.centre);
}

double cedl_loss(double a, int y, const ObjectiveConfig& cfg) {
  check_label(y);
  return y == 1 ? cfg.w1 * stable_softplus(-a) : cfg.w0 * stable_softplus(a);
}

double cedl_batch_loss(const Matrix& representations, std::span<const int> labels,
                       const ObjectiveConfig& cfg) {
  if (representations.rows() == 0) throw Error(ErrorKind::EmptyBatch, "cedl_batch_loss");
  if (labels.size() != representations.rows()) {
    throw Error(ErrorKind::Dimension, "label count differs from batch size");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < representations.rows(); ++i) {
    total += cedl_loss(radial_logit(representations.row(i), cfg), labels[i], cfg);
  }
  return total / static_cast<double>(representations.rows());
}

PerSampleGrad cedl_grad(std::span<const double> r, int y, const ObjectiveConfig& cfg) {
  check_dim(r, cfg);
  check_label(y);
  PerSampleGrad g{Vec(r.size(), 0.0), Vec(r.size(), 0.0)};
  const double dist = l2_distance(r, cfg.centre);
  if (dist == 0.0) return g;  // minimum-norm subgradient at the centre

  const double scale = cfg.alpha * radial_scale(r.size());
  const double a = scale * dist;
  const double coeff = cfg.weight(y) * (stable_sigmoid(a) - static_cast<double>(y)) * scale / dist;
  for (std::size_t i = 0; i < r.size(); ++i) g.grad_r[i] = coeff * (r[i] - cfg.centre[i]);
  if (cfg.centre_mode == CentreMode::Learnable) {
    for (std::size_t i = 0; i < r.size(); ++i) g.grad_c[i] = -g.grad_r[i];
  }
  return g;
}

BatchLossGrad cedl_batch_loss_grad(const Matrix& representations, std::span<const int> labels,
                                   const ObjectiveConfig& cfg) {
  const std::size_t batch = representations.rows();
  if (batch == 0) throw Error(ErrorKind::EmptyBatch, "cedl_batch_loss_grad");
  if (labels.size() != batch) throw Error(ErrorKind::Dimension, "label count differs from batch size");
  const double inv = 1.0 / static_cast<double>(batch);
  BatchLossGrad out{0.0, Matrix(batch, representations.cols()), Vec(representations.cols(), 0.0)};
  for (std::size_t i = 0; i < batch; ++i) {
    const auto r = representations.row(i);
    out.loss += cedl_loss(radial_logit(r, cfg), labels[i], cfg);
    const auto g = cedl_grad(r, labels[i], cfg);
    auto dst = out.grad_r.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      dst[j] = g.grad_r[j] * inv;
      out.grad_c[j] += g.grad_c[j] * inv;
    }
  }
  out.loss *= inv;
  return out;
}

double weight_ratio(std::size_t n_normal, std::size_t n_anomalous) {
  if (n_normal == 0 || n_anomalous == 0) {
    throw Error(ErrorKind::DegenerateSplit,
                "weight ratio needs both classes (normals=" + std::to_string(n_normal) +
                    ", anomalies=" + std::to_string(n_anomalous) + ")");
  }
  return static_cast<double>(n_normal) / static_cast<double>(n_anomalous);
}

BceHeadResult bce_head_loss(std::span<const double> r, int y, const LinearHead& head) {
  check_label(y);
  if (head.u.size() != r.size()) {
    throw Error(ErrorKind::Dimension, "head weight length " + std::to_string(head.u.size()) +
                                          " vs representation length " +
                                          std::to_string(r.size()));
  }
  const double z = dot(head.u, r) + head.b;
  BceHeadResult out;
  out.loss = y == 1 ? stable_softplus(-z) : stable_softplus(z);
  const double dz = stable_sigmoid(z) - static_cast<double>(y);
  out.grad_r.resize(r.size());
  out.grad_u.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    out.grad_r[i] = dz * head.u[i];
    out.grad_u[i] = dz * r[i];
  }
  out.grad_b = dz;
  return out;
}

DistanceLoss svdd_loss(std::span<const double> r, std::span<const double> c) {
  if (r.size() != c.size()) throw Error(ErrorKind::Dimension, "svdd_loss length mismatch");
  DistanceLoss out{0.0, Vec(r.size())};
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = r[i] - c[i];
    out.loss += d * d;
    out.grad_r[i] = 2.0 * d;
  }
  return out;
}

DistanceLoss sad_loss(std::span<const double> r, int y, std::span<const double> c, double eps) {
  check_label(y);
  DistanceLoss sq = svdd_loss(r, c);
  if (y == 0) return sq;
  const double denom = sq.loss + eps;
  const double factor = -1.0 / (denom * denom);
  DistanceLoss out{1.0 / denom, Vec(r.size())};
  for (std::size_t i = 0; i < r.size(); ++i) out.grad_r[i] = factor * sq.grad_r[i];
  return out;
}

}  // namespace cedl
