#include "cedl/encoder.hpp"

#include <cmath>
#include <string>

#include "cedl/error.hpp"

namespace cedl {

std::string_view to_string(Activation act) noexcept {
  switch (act) {
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "leaky_relu") return Activation::LeakyRelu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity" || name == "linear") return Activation::Identity;
  throw Error(ErrorKind::Spec, "unknown activation '" + std::string(name) + "'");
}

std::vector<LayerSpec> mlp_specs(std::size_t input_dim, std::span<const std::size_t> hidden,
                                 std::size_t latent_dim, Activation hidden_act,
                                 Activation output_act) {
  std::vector<LayerSpec> specs;
  std::size_t prev = input_dim;
  for (std::size_t width : hidden) {
    specs.push_back({prev, width, hidden_act});
    prev = width;
  }
  specs.push_back({prev, latent_dim, output_act});
  return specs;
}

void validate_specs(std::span<const LayerSpec> specs) {
  if (specs.empty()) throw Error(ErrorKind::Spec, "encoder needs at least one layer");
  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (specs[k].in_dim == 0 || specs[k].out_dim == 0) {
      throw Error(ErrorKind::Spec, "layer " + std::to_string(k) + " has a zero dimension");
    }
    if (k > 0 && specs[k - 1].out_dim != specs[k].in_dim) {
      throw Error(ErrorKind::Spec, "layer " + std::to_string(k - 1) + " outputs " +
                                       std::to_string(specs[k - 1].out_dim) + " but layer " +
                                       std::to_string(k) + " expects " +
                                       std::to_string(specs[k].in_dim));
    }
  }
}

EncoderModel::EncoderModel(std::vector<LayerSpec> specs) : specs_(std::move(specs)) {
  validate_specs(specs_);
  std::size_t total = 0;
  for (const auto& s : specs_) {
    offsets_.push_back(total);
    total += s.out_dim * s.in_dim + s.out_dim;
  }
  params_.assign(total, 0.0);
}

EncoderModel init_encoder(std::vector<LayerSpec> specs, SeededRng& rng) {
  EncoderModel model(std::move(specs));
  auto params = model.mutable_parameters();
  for (std::size_t k = 0; k < model.layer_count(); ++k) {
    const auto& s = model.specs()[k];
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.in_dim));
    const std::size_t base = model.weight_offset(k);
    for (std::size_t i = 0; i < s.out_dim * s.in_dim; ++i) {
      params[base + i] = rng.uniform(-scale, scale);
    }
  }
  return model;
}

namespace {

double activate(Activation act, double z) noexcept {
  switch (act) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::LeakyRelu: return z > 0.0 ? z : kLeakyReluSlope * z;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Identity: return z;
  }
  return z;
}

// Derivative expressed through the pre-activation z and output y = act(z).
double activation_slope(Activation act, double z, double y) noexcept {
  switch (act) {
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::LeakyRelu: return z > 0.0 ? 1.0 : kLeakyReluSlope;
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

void check_batch(const EncoderModel& model, const Matrix& batch) {
  if (model.layer_count() == 0) throw Error(ErrorKind::Spec, "encoder has no layers");
  if (batch.cols() != model.input_dim()) {
    throw Error(ErrorKind::Dimension, "batch width " + std::to_string(batch.cols()) +
                                          " but encoder expects " +
                                          std::to_string(model.input_dim()));
  }
  if (!all_finite(batch.data())) throw Error(ErrorKind::Input, "batch contains non-finite values");
}

// out = act(in * W^T + b), keeping the pre-activation when `pre` is given.
void dense_layer(const EncoderModel& model, std::size_t k, const Matrix& in, Matrix& out,
                 Matrix* pre) {
  const auto& s = model.specs()[k];
  const auto params = model.parameters();
  const double* w = params.data() + model.weight_offset(k);
  const double* b = params.data() + model.bias_offset(k);
  out = Matrix(in.rows(), s.out_dim);
  if (pre) *pre = Matrix(in.rows(), s.out_dim);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const auto x = in.row(r);
    for (std::size_t o = 0; o < s.out_dim; ++o) {
      const double* wrow = w + o * s.in_dim;
      double z = b[o];
      for (std::size_t i = 0; i < s.in_dim; ++i) z += wrow[i] * x[i];
      if (pre) (*pre)(r, o) = z;
      out(r, o) = activate(s.activation, z);
    }
  }
}

}  // namespace

std::pair<Matrix, ForwardCache> forward(const EncoderModel& model, const Matrix& batch) {
  check_batch(model, batch);
  ForwardCache cache;
  cache.owner_ = &model;
  cache.revision_ = model.revision();
  cache.input_ = batch;
  cache.pre_.resize(model.layer_count());
  cache.post_.resize(model.layer_count());
  for (std::size_t k = 0; k < model.layer_count(); ++k) {
    const Matrix& in = k == 0 ? cache.input_ : cache.post_[k - 1];
    dense_layer(model, k, in, cache.post_[k], &cache.pre_[k]);
  }
  Matrix representations = cache.post_.back();
  return {std::move(representations), std::move(cache)};
}

Matrix encode(const EncoderModel& model, const Matrix& batch) {
  check_batch(model, batch);
  Matrix current = batch;
  Matrix next;
  for (std::size_t k = 0; k < model.layer_count(); ++k) {
    dense_layer(model, k, current, next, nullptr);
    std::swap(current, next);
  }
  return current;
}

Vec backward(const EncoderModel& model, const ForwardCache& cache, const Matrix& grad_r) {
  if (cache.owner_ != &model || cache.revision_ != model.revision() ||
      cache.pre_.size() != model.layer_count()) {
    throw Error(ErrorKind::Cache, "forward cache was not produced by this model state");
  }
  if (grad_r.rows() != cache.batch_size() || grad_r.cols() != model.latent_dim()) {
    throw Error(ErrorKind::Dimension, "grad_r is " + std::to_string(grad_r.rows()) + "x" +
                                          std::to_string(grad_r.cols()) + ", expected " +
                                          std::to_string(cache.batch_size()) + "x" +
                                          std::to_string(model.latent_dim()));
  }

  Vec grads(model.parameter_count(), 0.0);
  const auto params = model.parameters();
  const std::size_t batch = cache.batch_size();
  Matrix upstream = grad_r;  // dL/d(output of layer k)

  for (std::size_t k = model.layer_count(); k-- > 0;) {
    const auto& s = model.specs()[k];
    const Matrix& pre = cache.pre_[k];
    const Matrix& post = cache.post_[k];
    const Matrix& in = k == 0 ? cache.input_ : cache.post_[k - 1];

    Matrix delta(batch, s.out_dim);  // dL/dz
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t o = 0; o < s.out_dim; ++o) {
        delta(r, o) = upstream(r, o) * activation_slope(s.activation, pre(r, o), post(r, o));
      }
    }

    double* gw = grads.data() + model.weight_offset(k);
    double* gb = grads.data() + model.bias_offset(k);
    for (std::size_t r = 0; r < batch; ++r) {
      const auto x = in.row(r);
      for (std::size_t o = 0; o < s.out_dim; ++o) {
        const double d = delta(r, o);
        gb[o] += d;
        double* grow = gw + o * s.in_dim;
        for (std::size_t i = 0; i < s.in_dim; ++i) grow[i] += d * x[i];
      }
    }

    if (k > 0) {
      const double* w = params.data() + model.weight_offset(k);
      Matrix next(batch, s.in_dim);
      for (std::size_t r = 0; r < batch; ++r) {
        auto dst = next.row(r);
        for (std::size_t o = 0; o < s.out_dim; ++o) {
          const double d = delta(r, o);
          if (d == 0.0) continue;
          const double* wrow = w + o * s.in_dim;
          for (std::size_t i = 0; i < s.in_dim; ++i) dst[i] += d * wrow[i];
        }
      }
      upstream = std::move(next);
    }
  }
  return grads;
}

}  // namespace cedl
