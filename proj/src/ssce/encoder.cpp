#include "ssce/encoder.hpp"

#include <atomic>
#include <cmath>

#include "ssce/error.hpp"

namespace ssce {

namespace {

std::uint64_t next_generation() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

}  // namespace

void sgd_momentum_step(Eigen::Ref<Vector> params, const Vector& grads, OptimizerState& state) {
  require(params.size() == grads.size(), "sgd step: parameter/gradient size mismatch");
  if (state.velocity.size() != params.size()) {
    require(state.velocity.size() == 0, "sgd step: velocity shape mismatch");
    state.velocity = Vector::Zero(params.size());
  }
  state.velocity = state.momentum * state.velocity + grads;
  params -= state.learning_rate * state.velocity;
}

std::size_t MlpEncoder::parameter_count(const EncoderConfig& config) {
  std::size_t count = 0;
  int in = config.input_dim;
  std::vector<int> widths = config.hidden;
  widths.push_back(config.embedding_dim);
  for (int out : widths) {
    count += static_cast<std::size_t>(out) * static_cast<std::size_t>(in + 1);
    in = out;
  }
  return count;
}

void MlpEncoder::build_layout() {
  require(config_.input_dim >= 1, "encoder: input_dim must be >= 1");
  require(config_.embedding_dim >= 1, "encoder: embedding_dim must be >= 1");
  for (int h : config_.hidden) require(h >= 1, "encoder: hidden widths must be >= 1");
  layers_.clear();
  Eigen::Index in = config_.input_dim;
  Eigen::Index offset = 0;
  std::vector<int> widths = config_.hidden;
  widths.push_back(config_.embedding_dim);
  for (int w : widths) {
    LayerSlice s;
    s.in = in;
    s.out = w;
    s.weight_offset = offset;
    s.bias_offset = offset + s.in * s.out;
    offset = s.bias_offset + s.out;
    layers_.push_back(s);
    in = w;
  }
}

MlpEncoder::MlpEncoder(EncoderConfig config, Rng& rng) : config_(std::move(config)) {
  build_layout();
  params_.resize(static_cast<Eigen::Index>(parameter_count(config_)));
  for (const auto& s : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
    for (Eigen::Index k = 0; k < s.in * s.out; ++k) {
      params_[s.weight_offset + k] = rng.uniform(-bound, bound);
    }
    for (Eigen::Index k = 0; k < s.out; ++k) params_[s.bias_offset + k] = rng.uniform(-bound, bound);
  }
  touch();
}

MlpEncoder::MlpEncoder(EncoderConfig config, Vector parameters) : config_(std::move(config)) {
  build_layout();
  require(static_cast<std::size_t>(parameters.size()) == parameter_count(config_),
          "encoder: parameter vector has wrong length");
  require(all_finite(parameters), "encoder: non-finite parameter");
  params_ = std::move(parameters);
  touch();
}

void MlpEncoder::touch() { generation_ = next_generation(); }

Eigen::Ref<Vector> MlpEncoder::mutable_parameters() {
  touch();
  return params_;
}

void MlpEncoder::set_parameters(const Vector& params) {
  require(params.size() == params_.size(), "encoder: parameter vector has wrong length");
  params_ = params;
  touch();
}

Eigen::Map<const Matrix> MlpEncoder::weight(std::size_t l) const {
  const auto& s = layers_[l];
  return {params_.data() + s.weight_offset, s.out, s.in};
}

Eigen::Map<const Vector> MlpEncoder::bias(std::size_t l) const {
  const auto& s = layers_[l];
  return {params_.data() + s.bias_offset, s.out};
}

EncoderCache MlpEncoder::forward(const Matrix& inputs) const {
  require(inputs.cols() == config_.input_dim,
          "encoder: input dimension " + std::to_string(inputs.cols()) + " does not match " +
              std::to_string(config_.input_dim));
  EncoderCache cache;
  cache.generation = generation_;
  Matrix h = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    cache.layer_inputs.push_back(h);
    Matrix a = h * weight(l).transpose();
    a.rowwise() += bias(l).transpose();
    if (l + 1 < layers_.size()) {
      h = a.array().tanh().matrix();
    } else {
      h = std::move(a);
    }
  }
  cache.output = h;
  cache.output_norms = h.rowwise().norm();
  cache.embeddings = h;
  normalize_rows(cache.embeddings);
  return cache;
}

Vector normalization_backward(const Vector& z, double norm, const Vector& grad_z) {
  return (grad_z - z * z.dot(grad_z)) / norm;
}

Vector MlpEncoder::backward(const EncoderCache& cache, const Matrix& grad_embeddings) const {
  require(cache.generation == generation_ && cache.layer_inputs.size() == layers_.size(),
          "encoder backward: cache does not belong to the current parameters",
          ErrorCode::StaleCache);
  require(grad_embeddings.rows() == cache.embeddings.rows() &&
              grad_embeddings.cols() == cache.embeddings.cols(),
          "encoder backward: gradient shape mismatch");

  Matrix delta(grad_embeddings.rows(), grad_embeddings.cols());
  for (Eigen::Index r = 0; r < delta.rows(); ++r) {
    delta.row(r) = normalization_backward(cache.embeddings.row(r).transpose(),
                                          cache.output_norms[r],
                                          grad_embeddings.row(r).transpose())
                       .transpose();
  }

  Vector grads = Vector::Zero(params_.size());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& s = layers_[l];
    const Matrix& h_in = cache.layer_inputs[l];
    Eigen::Map<Matrix> gw(grads.data() + s.weight_offset, s.out, s.in);
    gw = delta.transpose() * h_in;
    grads.segment(s.bias_offset, s.out) = delta.colwise().sum().transpose();
    if (l == 0) break;
    // h_in = tanh(a) for every layer after the first.
    Matrix back = delta * weight(l);
    delta = back.array() * (1.0 - h_in.array().square());
  }
  return grads;
}

void MlpEncoder::sgd_step(const Vector& grads, OptimizerState& state) {
  sgd_momentum_step(params_, grads, state);
  require(all_finite(params_), "encoder: non-finite parameter after update", ErrorCode::Numerical);
  touch();
}

PrototypeBank random_prototypes(int num_classes, int dim, Rng& rng) {
  require(num_classes >= 1 && dim >= 1, "random_prototypes: sizes must be positive");
  Matrix p(num_classes, dim);
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) = rng.normal();
  }
  normalize_rows(p);
  return PrototypeBank(std::move(p));
}

void update_prototypes(PrototypeBank& bank, const Matrix& grads, OptimizerState& state) {
  require(grads.rows() == bank.prototypes.rows() && grads.cols() == bank.prototypes.cols(),
          "update_prototypes: gradient shape mismatch");
  Eigen::Map<Vector> flat(bank.prototypes.data(), bank.prototypes.size());
  const Eigen::Map<const Vector> g(grads.data(), grads.size());
  sgd_momentum_step(flat, Vector(g), state);
  normalize_rows(bank.prototypes);
}

}  // namespace ssce
