#pragma once

#include <cstdint>
#include <vector>

#include "ssce/embedding_math.hpp"
#include "ssce/pseudo_label.hpp"
#include "ssce/rng.hpp"

namespace ssce {

struct EncoderConfig {
  int input_dim = 8;
  std::vector<int> hidden = {64, 64};
  int embedding_dim = 16;

  bool operator==(const EncoderConfig&) const = default;
};

// Momentum buffer plus hyperparameters for one parameter group.
struct OptimizerState {
  Vector velocity;
  double momentum = 0.9;
  double learning_rate = 0.03;

  bool operator==(const OptimizerState&) const = default;
};

// v <- m * v + g;  p <- p - lr * v
void sgd_momentum_step(Eigen::Ref<Vector> params, const Vector& grads, OptimizerState& state);

// Intermediates kept by forward() for backward().
struct EncoderCache {
  std::vector<Matrix> layer_inputs;  // input to each affine layer
  Matrix output;                      // pre-normalization output
  Vector output_norms;
  Matrix embeddings;
  std::uint64_t generation = 0;
};

// Multilayer perceptron with tanh between affine layers (none after the last)
// followed by L2 normalization of each output row.
//
// All parameters live in one flat vector; layer l stores its weight matrix
// (out x in, row-major) followed by its bias.
class MlpEncoder {
 public:
  MlpEncoder() = default;
  MlpEncoder(EncoderConfig config, Rng& rng);
  MlpEncoder(EncoderConfig config, Vector parameters);

  const EncoderConfig& config() const { return config_; }
  const Vector& parameters() const { return params_; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }
  static std::size_t parameter_count(const EncoderConfig& config);

  // Any mutation invalidates caches from earlier forward passes.
  Eigen::Ref<Vector> mutable_parameters();
  void set_parameters(const Vector& params);

  // inputs: n x input_dim. Returns the cache; the unit embeddings are in
  // `cache.embeddings`.
  EncoderCache forward(const Matrix& inputs) const;

  // Embeddings only.
  Matrix embed(const Matrix& inputs) const { return forward(inputs).embeddings; }

  // Gradient of the loss w.r.t. all parameters given dL/dz for every row.
  Vector backward(const EncoderCache& cache, const Matrix& grad_embeddings) const;

  void sgd_step(const Vector& grads, OptimizerState& state);

  Eigen::Index layer_count() const { return static_cast<Eigen::Index>(layers_.size()); }

 private:
  struct LayerSlice {
    Eigen::Index in = 0;
    Eigen::Index out = 0;
    Eigen::Index weight_offset = 0;
    Eigen::Index bias_offset = 0;
  };

  void build_layout();
  void touch();
  Eigen::Map<const Matrix> weight(std::size_t l) const;
  Eigen::Map<const Vector> bias(std::size_t l) const;

  EncoderConfig config_;
  std::vector<LayerSlice> layers_;
  Vector params_;
  std::uint64_t generation_ = 0;
};

// Backprop through z = o / |o| for one row: (I - z z^T) dz / |o|.
Vector normalization_backward(const Vector& z, double norm, const Vector& grad_z);

// Seeded isotropic unit directions, one per class.
PrototypeBank random_prototypes(int num_classes, int dim, Rng& rng);

// Momentum-SGD on the prototype rows followed by re-normalization.
void update_prototypes(PrototypeBank& bank, const Matrix& grads, OptimizerState& state);

}  // namespace ssce
