#include "ssce/gradcheck.hpp"

#include <algorithm>

#include "ssce/encoder.hpp"
#include "ssce/error.hpp"

namespace ssce {

namespace {

bool has_weighted_anchor(const ContrastiveBatch& b) {
  const auto positives = build_positive_index(b.labels);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (positives[i].empty() || b.weights[i] <= 0.0) continue;
    for (auto p : positives[i]) {
      if (b.weights[p] > 0.0) return true;
    }
  }
  return false;
}

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

// Same as grad_check but without the epsilon range restriction.
double fd_embeddings(const ContrastiveBatch& batch, LossVariant variant, double eps) {
  const LossResult analytic = contrastive_loss(batch, variant);
  ContrastiveBatch probe = batch;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < probe.embeddings.rows(); ++r) {
    for (Eigen::Index c = 0; c < probe.embeddings.cols(); ++c) {
      const double saved = probe.embeddings(r, c);
      probe.embeddings(r, c) = saved + eps;
      const double plus = contrastive_loss(probe, variant, NormCheck::Skip).value;
      probe.embeddings(r, c) = saved - eps;
      const double minus = contrastive_loss(probe, variant, NormCheck::Skip).value;
      probe.embeddings(r, c) = saved;
      worst = std::max(worst, gradient_rel_error(analytic.grad(r, c), (plus - minus) / (2 * eps)));
    }
  }
  return worst;
}

}  // namespace

ContrastiveBatch random_batch(Rng& rng, const RandomBatchSpec& spec) {
  require(spec.min_size >= 2 && spec.max_size >= spec.min_size, "random_batch: bad size range");
  require(spec.min_dim >= 1 && spec.max_dim >= spec.min_dim, "random_batch: bad dim range");
  require(spec.max_labels >= 1, "random_batch: need at least one label");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ContrastiveBatch b;
    const int n = uniform_int(rng, spec.min_size, spec.max_size);
    const int d = uniform_int(rng, spec.min_dim, spec.max_dim);
    const int labels = uniform_int(rng, 1, spec.max_labels);
    b.embeddings.resize(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) b.embeddings(r, c) = rng.normal();
    }
    normalize_rows(b.embeddings);
    for (int i = 0; i < n; ++i) {
      b.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(labels))));
      b.weights.push_back(rng.uniform(spec.min_weight, 1.0));
    }
    b.temperature = rng.uniform(spec.min_temperature, spec.max_temperature);
    if (has_weighted_anchor(b)) return b;
  }
  throw Error(ErrorCode::InvalidArgument, "random_batch: could not draw a usable batch");
}

GradCheckReport encoder_grad_check(std::uint64_t seed, double epsilon) {
  Rng rng = Rng::stream(seed, 0xE2E);
  const EncoderConfig cfg{4, {6, 5}, 3};
  MlpEncoder encoder(cfg, rng);
  const int n = 6;
  const int K = 2;
  Matrix inputs(n, cfg.input_dim);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) inputs(r, c) = rng.normal();
  }
  const PrototypeBank bank = random_prototypes(K, cfg.embedding_dim, rng);

  ContrastiveBatch batch;
  batch.temperature = 0.5;
  batch.labels = {0, 1, 0, 1, 2 + 4, 2 + 5, 0, 1};
  batch.weights = {1.0, 1.0, 0.7, 0.35, 0.2, 0.2, 1.0, 1.0};
  const Eigen::Index N = n + K;

  auto loss_at = [&](const MlpEncoder& enc, const Matrix& protos, NormCheck check) {
    ContrastiveBatch b = batch;
    b.embeddings.resize(N, cfg.embedding_dim);
    b.embeddings.topRows(n) = enc.embed(inputs);
    b.embeddings.bottomRows(K) = protos;
    return contrastive_loss(b, LossVariant::SscE, check);
  };

  const EncoderCache cache = encoder.forward(inputs);
  const LossResult base = loss_at(encoder, bank.prototypes, NormCheck::Require);
  const Vector param_grad = encoder.backward(cache, base.grad.topRows(n));
  const Matrix proto_grad = base.grad.bottomRows(K);

  GradCheckReport report;
  auto consider = [&](double analytic, double numeric, Eigen::Index row, Eigen::Index col) {
    const double err = gradient_rel_error(analytic, numeric);
    if (err > report.max_rel_error || report.worst_row < 0) {
      report = {err, row, col, analytic, numeric};
    }
  };

  MlpEncoder probe = encoder;
  for (Eigen::Index k = 0; k < param_grad.size(); ++k) {
    const double saved = probe.parameters()[k];
    probe.mutable_parameters()[k] = saved + epsilon;
    const double plus = loss_at(probe, bank.prototypes, NormCheck::Require).value;
    probe.mutable_parameters()[k] = saved - epsilon;
    const double minus = loss_at(probe, bank.prototypes, NormCheck::Require).value;
    probe.mutable_parameters()[k] = saved;
    consider(param_grad[k], (plus - minus) / (2 * epsilon), -1, k);
  }
  Matrix protos = bank.prototypes;
  for (Eigen::Index r = 0; r < protos.rows(); ++r) {
    for (Eigen::Index c = 0; c < protos.cols(); ++c) {
      const double saved = protos(r, c);
      protos(r, c) = saved + epsilon;
      const double plus = loss_at(encoder, protos, NormCheck::Skip).value;
      protos(r, c) = saved - epsilon;
      const double minus = loss_at(encoder, protos, NormCheck::Skip).value;
      protos(r, c) = saved;
      consider(proto_grad(r, c), (plus - minus) / (2 * epsilon), n + r, c);
    }
  }
  return report;
}

GradCheckSuiteResult run_grad_check_suite(const GradCheckSuiteOptions& options) {
  require(options.epsilon > 0.0, "gradcheck: epsilon must be positive");
  require(options.trials >= 1, "gradcheck: trials must be >= 1");
  GradCheckSuiteResult result;
  Rng rng = Rng::stream(options.seed, 0x6C);
  if (options.check_ssc) result.ssc = 0.0;
  if (options.check_ssc_e) result.ssc_e = 0.0;
  for (int t = 0; t < options.trials; ++t) {
    const ContrastiveBatch batch = random_batch(rng);
    if (result.ssc) result.ssc = std::max(*result.ssc, fd_embeddings(batch, LossVariant::Ssc, options.epsilon));
    if (result.ssc_e) {
      result.ssc_e = std::max(*result.ssc_e, fd_embeddings(batch, LossVariant::SscE, options.epsilon));
    }
  }
  if (options.check_encoder) {
    result.encoder = encoder_grad_check(options.seed, options.epsilon).max_rel_error;
  }
  return result;
}

}  // namespace ssce
