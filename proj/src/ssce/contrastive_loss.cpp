#include "ssce/contrastive_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ssce/error.hpp"

namespace ssce {

void ContrastiveBatch::validate(bool check_unit_norm) const {
  const auto n = labels.size();
  require(n >= 2, "contrastive batch needs at least two entries");
  require(static_cast<std::size_t>(embeddings.rows()) == n,
          "contrastive batch: one embedding per label required");
  require(weights.size() == n, "contrastive batch: one weight per label required");
  require(can_anchor.empty() || can_anchor.size() == n,
          "contrastive batch: anchor mask size mismatch");
  require(temperature > 0.0 && std::isfinite(temperature),
          "contrastive batch: temperature must be positive");
  require(all_finite(embeddings), "contrastive batch: non-finite embedding");
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, "contrastive batch: weights must be finite and >= 0");
  }
  if (check_unit_norm) {
    for (Eigen::Index r = 0; r < embeddings.rows(); ++r) {
      require(std::abs(embeddings.row(r).norm() - 1.0) <= 1e-6,
              "contrastive batch: embedding " + std::to_string(r) + " is not unit-norm");
    }
  }
}

PositiveIndex build_positive_index(const std::vector<int>& labels) {
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
  PositiveIndex index(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j : by_label[labels[i]]) {
      if (j != i) index[i].push_back(j);
    }
  }
  return index;
}

LossResult contrastive_loss(const ContrastiveBatch& batch, LossVariant variant,
                            NormCheck norm_check) {
  batch.validate(norm_check == NormCheck::Require);
  const auto n = static_cast<Eigen::Index>(batch.size());
  const Matrix& z = batch.embeddings;
  const double inv_t = 1.0 / batch.temperature;
  const PositiveIndex positives = build_positive_index(batch.labels);
  const auto& lambda = batch.weights;

  // Mean pair weight per contributing anchor; the normalizer is their sum.
  std::vector<double> anchor_weight(static_cast<std::size_t>(n), 0.0);
  std::vector<bool> contributes(static_cast<std::size_t>(n), false);
  double normalizer = 0.0;
  LossResult result;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (positives[i].empty() || !batch.is_anchor_enabled(i)) continue;
    contributes[i] = true;
    ++result.anchor_count;
    if (variant == LossVariant::Ssc) {
      anchor_weight[i] = lambda[i];
    } else {
      double sum = 0.0;
      for (std::size_t p : positives[i]) sum += std::sqrt(lambda[i] * lambda[p]);
      anchor_weight[i] = sum / static_cast<double>(positives[i].size());
    }
    normalizer += anchor_weight[i];
  }
  if (!(normalizer > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "contrastive loss: weight normalizer is zero (no weighted anchor has a positive)");
  }

  const Matrix sim = (z * z.transpose()) * inv_t;
  // coeff(i, j) = dL/d sim(i, j) before the 1/T factor.
  Matrix coeff = Matrix::Zero(n, n);
  std::vector<double> shifted(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (!contributes[ui]) continue;
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) m = std::max(m, sim(i, j));
    }
    double denom = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      shifted[static_cast<std::size_t>(j)] = j == i ? 0.0 : std::exp(sim(i, j) - m);
      denom += shifted[static_cast<std::size_t>(j)];
    }
    const double lse = m + std::log(denom);
    const double inv_p = 1.0 / static_cast<double>(positives[ui].size());

    double pair_sum = 0.0;
    for (std::size_t p : positives[ui]) {
      const double w = variant == LossVariant::Ssc ? lambda[ui] : std::sqrt(lambda[ui] * lambda[p]);
      pair_sum += w * (sim(i, static_cast<Eigen::Index>(p)) - lse);
      coeff(i, static_cast<Eigen::Index>(p)) -= w * inv_p;
    }
    total += -inv_p * pair_sum;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) coeff(i, j) += anchor_weight[ui] * shifted[static_cast<std::size_t>(j)] / denom;
    }
  }

  result.value = total / normalizer;
  coeff *= inv_t / normalizer;
  // sim(i, j) = z_i . z_j / T touches both rows.
  result.grad = coeff * z + coeff.transpose() * z;
  return result;
}

double gradient_rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const ContrastiveBatch& batch, LossVariant variant, double epsilon) {
  require(epsilon >= 1e-7 && epsilon <= 1e-3, "grad_check: epsilon must lie in [1e-7, 1e-3]");
  const LossResult analytic = contrastive_loss(batch, variant);
  ContrastiveBatch probe = batch;
  GradCheckReport report;
  for (Eigen::Index r = 0; r < probe.embeddings.rows(); ++r) {
    for (Eigen::Index c = 0; c < probe.embeddings.cols(); ++c) {
      const double saved = probe.embeddings(r, c);
      probe.embeddings(r, c) = saved + epsilon;
      const double plus = contrastive_loss(probe, variant, NormCheck::Skip).value;
      probe.embeddings(r, c) = saved - epsilon;
      const double minus = contrastive_loss(probe, variant, NormCheck::Skip).value;
      probe.embeddings(r, c) = saved;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double err = gradient_rel_error(analytic.grad(r, c), numeric);
      if (err > report.max_rel_error || report.worst_row < 0) {
        report.max_rel_error = err;
        report.worst_row = r;
        report.worst_col = c;
        report.analytic_at_worst = analytic.grad(r, c);
        report.numeric_at_worst = numeric;
      }
    }
  }
  return report;
}

}  // namespace ssce
