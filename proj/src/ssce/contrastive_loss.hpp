#pragma once

#include <cstddef>
#include <vector>

#include "ssce/embedding_math.hpp"

namespace ssce {

enum class LossVariant {
  // Anchor-weighted baseline: -lambda_i / |P(i)| per anchor, normalized by
  // the sum of contributing anchor weights.
  Ssc,
  // Pair-weighted: sqrt(lambda_i * lambda_p) per (anchor, positive) pair,
  // normalized by the sum of per-anchor mean pair weights.
  SscE,
};

// One loss evaluation: N unit embeddings with labels and weights.
struct ContrastiveBatch {
  Matrix embeddings;  // N x d, unit rows
  std::vector<int> labels;
  std::vector<double> weights;
  double temperature = 0.1;
  // Optional per-entry switch; an entry with `false` never acts as an anchor
  // but still appears as a positive and in denominators. Empty means all true.
  std::vector<bool> can_anchor;

  std::size_t size() const { return labels.size(); }
  bool is_anchor_enabled(std::size_t i) const { return can_anchor.empty() || can_anchor[i]; }

  // Shapes, N >= 2, finite non-negative weights, positive temperature, and
  // (when `check_unit_norm`) unit rows within 1e-6.
  void validate(bool check_unit_norm = true) const;
};

// P(i): sorted indices j != i with labels[j] == labels[i].
using PositiveIndex = std::vector<std::vector<std::size_t>>;

PositiveIndex build_positive_index(const std::vector<int>& labels);

struct LossResult {
  double value = 0.0;
  Matrix grad;  // dL/dz, same shape as the embeddings
  std::size_t anchor_count = 0;
};

enum class NormCheck { Require, Skip };

// Value and exact analytic gradient. `NormCheck::Skip` evaluates the same
// expression on rows that are not unit-norm (finite differences need it).
LossResult contrastive_loss(const ContrastiveBatch& batch, LossVariant variant,
                            NormCheck norm_check = NormCheck::Require);

inline LossResult ssc_loss(const ContrastiveBatch& batch) {
  return contrastive_loss(batch, LossVariant::Ssc);
}

inline LossResult ssc_e_loss(const ContrastiveBatch& batch) {
  return contrastive_loss(batch, LossVariant::SscE);
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  Eigen::Index worst_row = -1;
  Eigen::Index worst_col = -1;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

// Relative error used by every gradient check in the library:
// |a - n| / max(|a|, |n|, 1e-8).
double gradient_rel_error(double analytic, double numeric);

// Central differences on every embedding coordinate against the analytic
// gradient.
GradCheckReport grad_check(const ContrastiveBatch& batch, LossVariant variant, double epsilon);

}  // namespace ssce
