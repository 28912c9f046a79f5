#pragma once

// Naive reference for both contrastive losses: literal nested loops in long
// double, no log-sum-exp rearrangement. Test code only.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ssce/contrastive_loss.hpp"

namespace ssce::testing {

inline long double oracle_dot(const ContrastiveBatch& b, Eigen::Index i, Eigen::Index j) {
  long double s = 0.0L;
  for (Eigen::Index c = 0; c < b.embeddings.cols(); ++c) {
    s += static_cast<long double>(b.embeddings(i, c)) * static_cast<long double>(b.embeddings(j, c));
  }
  return s;
}

inline double loss_oracle(const ContrastiveBatch& b, LossVariant variant) {
  const auto n = static_cast<Eigen::Index>(b.labels.size());
  const long double t = b.temperature;
  // Overflow guard only: shift every exponent by the largest possible
  // similarity when exp(1/T) would leave the long double range.
  const long double shift = (1.0L / t) > 11000.0L ? 1.0L / t : 0.0L;
  long double numerator = 0.0L;
  long double normalizer = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!b.is_anchor_enabled(static_cast<std::size_t>(i))) continue;
    std::vector<Eigen::Index> positives;
    for (Eigen::Index p = 0; p < n; ++p) {
      if (p != i && b.labels[p] == b.labels[i]) positives.push_back(p);
    }
    if (positives.empty()) continue;
    long double denominator = 0.0L;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) denominator += std::exp(oracle_dot(b, i, j) / t - shift);
    }
    const long double lambda_i = b.weights[i];
    long double anchor_sum = 0.0L;
    long double weight_sum = 0.0L;
    for (Eigen::Index p : positives) {
      const long double w = variant == LossVariant::Ssc
                                ? lambda_i
                                : std::sqrt(lambda_i * static_cast<long double>(b.weights[p]));
      anchor_sum += w * std::log(std::exp(oracle_dot(b, i, p) / t - shift) / denominator);
      weight_sum += w;
    }
    const long double count = static_cast<long double>(positives.size());
    numerator += -anchor_sum / count;
    normalizer += variant == LossVariant::Ssc ? lambda_i : weight_sum / count;
  }
  if (!(normalizer > 0.0L)) throw std::invalid_argument("oracle: zero normalizer");
  return static_cast<double>(numerator / normalizer);
}

// |a - b| <= rel * max(|a|, |b|) + 1e-15
inline bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + 1e-15;
}

}  // namespace ssce::testing
