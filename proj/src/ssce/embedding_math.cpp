#include "ssce/embedding_math.hpp"

#include <cmath>
#include <limits>

#include "ssce/error.hpp"

namespace ssce {

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.array().isFinite().all();
}

ProbVector::ProbVector(Vector probs) : probs_(std::move(probs)) {
  require(probs_.size() > 0, "probability vector must be non-empty");
  require(all_finite(probs_), "probability vector has non-finite entries");
  require((probs_.array() >= 0.0).all(), "probability vector has negative entries");
  require(std::abs(probs_.sum() - 1.0) <= kProbSumTolerance,
          "probability vector does not sum to 1");
}

double ProbVector::max_prob() const { return probs_[argmax()]; }

Eigen::Index ProbVector::argmax() const {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < probs_.size(); ++c) {
    if (probs_[c] > probs_[best]) best = c;
  }
  return best;
}

Vector unit_normalize(const Vector& v) {
  require(all_finite(v), "cannot normalize a vector with non-finite entries");
  const double norm = v.norm();
  require(norm > 0.0, "cannot normalize a zero-norm vector", ErrorCode::Numerical);
  return v / norm;
}

void normalize_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double norm = m.row(r).norm();
    require(std::isfinite(norm) && norm > 0.0,
            "cannot normalize row " + std::to_string(r) + " (zero or non-finite norm)",
            ErrorCode::Numerical);
    m.row(r) /= norm;
  }
}

ProbVector stable_softmax(const Vector& scores, double temperature) {
  require(temperature > 0.0, "softmax temperature must be positive");
  require(scores.size() > 0, "softmax of an empty score vector");
  require(all_finite(scores), "softmax scores must be finite");
  Vector e = ((scores.array() - scores.maxCoeff()) / temperature).exp();
  e /= e.sum();
  return ProbVector(std::move(e), ProbVector::Trusted{});
}

double entropy(const ProbVector& p) {
  double h = 0.0;
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    const double pc = p[c];
    if (pc > 0.0) h -= pc * std::log(pc);
  }
  // Rounding can leave a one-hot distribution at -0 or a tiny negative.
  return h > 0.0 ? h : 0.0;
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  double m = x[0];
  for (double v : x) m = std::max(m, v);
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace ssce
