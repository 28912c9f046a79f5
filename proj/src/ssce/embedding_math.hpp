#pragma once

#include <Eigen/Core>
#include <span>

namespace ssce {

using Vector = Eigen::VectorXd;
// Row-major so that each row is one embedding / sample.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Probability distribution over C classes: entries are non-negative and sum
// to one within 1e-9.
class ProbVector {
 public:
  // Validates the invariants; throws InvalidArgument otherwise.
  explicit ProbVector(Vector probs);

  const Vector& values() const noexcept { return probs_; }
  Eigen::Index size() const noexcept { return probs_.size(); }
  double operator[](Eigen::Index c) const { return probs_[c]; }

  // Largest probability and its class; ties resolve to the lowest index.
  double max_prob() const;
  Eigen::Index argmax() const;

 private:
  struct Trusted {};
  ProbVector(Vector probs, Trusted) : probs_(std::move(probs)) {}
  friend ProbVector stable_softmax(const Vector& scores, double temperature);

  Vector probs_;
};

inline constexpr double kProbSumTolerance = 1e-9;

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m);

// Throws on zero norm or non-finite input.
Vector unit_normalize(const Vector& v);

// Normalizes every row of `m` in place; throws if any row has zero norm.
void normalize_rows(Matrix& m);

ProbVector stable_softmax(const Vector& scores, double temperature);

// Entropy in nats with 0 log 0 = 0.
double entropy(const ProbVector& p);

// log(sum(exp(x))) with max subtraction.
double log_sum_exp(std::span<const double> x);

}  // namespace ssce
