#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ssce/embedding_math.hpp"

namespace ssce {

// One unit-norm prototype per class. Row r of `prototypes` belongs to class
// `class_ids[r]`; the ids are a permutation of 0..K-1.
struct PrototypeBank {
  Matrix prototypes;
  std::vector<int> class_ids;

  PrototypeBank() = default;
  PrototypeBank(Matrix prototypes, std::vector<int> class_ids);

  // Canonical bank: class_ids = 0..K-1.
  explicit PrototypeBank(Matrix prototypes);

  int num_classes() const { return static_cast<int>(prototypes.rows()); }
  Eigen::Index dim() const { return prototypes.cols(); }

  // Throws if a prototype is off the unit sphere (1e-6) or ids are not a
  // permutation.
  void validate() const;
};

// Threshold parameters for one gating pass over an unlabeled batch.
struct EntropyGate {
  double tau = 0.95;
  double tau_ent = 0.2;
  int num_classes = 0;
  double w_min = 0.2;

  double h_max() const;
  // tau_ent * h_max, exactly.
  double h_base() const;

  // Validated construction.
  static EntropyGate make(double tau, double tau_ent, int num_classes, double w_min);
};

enum class DecisionKind { Confident, EntropySelected, Rejected };

std::string_view to_string(DecisionKind kind);

struct PseudoLabelDecision {
  std::size_t sample_index = 0;
  DecisionKind kind = DecisionKind::Rejected;
  // Class id for Confident / EntropySelected, K + sample_index for Rejected.
  int assigned_label = 0;
  double weight = 0.0;
  double entropy = 0.0;
  double max_prob = 0.0;

  bool has_class_label() const { return kind != DecisionKind::Rejected; }
  bool operator==(const PseudoLabelDecision&) const = default;
};

// softmax(Z_c z_w / t_prime), i.e. a softmax over cosine similarities when
// both sides are unit vectors. Entry c is the probability of class id c.
ProbVector class_probabilities(const Vector& z_w, const PrototypeBank& bank, double t_prime);

struct SampleConfidence {
  double max_prob = 0.0;
  double entropy = 0.0;
};

// Largest entropy among samples with max_prob > tau; empty when there are none.
std::optional<double> compute_e_min(std::span<const SampleConfidence> samples, double tau);

// Linear confidence weight: 1 at h = e_min, w_min at h = h_base.
// Requires e_min < h_base (DegenerateGate otherwise) and e_min <= h <= h_base.
double adaptive_weight(double h, double e_min, double h_base, double w_min);

// Two-pass assignment: threshold rule first, then (when enabled and e_min
// exists) the entropy gate over the remaining samples. Decisions come back in
// input order.
std::vector<PseudoLabelDecision> assign_pseudo_labels(std::span<const ProbVector> probs,
                                                      const EntropyGate& gate,
                                                      double lambda_reject,
                                                      bool entropy_gate_enabled);

}  // namespace ssce
