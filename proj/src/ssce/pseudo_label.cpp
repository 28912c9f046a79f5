#include "ssce/pseudo_label.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssce/error.hpp"

namespace ssce {

PrototypeBank::PrototypeBank(Matrix prototypes_in, std::vector<int> ids)
    : prototypes(std::move(prototypes_in)), class_ids(std::move(ids)) {
  validate();
}

PrototypeBank::PrototypeBank(Matrix prototypes_in) : prototypes(std::move(prototypes_in)) {
  class_ids.resize(static_cast<std::size_t>(prototypes.rows()));
  std::iota(class_ids.begin(), class_ids.end(), 0);
  validate();
}

void PrototypeBank::validate() const {
  require(prototypes.rows() >= 1, "prototype bank needs at least one class");
  require(static_cast<Eigen::Index>(class_ids.size()) == prototypes.rows(),
          "prototype bank: one class id per prototype required");
  for (Eigen::Index r = 0; r < prototypes.rows(); ++r) {
    const double norm = prototypes.row(r).norm();
    require(std::isfinite(norm) && std::abs(norm - 1.0) <= 1e-6,
            "prototype " + std::to_string(r) + " is not unit-norm");
  }
  std::vector<int> sorted = class_ids;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    require(sorted[k] == static_cast<int>(k), "prototype class ids must be a permutation of 0..K-1");
  }
}

double EntropyGate::h_max() const { return std::log(static_cast<double>(num_classes)); }

double EntropyGate::h_base() const { return tau_ent * h_max(); }

EntropyGate EntropyGate::make(double tau, double tau_ent, int num_classes, double w_min) {
  require(tau > 0.0 && tau <= 1.0, "gate: tau must lie in (0, 1]");
  require(tau_ent > 0.0 && tau_ent <= 1.0, "gate: tau_ent must lie in (0, 1]");
  require(num_classes >= 2, "gate: at least two classes required");
  require(w_min >= 0.0 && w_min <= 1.0, "gate: w_min must lie in [0, 1]");
  return EntropyGate{tau, tau_ent, num_classes, w_min};
}

std::string_view to_string(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::Confident:
      return "confident";
    case DecisionKind::EntropySelected:
      return "entropy_selected";
    case DecisionKind::Rejected:
      return "rejected";
  }
  return "unknown";
}

ProbVector class_probabilities(const Vector& z_w, const PrototypeBank& bank, double t_prime) {
  require(z_w.size() == bank.dim(),
          "class_probabilities: embedding dimension " + std::to_string(z_w.size()) +
              " does not match prototype dimension " + std::to_string(bank.dim()));
  require(t_prime > 0.0, "class_probabilities: t_prime must be positive");
  const Vector by_row = bank.prototypes * z_w;
  Vector cosines(by_row.size());
  for (Eigen::Index r = 0; r < by_row.size(); ++r) {
    cosines[bank.class_ids[static_cast<std::size_t>(r)]] = by_row[r];
  }
  return stable_softmax(cosines, t_prime);
}

std::optional<double> compute_e_min(std::span<const SampleConfidence> samples, double tau) {
  std::optional<double> e_min;
  for (const auto& s : samples) {
    if (s.max_prob > tau) e_min = e_min ? std::max(*e_min, s.entropy) : s.entropy;
  }
  return e_min;
}

double adaptive_weight(double h, double e_min, double h_base, double w_min) {
  if (!(e_min < h_base)) {
    throw Error(ErrorCode::DegenerateGate,
                "adaptive_weight: e_min (" + std::to_string(e_min) + ") >= h_base (" +
                    std::to_string(h_base) + ")");
  }
  require(h >= e_min && h <= h_base, "adaptive_weight: entropy outside [e_min, h_base]");
  const double s = (h_base - h) / (h_base - e_min);
  // std::lerp is exact at both ends and monotone in s.
  return std::lerp(w_min, 1.0, std::clamp(s, 0.0, 1.0));
}

std::vector<PseudoLabelDecision> assign_pseudo_labels(std::span<const ProbVector> probs,
                                                      const EntropyGate& gate,
                                                      double lambda_reject,
                                                      bool entropy_gate_enabled) {
  const int K = gate.num_classes;
  std::vector<PseudoLabelDecision> out(probs.size());
  std::vector<SampleConfidence> conf(probs.size());

  // Pass 1: threshold rule.
  for (std::size_t i = 0; i < probs.size(); ++i) {
    require(probs[i].size() == K, "assign_pseudo_labels: row " + std::to_string(i) + " has " +
                                      std::to_string(probs[i].size()) + " classes, expected " +
                                      std::to_string(K));
    auto& d = out[i];
    d.sample_index = i;
    d.max_prob = probs[i].max_prob();
    d.entropy = entropy(probs[i]);
    conf[i] = {d.max_prob, d.entropy};
    if (d.max_prob > gate.tau) {
      d.kind = DecisionKind::Confident;
      d.assigned_label = static_cast<int>(probs[i].argmax());
      d.weight = 1.0;
    } else {
      d.kind = DecisionKind::Rejected;
      d.assigned_label = K + static_cast<int>(i);
      d.weight = lambda_reject;
    }
  }

  const std::optional<double> e_min = compute_e_min(conf, gate.tau);
  if (!entropy_gate_enabled || !e_min) return out;

  // Pass 2: entropy gate. When e_min >= h_base every admitted sample has
  // h <= e_min and takes the weight-1 branch, so the interpolation below is
  // never reached with a degenerate gate.
  const double h_base = gate.h_base();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    auto& d = out[i];
    if (d.kind != DecisionKind::Rejected || !(d.entropy < h_base)) continue;
    d.kind = DecisionKind::EntropySelected;
    d.assigned_label = static_cast<int>(probs[i].argmax());
    d.weight = d.entropy <= *e_min ? 1.0 : adaptive_weight(d.entropy, *e_min, h_base, gate.w_min);
  }
  return out;
}

}  // namespace ssce
