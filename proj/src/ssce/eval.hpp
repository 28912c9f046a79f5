#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssce/config.hpp"
#include "ssce/data.hpp"
#include "ssce/encoder.hpp"
#include "ssce/pseudo_label.hpp"

namespace ssce {

inline constexpr std::size_t kWeightBins = 10;

struct PseudoMetrics {
  double coverage = 0.0;
  // Absent when no unlabeled sample received a class label with a known
  // ground truth.
  std::optional<double> precision;
};

struct EvalReport {
  double test_accuracy = 0.0;
  PseudoMetrics pseudo;
  // lambda histogram over [0, 1] in kWeightBins equal bins; 1.0 falls in the
  // last bin.
  std::array<std::size_t, kWeightBins> weight_histogram{};
  std::size_t unlabeled_count = 0;
};

// Nearest-prototype class ids for every row (argmax of the prototype
// softmax, ties to the lowest class id).
std::vector<int> predict(const MlpEncoder& encoder, const PrototypeBank& bank,
                         const Matrix& inputs, double t_prime);

// Fraction of test rows whose predicted class equals the label.
double evaluate(const MlpEncoder& encoder, const PrototypeBank& bank, const TestSplit& test,
                double t_prime);

// `hidden_labels[i]` is the truth for decision i; kHiddenLabel entries are
// skipped for precision.
PseudoMetrics pseudo_metrics(std::span<const PseudoLabelDecision> decisions,
                             std::span<const int> hidden_labels);

std::array<std::size_t, kWeightBins> weight_histogram(std::span<const PseudoLabelDecision> decisions);

// Test accuracy plus pseudo-label quality over the un-augmented unlabeled
// split, gated as the config's method would gate it.
EvalReport evaluate_report(const MlpEncoder& encoder, const PrototypeBank& bank,
                           const Dataset& dataset, const TrainConfig& config);

std::string format_report(const EvalReport& report);
std::string report_csv(const EvalReport& report);

}  // namespace ssce
