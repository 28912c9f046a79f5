#include "ssce/eval.hpp"

#include <algorithm>
#include <sstream>

#include "ssce/error.hpp"
#include "ssce/text_io.hpp"

namespace ssce {

std::vector<int> predict(const MlpEncoder& encoder, const PrototypeBank& bank,
                         const Matrix& inputs, double t_prime) {
  const Matrix z = encoder.embed(inputs);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const ProbVector p = class_probabilities(z.row(r).transpose(), bank, t_prime);
    out.push_back(static_cast<int>(p.argmax()));
  }
  return out;
}

double evaluate(const MlpEncoder& encoder, const PrototypeBank& bank, const TestSplit& test,
                double t_prime) {
  require(!test.labels.empty(), "evaluate: empty test split");
  const auto predicted = predict(encoder, bank, test.features, t_prime);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

PseudoMetrics pseudo_metrics(std::span<const PseudoLabelDecision> decisions,
                             std::span<const int> hidden_labels) {
  require(decisions.size() == hidden_labels.size(),
          "pseudo_metrics: " + std::to_string(decisions.size()) + " decisions but " +
              std::to_string(hidden_labels.size()) + " labels");
  PseudoMetrics m;
  if (decisions.empty()) return m;
  std::size_t labeled = 0;
  std::size_t judged = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (!decisions[i].has_class_label()) continue;
    ++labeled;
    if (hidden_labels[i] == kHiddenLabel) continue;
    ++judged;
    if (decisions[i].assigned_label == hidden_labels[i]) ++correct;
  }
  m.coverage = static_cast<double>(labeled) / static_cast<double>(decisions.size());
  if (judged > 0) m.precision = static_cast<double>(correct) / static_cast<double>(judged);
  return m;
}

std::array<std::size_t, kWeightBins> weight_histogram(std::span<const PseudoLabelDecision> decisions) {
  std::array<std::size_t, kWeightBins> bins{};
  for (const auto& d : decisions) {
    auto b = static_cast<std::size_t>(std::clamp(d.weight, 0.0, 1.0) * kWeightBins);
    bins[std::min(b, kWeightBins - 1)]++;
  }
  return bins;
}

EvalReport evaluate_report(const MlpEncoder& encoder, const PrototypeBank& bank,
                           const Dataset& dataset, const TrainConfig& config) {
  EvalReport report;
  report.test_accuracy = evaluate(encoder, bank, dataset.test_split(), config.gate.t_prime);

  const UnlabeledPool pool = dataset.unlabeled_pool();
  report.unlabeled_count = static_cast<std::size_t>(pool.features.rows());
  if (report.unlabeled_count == 0) return report;
  const Matrix z = encoder.embed(pool.features);
  std::vector<ProbVector> probs;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    probs.push_back(class_probabilities(z.row(r).transpose(), bank, config.gate.t_prime));
  }
  const auto gate = EntropyGate::make(config.gate.tau, config.gate.tau_ent, bank.num_classes(),
                                      config.gate.w_min);
  const bool gate_on = config.method == LossVariant::SscE && config.gate.enabled;
  const auto decisions = assign_pseudo_labels(probs, gate, config.gate.lambda_reject, gate_on);
  const auto truth = dataset.hidden_unlabeled_labels();
  report.pseudo = pseudo_metrics(decisions, truth);
  report.weight_histogram = weight_histogram(decisions);
  return report;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  os << "test_accuracy    " << format_double(report.test_accuracy) << '\n';
  os << "unlabeled        " << report.unlabeled_count << '\n';
  os << "pseudo_coverage  " << format_double(report.pseudo.coverage) << '\n';
  os << "pseudo_precision "
     << (report.pseudo.precision ? format_double(*report.pseudo.precision) : "absent") << '\n';
  os << "weight_histogram";
  for (std::size_t b = 0; b < kWeightBins; ++b) {
    os << (b ? " " : "  ") << '[' << format_double(static_cast<double>(b) / kWeightBins) << ','
       << format_double(static_cast<double>(b + 1) / kWeightBins) << (b + 1 == kWeightBins ? "]" : ")")
       << '=' << report.weight_histogram[b];
  }
  os << '\n';
  return os.str();
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "test_accuracy,pseudo_coverage,pseudo_precision";
  for (std::size_t b = 0; b < kWeightBins; ++b) os << ",weight_bin_" << b;
  os << '\n'
     << format_double(report.test_accuracy) << ',' << format_double(report.pseudo.coverage) << ','
     << (report.pseudo.precision ? format_double(*report.pseudo.precision) : "");
  for (auto c : report.weight_histogram) os << ',' << c;
  os << '\n';
  return os.str();
}

}  // namespace ssce
