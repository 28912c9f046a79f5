#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssce/config.hpp"
#include "ssce/contrastive_loss.hpp"
#include "ssce/data.hpp"
#include "ssce/encoder.hpp"
#include "ssce/pseudo_label.hpp"
#include "ssce/rng.hpp"

namespace ssce {

// eta0 * cos(7 pi t / (16 T)). Requires 0 <= t <= T, T > 0.
double cosine_lr(std::uint64_t t, std::uint64_t total, double eta0);

// Schedule as applied by the trainer: the recorded steps run t = 0..T with
// T = total_steps - 1, so the first and last rows hit both ends of the curve.
double scheduled_lr(const TrainConfig& config, std::uint64_t step);

// Entropy gating is on for SSC-E runs while epoch < cutoff_fraction * epochs.
bool gate_active(const TrainConfig& config, std::uint64_t step);

struct MetricRecord {
  std::uint64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::size_t confident = 0;
  std::size_t entropy_selected = 0;
  double mean_unlabeled_weight = 0.0;
  std::optional<double> test_acc;

  bool operator==(const MetricRecord&) const = default;
};

// What the training loop may see: no unlabeled ground truth.
struct TrainingData {
  LabeledPool labeled;
  UnlabeledPool unlabeled;
  TestSplit test;
  int num_classes = 0;

  static TrainingData from(const Dataset& ds);
};

struct TrainState {
  TrainConfig config;
  int input_dim = 0;
  MlpEncoder encoder;
  PrototypeBank bank;
  OptimizerState encoder_opt;
  OptimizerState prototype_opt;
  std::uint64_t step = 0;
  Rng rng;
  std::vector<MetricRecord> history;

  bool finished() const { return step >= config.total_steps(); }
};

TrainState init_state(const TrainConfig& config, int input_dim, int num_classes);

enum class EntrySource { Labeled, StrongView1, StrongView2, Prototype };

struct AssembledBatch {
  ContrastiveBatch batch;
  std::vector<EntrySource> sources;
  std::vector<PseudoLabelDecision> decisions;
  // Encoder pass over the labeled rows and both strong views (the first
  // B + 2 mu B batch entries).
  EncoderCache cache;
  std::vector<std::size_t> labeled_indices;
  std::vector<std::size_t> unlabeled_indices;
};

// Draws B labeled and mu*B unlabeled items (with replacement only when a pool
// is too small), embeds them and pseudo-labels the weak view. Entry order is
// [labeled | strong view 1 | strong view 2 | prototypes].
AssembledBatch assemble_batch(const TrainState& state, Rng& rng, const TrainingData& data,
                              bool entropy_gate_enabled);

// One optimizer step; appends and returns the metrics row. Raises a
// Numerical error with a batch dump on a non-finite loss or gradient.
MetricRecord train_step(TrainState& state, const TrainingData& data);

// Runs until the schedule finishes or `max_steps` more steps were taken.
// `on_checkpoint` fires every config.checkpoint_every steps.
void train(TrainState& state, const TrainingData& data,
           std::uint64_t max_steps = UINT64_MAX,
           const std::function<void(const TrainState&)>& on_checkpoint = {});

// Fresh state, full run.
TrainState train(const TrainConfig& config, const Dataset& dataset);

// Checkpoints: versioned plain text, every double in shortest round-trip
// form, so a load reproduces the state bit for bit.
std::string serialize_checkpoint(const TrainState& state);
TrainState deserialize_checkpoint(std::string_view text);
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

// Metrics log: comment lines, then
// step,epoch,lr,loss,confident,entropy_selected,mean_unlabeled_weight,test_acc
inline constexpr const char* kMetricsHeader =
    "step,epoch,lr,loss,confident,entropy_selected,mean_unlabeled_weight,test_acc";

std::string metrics_csv(const std::vector<MetricRecord>& history,
                        const std::vector<std::string>& comment_lines = {});
void save_metrics(const std::vector<MetricRecord>& history, const std::filesystem::path& path,
                  const std::vector<std::string>& comment_lines = {});

struct MetricsLog {
  // `# key = value` comment lines.
  std::map<std::string, std::string> metadata;
  std::vector<MetricRecord> records;

  std::optional<double> final_test_acc() const;
};

MetricsLog parse_metrics(std::string_view text);
MetricsLog load_metrics(const std::filesystem::path& path);

}  // namespace ssce
