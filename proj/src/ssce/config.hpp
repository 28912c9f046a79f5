#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ssce/contrastive_loss.hpp"
#include "ssce/data.hpp"
#include "ssce/encoder.hpp"

namespace ssce {

struct GateConfig {
  bool enabled = true;
  double tau = 0.95;
  double tau_ent = 0.2;
  double w_min = 0.2;
  double lambda_reject = 0.2;
  double t_prime = 0.1;
  // Entropy-selected samples serve only as positives, never as anchors.
  bool positives_only = false;

  bool operator==(const GateConfig&) const = default;
};

// Everything that determines a training run besides the data.
struct TrainConfig {
  // model.* (input_dim comes from the dataset)
  std::vector<int> hidden = {64, 64};
  int embedding_dim = 16;
  // loss.*
  LossVariant method = LossVariant::SscE;
  double temperature = 0.1;
  // gate.*
  GateConfig gate;
  // augment.*
  AugmentationPolicy augment;
  // optim.*
  double eta0 = 0.03;
  double momentum = 0.9;
  // train.*
  int batch_size = 64;
  int mu = 7;
  int epochs = 256;
  int steps_per_epoch = 1024;
  double gate_cutoff_fraction = 200.0 / 256.0;
  std::uint64_t seed = 0;
  int eval_every = 1024;
  int checkpoint_every = 0;

  std::uint64_t total_steps() const {
    return static_cast<std::uint64_t>(epochs) * static_cast<std::uint64_t>(steps_per_epoch);
  }
  EncoderConfig encoder_config(int input_dim) const { return {input_dim, hidden, embedding_dim}; }

  void validate() const;
  bool operator==(const TrainConfig& o) const;
};

// Settings stated for the full-size image experiments.
TrainConfig full_preset();
// Scaled-down settings for the synthetic tasks (seconds per run).
TrainConfig desk_preset();
// "full" or "desk"; Config error otherwise.
TrainConfig preset(std::string_view name);

std::string_view to_string(LossVariant variant);
LossVariant parse_loss_variant(std::string_view text);

// All recognized keys in canonical order.
const std::vector<std::string>& config_keys();

// Sets one `section.key`; unknown keys and unparsable values raise Config
// errors. Ranges are left to validate().
void apply_setting(TrainConfig& config, std::string_view key, std::string_view value);
std::string get_setting(const TrainConfig& config, std::string_view key);

// `section.key = value` lines, `#` comments and blank lines allowed. Settings
// are applied on top of `base` and the result is validated.
TrainConfig parse_config(std::string_view text, TrainConfig base);

// Canonical text: one `section.key = value` line per key.
std::string to_text(const TrainConfig& config);
std::vector<std::string> to_lines(const TrainConfig& config);

}  // namespace ssce
