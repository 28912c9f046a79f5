#pragma once

#include <cstdint>
#include <optional>

#include "ssce/contrastive_loss.hpp"
#include "ssce/rng.hpp"

namespace ssce {

struct RandomBatchSpec {
  int min_size = 2;
  int max_size = 16;
  int min_dim = 2;
  int max_dim = 8;
  // Labels are drawn from 0..num_labels-1 with num_labels in [1, max_labels].
  int max_labels = 4;
  double min_temperature = 0.1;
  double max_temperature = 1.0;
  // Weights uniform in [min_weight, 1].
  double min_weight = 0.0;
};

// Random unit embeddings, labels, weights and temperature. Retries until the
// batch has a positive normalizer for both loss variants.
ContrastiveBatch random_batch(Rng& rng, const RandomBatchSpec& spec = {});

// Finite-difference check of inputs -> encoder -> SSC-E loss over all
// encoder parameters and prototype coordinates on a seeded fixture.
GradCheckReport encoder_grad_check(std::uint64_t seed, double epsilon);

struct GradCheckSuiteOptions {
  double epsilon = 1e-5;
  std::uint64_t seed = 7;
  int trials = 100;
  bool check_ssc = true;
  bool check_ssc_e = true;
  bool check_encoder = true;
};

struct GradCheckSuiteResult {
  std::optional<double> ssc;
  std::optional<double> ssc_e;
  std::optional<double> encoder;
};

inline constexpr double kGradCheckTolerance = 1e-4;

// Worst relative error per enabled check over `trials` random batches.
// Epsilons outside [1e-7, 1e-3] are allowed here so coarse settings can be
// reported.
GradCheckSuiteResult run_grad_check_suite(const GradCheckSuiteOptions& options);

}  // namespace ssce
