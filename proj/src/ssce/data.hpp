#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ssce/embedding_math.hpp"
#include "ssce/rng.hpp"

namespace ssce {

enum class Split { Labeled, Unlabeled, Test };

std::string_view to_string(Split split);

// Label value written for unlabeled rows in trainer-facing exports.
inline constexpr int kHiddenLabel = -1;

struct LabeledPool {
  Matrix features;
  std::vector<int> labels;
};

// Trainer-facing unlabeled data: features only.
struct UnlabeledPool {
  Matrix features;
};

struct TestSplit {
  Matrix features;
  std::vector<int> labels;
};

struct Dataset {
  Matrix features;          // n x d_in
  std::vector<int> labels;  // 0..K-1, or kHiddenLabel for hidden unlabeled rows
  std::vector<Split> splits;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  Eigen::Index dim() const { return features.cols(); }
  std::size_t count(Split split) const;

  LabeledPool labeled_pool() const;
  UnlabeledPool unlabeled_pool() const;
  TestSplit test_split() const;
  // Ground truth of the unlabeled rows, in unlabeled_pool() order. For
  // evaluation only; entries are kHiddenLabel when the file hid them.
  std::vector<int> hidden_unlabeled_labels() const;

  // Copy with every unlabeled label replaced by kHiddenLabel.
  Dataset trainer_view() const;

  void validate() const;
};

struct GaussianClusterSpec {
  int num_classes = 3;
  int dim = 8;
  int per_class = 100;
  double cluster_sigma = 1.0;
  double separation = 4.0;
  std::uint64_t seed = 0;
};

// Class means at seeded random directions scaled by `separation`, samples are
// mean + isotropic Gaussian noise. Rows are grouped by class; every row starts
// out tagged Unlabeled until split() runs.
Dataset generate_gaussian_clusters(const GaussianClusterSpec& spec);

// Exactly `labels_per_class` labeled rows per class; the remainder is
// shuffled and the first round(test_fraction * remainder) rows become Test.
void split(Dataset& ds, int labels_per_class, double test_fraction, std::uint64_t seed);

struct AugmentationPolicy {
  double weak_noise_sigma = 0.1;
  double strong_noise_sigma = 0.5;
  double strong_dropout_prob = 0.1;

  void validate() const;
};

enum class AugmentKind { Weak, Strong };

// Weak: v + N(0, weak^2). Strong: v + N(0, strong^2), then each coordinate is
// zeroed with probability strong_dropout_prob. Draws every noise value before
// any dropout decision.
Vector augment(const Vector& v, const AugmentationPolicy& policy, AugmentKind kind, Rng& rng);

// Header `feat_0,...,feat_{d-1},label,split`; `comment_lines` are written
// first, each prefixed with "# ".
void save_csv(const Dataset& ds, const std::filesystem::path& path,
              const std::vector<std::string>& comment_lines = {});
std::string to_csv(const Dataset& ds, const std::vector<std::string>& comment_lines = {});

Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(std::string_view text);

}  // namespace ssce
