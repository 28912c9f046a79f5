#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "ssce/embedding_math.hpp"

namespace ssce {

// Rows of class probabilities, e.g. for exercising the gate in isolation.
struct ProbTable {
  std::vector<ProbVector> rows;
  int num_classes = 0;
};

// CSV header: p_0,...,p_{C-1}; '#' lines are comments.
ProbTable parse_prob_csv(std::string_view text);
ProbTable load_prob_csv(const std::filesystem::path& path);

// softmax(sharpness * g) with g ~ N(0, I), one row per sample.
ProbTable synthetic_probabilities(std::size_t rows, int num_classes,
                                                double sharpness, std::uint64_t seed);

}  // namespace ssce
