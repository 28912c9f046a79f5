#include "ssce/prob_table.hpp"

#include "ssce/error.hpp"
#include "ssce/rng.hpp"
#include "ssce/text_io.hpp"

namespace ssce {

ProbTable parse_prob_csv(std::string_view text) {
  std::vector<ProbVector> rows;
  std::size_t classes = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;
    const auto cells = split_view(line, ',');
    if (classes == 0) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (trim(cells[c]) != "p_" + std::to_string(c)) {
          throw ParseError(line_no, "malformed header, expected p_0,...,p_{C-1}");
        }
      }
      classes = cells.size();
      if (classes < 2) throw ParseError(line_no, "need at least two class columns");
      continue;
    }
    if (cells.size() != classes) {
      throw ParseError(line_no, "expected " + std::to_string(classes) + " columns, found " +
                                    std::to_string(cells.size()));
    }
    Vector p(static_cast<Eigen::Index>(classes));
    for (std::size_t c = 0; c < classes; ++c) {
      const auto v = parse_double(cells[c]);
      if (!v) throw ParseError(line_no, "non-numeric probability in column " + std::to_string(c));
      p[static_cast<Eigen::Index>(c)] = *v;
    }
    try {
      rows.emplace_back(std::move(p));
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (classes == 0) throw ParseError(line_no == 0 ? 1 : line_no, "missing header");
  return {std::move(rows), static_cast<int>(classes)};
}

ProbTable load_prob_csv(const std::filesystem::path& path) {
  return parse_prob_csv(read_file(path));
}

ProbTable synthetic_probabilities(std::size_t rows, int num_classes,
                                                double sharpness, std::uint64_t seed) {
  require(num_classes >= 2, "synthetic probabilities: need at least two classes");
  require(sharpness >= 0.0, "synthetic probabilities: sharpness must be >= 0");
  Rng rng = Rng::stream(seed, 0x9A7E);
  ProbTable out;
  out.num_classes = num_classes;
  out.rows.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    Vector scores(num_classes);
    for (int c = 0; c < num_classes; ++c) scores[c] = sharpness * rng.normal();
    out.rows.push_back(stable_softmax(scores, 1.0));
  }
  return out;
}

}  // namespace ssce
