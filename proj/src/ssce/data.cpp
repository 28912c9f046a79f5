#include "ssce/data.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ssce/error.hpp"
#include "ssce/text_io.hpp"

namespace ssce {

namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

std::vector<std::size_t> rows_in(const Dataset& ds, Split split) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.splits[i] == split) rows.push_back(i);
  }
  return rows;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Labeled:
      return "labeled";
    case Split::Unlabeled:
      return "unlabeled";
    case Split::Test:
      return "test";
  }
  return "unknown";
}

std::size_t Dataset::count(Split split) const {
  return static_cast<std::size_t>(std::count(splits.begin(), splits.end(), split));
}

LabeledPool Dataset::labeled_pool() const {
  const auto rows = rows_in(*this, Split::Labeled);
  LabeledPool pool{gather_rows(features, rows), {}};
  for (auto r : rows) pool.labels.push_back(labels[r]);
  return pool;
}

UnlabeledPool Dataset::unlabeled_pool() const {
  return UnlabeledPool{gather_rows(features, rows_in(*this, Split::Unlabeled))};
}

TestSplit Dataset::test_split() const {
  const auto rows = rows_in(*this, Split::Test);
  TestSplit t{gather_rows(features, rows), {}};
  for (auto r : rows) t.labels.push_back(labels[r]);
  return t;
}

std::vector<int> Dataset::hidden_unlabeled_labels() const {
  std::vector<int> out;
  for (auto r : rows_in(*this, Split::Unlabeled)) out.push_back(labels[r]);
  return out;
}

Dataset Dataset::trainer_view() const {
  Dataset view = *this;
  for (std::size_t i = 0; i < view.size(); ++i) {
    if (view.splits[i] == Split::Unlabeled) view.labels[i] = kHiddenLabel;
  }
  return view;
}

void Dataset::validate() const {
  require(static_cast<std::size_t>(features.rows()) == labels.size() &&
              splits.size() == labels.size(),
          "dataset: features, labels and split tags must have equal length");
  require(num_classes >= 0, "dataset: negative class count");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const bool hidden_ok = y == kHiddenLabel && splits[i] == Split::Unlabeled;
    require(hidden_ok || (y >= 0 && y < num_classes),
            "dataset: row " + std::to_string(i) + " has invalid label " + std::to_string(y));
  }
  require(all_finite(features), "dataset: non-finite feature");
}

Dataset generate_gaussian_clusters(const GaussianClusterSpec& spec) {
  require(spec.num_classes >= 2, "generate: at least two classes required");
  require(spec.dim >= 1, "generate: dim must be >= 1");
  require(spec.per_class >= 1, "generate: per_class must be >= 1");
  require(spec.separation > 0.0, "generate: separation must be positive");
  require(spec.cluster_sigma >= 0.0 && std::isfinite(spec.cluster_sigma),
          "generate: cluster_sigma must be finite and >= 0");

  Rng mean_rng = Rng::stream(spec.seed, 0);
  Matrix means(spec.num_classes, spec.dim);
  for (Eigen::Index k = 0; k < means.rows(); ++k) {
    for (Eigen::Index c = 0; c < means.cols(); ++c) means(k, c) = mean_rng.normal();
  }
  normalize_rows(means);
  means *= spec.separation;

  Dataset ds;
  ds.num_classes = spec.num_classes;
  const Eigen::Index n = static_cast<Eigen::Index>(spec.num_classes) * spec.per_class;
  ds.features.resize(n, spec.dim);
  Eigen::Index row = 0;
  // One stream per class, so classes can be generated independently.
  for (int k = 0; k < spec.num_classes; ++k) {
    Rng rng = Rng::stream(spec.seed, 1 + static_cast<std::uint64_t>(k));
    for (int s = 0; s < spec.per_class; ++s, ++row) {
      for (Eigen::Index c = 0; c < spec.dim; ++c) {
        ds.features(row, c) = means(k, c) + spec.cluster_sigma * rng.normal();
      }
      ds.labels.push_back(k);
      ds.splits.push_back(Split::Unlabeled);
    }
  }
  return ds;
}

void split(Dataset& ds, int labels_per_class, double test_fraction, std::uint64_t seed) {
  require(labels_per_class >= 1, "split: labels_per_class must be >= 1");
  require(test_fraction >= 0.0 && test_fraction <= 1.0, "split: test_fraction must lie in [0, 1]");
  for (int y : ds.labels) {
    require(y >= 0 && y < ds.num_classes, "split: every row needs a known label");
  }
  Rng rng = Rng::stream(seed, 0x5EED);
  std::vector<std::size_t> remainder;
  for (int k = 0; k < ds.num_classes; ++k) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.labels[i] == k) members.push_back(i);
    }
    require(members.size() >= static_cast<std::size_t>(labels_per_class),
            "split: class " + std::to_string(k) + " has " + std::to_string(members.size()) +
                " samples, fewer than labels_per_class = " + std::to_string(labels_per_class));
    shuffle(members, rng);
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (m < static_cast<std::size_t>(labels_per_class)) {
        ds.splits[members[m]] = Split::Labeled;
      } else {
        remainder.push_back(members[m]);
      }
    }
  }
  shuffle(remainder, rng);
  const auto n_test =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(remainder.size())));
  for (std::size_t m = 0; m < remainder.size(); ++m) {
    ds.splits[remainder[m]] = m < n_test ? Split::Test : Split::Unlabeled;
  }
}

void AugmentationPolicy::validate() const {
  require(weak_noise_sigma >= 0.0 && strong_noise_sigma >= 0.0,
          "augmentation: noise scales must be >= 0");
  require(weak_noise_sigma <= strong_noise_sigma,
          "augmentation: weak noise must not exceed strong noise");
  require(strong_dropout_prob >= 0.0 && strong_dropout_prob <= 1.0,
          "augmentation: dropout probability must lie in [0, 1]");
}

Vector augment(const Vector& v, const AugmentationPolicy& policy, AugmentKind kind, Rng& rng) {
  const double sigma =
      kind == AugmentKind::Weak ? policy.weak_noise_sigma : policy.strong_noise_sigma;
  Vector out(v.size());
  for (Eigen::Index c = 0; c < v.size(); ++c) out[c] = v[c] + sigma * rng.normal();
  if (kind == AugmentKind::Strong) {
    for (Eigen::Index c = 0; c < v.size(); ++c) {
      if (rng.uniform() < policy.strong_dropout_prob) out[c] = 0.0;
    }
  }
  return out;
}

std::string to_csv(const Dataset& ds, const std::vector<std::string>& comment_lines) {
  std::ostringstream os;
  for (const auto& line : comment_lines) os << "# " << line << '\n';
  for (Eigen::Index c = 0; c < ds.dim(); ++c) os << "feat_" << c << ',';
  os << "label,split\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (Eigen::Index c = 0; c < ds.dim(); ++c) {
      os << format_double(ds.features(static_cast<Eigen::Index>(i), c)) << ',';
    }
    os << ds.labels[i] << ',' << to_string(ds.splits[i]) << '\n';
  }
  return os.str();
}

void save_csv(const Dataset& ds, const std::filesystem::path& path,
              const std::vector<std::string>& comment_lines) {
  ds.validate();
  write_file_atomic(path, to_csv(ds, comment_lines));
}

Dataset parse_csv(std::string_view text) {
  Dataset ds;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  int max_label = -1;

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
    if (!have_header) {
      if (cells.size() < 3 || trim(cells[cells.size() - 2]) != "label" ||
          trim(cells.back()) != "split") {
        throw ParseError(line_no, "malformed header, expected feat_0,...,label,split");
      }
      dim = cells.size() - 2;
      for (std::size_t c = 0; c < dim; ++c) {
        if (trim(cells[c]) != "feat_" + std::to_string(c)) {
          throw ParseError(line_no, "malformed header: column " + std::to_string(c) +
                                        " should be feat_" + std::to_string(c));
        }
      }
      have_header = true;
      continue;
    }
    if (cells.size() != dim + 2) {
      throw ParseError(line_no, "expected " + std::to_string(dim + 2) + " columns, found " +
                                    std::to_string(cells.size()));
    }
    std::vector<double> feats(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      const auto v = parse_double(cells[c]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(line_no, "non-numeric feature in column " + std::to_string(c));
      }
      feats[c] = *v;
    }
    const auto label = parse_int(cells[dim]);
    if (!label || *label < kHiddenLabel || *label > 1'000'000) {
      throw ParseError(line_no, "invalid label '" + std::string(trim(cells[dim])) + "'");
    }
    const auto tag = trim(cells[dim + 1]);
    Split split;
    if (tag == "labeled") {
      split = Split::Labeled;
    } else if (tag == "unlabeled") {
      split = Split::Unlabeled;
    } else if (tag == "test") {
      split = Split::Test;
    } else {
      throw ParseError(line_no, "unknown split '" + std::string(tag) + "'");
    }
    if (*label == kHiddenLabel && split != Split::Unlabeled) {
      throw ParseError(line_no, "label -1 is only allowed on unlabeled rows");
    }
    rows.push_back(std::move(feats));
    ds.labels.push_back(static_cast<int>(*label));
    ds.splits.push_back(split);
    max_label = std::max(max_label, static_cast<int>(*label));
  }
  if (!have_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing header");

  ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  ds.num_classes = max_label + 1;
  return ds;
}

Dataset load_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

}  // namespace ssce
