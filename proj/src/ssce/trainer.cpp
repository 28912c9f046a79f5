#include "ssce/trainer.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ssce/error.hpp"
#include "ssce/eval.hpp"
#include "ssce/text_io.hpp"

namespace ssce {

namespace {

std::vector<std::size_t> sample_indices(std::size_t pool, std::size_t count, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(count);
  if (pool >= count) {
    // Partial Fisher-Yates: the first `count` entries of a shuffle.
    std::vector<std::size_t> perm(pool);
    for (std::size_t i = 0; i < pool; ++i) perm[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(pool - i));
      std::swap(perm[i], perm[j]);
      out.push_back(perm[i]);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) out.push_back(static_cast<std::size_t>(rng.below(pool)));
  }
  return out;
}

std::string dump_batch(const AssembledBatch& ab, const LossResult* loss) {
  std::ostringstream os;
  const auto& b = ab.batch;
  os << "batch dump: N=" << b.size() << " d=" << b.embeddings.cols()
     << " T=" << format_double(b.temperature) << '\n';
  if (loss) os << "loss=" << format_double(loss->value) << '\n';
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    os << "  [" << i << "] label=" << b.labels[i] << " weight=" << format_double(b.weights[i])
       << " norm=" << format_double(b.embeddings.row(r).norm());
    if (loss) os << " grad_norm=" << format_double(loss->grad.row(r).norm());
    os << '\n';
  }
  return os.str();
}

}  // namespace

double cosine_lr(std::uint64_t t, std::uint64_t total, double eta0) {
  require(total > 0, "cosine_lr: total steps must be positive");
  require(t <= total, "cosine_lr: step beyond schedule end");
  return eta0 * std::cos(7.0 * std::numbers::pi * static_cast<double>(t) /
                         (16.0 * static_cast<double>(total)));
}

double scheduled_lr(const TrainConfig& config, std::uint64_t step) {
  const std::uint64_t total = config.total_steps();
  if (total <= 1) return config.eta0;
  return cosine_lr(step, total - 1, config.eta0);
}

bool gate_active(const TrainConfig& config, std::uint64_t step) {
  if (config.method != LossVariant::SscE || !config.gate.enabled) return false;
  const auto epoch = static_cast<double>(step / static_cast<std::uint64_t>(config.steps_per_epoch));
  return epoch < config.gate_cutoff_fraction * static_cast<double>(config.epochs);
}

TrainingData TrainingData::from(const Dataset& ds) {
  ds.validate();
  TrainingData d;
  d.labeled = ds.labeled_pool();
  d.unlabeled = ds.unlabeled_pool();
  d.test = ds.test_split();
  d.num_classes = ds.num_classes;
  return d;
}

TrainState init_state(const TrainConfig& config, int input_dim, int num_classes) {
  config.validate();
  require(num_classes >= 2, "trainer: at least two classes required");
  TrainState s;
  s.config = config;
  s.input_dim = input_dim;
  Rng init = Rng::stream(config.seed, 1);
  s.encoder = MlpEncoder(config.encoder_config(input_dim), init);
  s.bank = random_prototypes(num_classes, config.embedding_dim, init);
  s.encoder_opt = {Vector::Zero(static_cast<Eigen::Index>(s.encoder.parameter_count())),
                   config.momentum, scheduled_lr(config, 0)};
  s.prototype_opt = {Vector::Zero(s.bank.prototypes.size()), config.momentum,
                     scheduled_lr(config, 0)};
  s.rng = Rng::stream(config.seed, 2);
  return s;
}

AssembledBatch assemble_batch(const TrainState& state, Rng& rng, const TrainingData& data,
                              bool entropy_gate_enabled) {
  const auto& cfg = state.config;
  const auto n_lab = static_cast<std::size_t>(data.labeled.features.rows());
  const auto n_unl = static_cast<std::size_t>(data.unlabeled.features.rows());
  require(n_lab > 0, "assemble_batch: empty labeled pool");
  require(n_unl > 0, "assemble_batch: empty unlabeled pool");
  const auto B = static_cast<std::size_t>(cfg.batch_size);
  const auto U = B * static_cast<std::size_t>(cfg.mu);
  const int K = state.bank.num_classes();
  const Eigen::Index d_in = data.labeled.features.cols();

  AssembledBatch ab;
  ab.labeled_indices = sample_indices(n_lab, B, rng);
  ab.unlabeled_indices = sample_indices(n_unl, U, rng);

  Matrix inputs(static_cast<Eigen::Index>(B + 2 * U), d_in);
  Matrix weak(static_cast<Eigen::Index>(U), d_in);
  for (std::size_t i = 0; i < B; ++i) {
    inputs.row(static_cast<Eigen::Index>(i)) =
        data.labeled.features.row(static_cast<Eigen::Index>(ab.labeled_indices[i]));
  }
  for (std::size_t i = 0; i < U; ++i) {
    const Vector u =
        data.unlabeled.features.row(static_cast<Eigen::Index>(ab.unlabeled_indices[i])).transpose();
    weak.row(static_cast<Eigen::Index>(i)) = augment(u, cfg.augment, AugmentKind::Weak, rng).transpose();
    inputs.row(static_cast<Eigen::Index>(B + i)) =
        augment(u, cfg.augment, AugmentKind::Strong, rng).transpose();
    inputs.row(static_cast<Eigen::Index>(B + U + i)) =
        augment(u, cfg.augment, AugmentKind::Strong, rng).transpose();
  }

  ab.cache = state.encoder.forward(inputs);
  const Matrix z_weak = state.encoder.embed(weak);
  std::vector<ProbVector> probs;
  probs.reserve(U);
  for (Eigen::Index r = 0; r < z_weak.rows(); ++r) {
    probs.push_back(class_probabilities(z_weak.row(r).transpose(), state.bank, cfg.gate.t_prime));
  }
  const auto gate = EntropyGate::make(cfg.gate.tau, cfg.gate.tau_ent, K, cfg.gate.w_min);
  ab.decisions = assign_pseudo_labels(probs, gate, cfg.gate.lambda_reject, entropy_gate_enabled);

  const std::size_t n = B + 2 * U + static_cast<std::size_t>(K);
  auto& batch = ab.batch;
  batch.temperature = cfg.temperature;
  batch.embeddings.resize(static_cast<Eigen::Index>(n), state.bank.dim());
  batch.embeddings.topRows(static_cast<Eigen::Index>(B + 2 * U)) = ab.cache.embeddings;
  batch.embeddings.bottomRows(K) = state.bank.prototypes;
  batch.labels.reserve(n);
  batch.weights.reserve(n);
  if (cfg.gate.positives_only) batch.can_anchor.assign(n, true);

  for (std::size_t i = 0; i < B; ++i) {
    batch.labels.push_back(data.labeled.labels[ab.labeled_indices[i]]);
    batch.weights.push_back(1.0);
    ab.sources.push_back(EntrySource::Labeled);
  }
  for (int view = 0; view < 2; ++view) {
    for (std::size_t i = 0; i < U; ++i) {
      const auto& d = ab.decisions[i];
      if (cfg.gate.positives_only && d.kind == DecisionKind::EntropySelected) {
        batch.can_anchor[batch.labels.size()] = false;
      }
      batch.labels.push_back(d.assigned_label);
      batch.weights.push_back(d.weight);
      ab.sources.push_back(view == 0 ? EntrySource::StrongView1 : EntrySource::StrongView2);
    }
  }
  for (int k = 0; k < K; ++k) {
    batch.labels.push_back(state.bank.class_ids[static_cast<std::size_t>(k)]);
    batch.weights.push_back(1.0);
    ab.sources.push_back(EntrySource::Prototype);
  }
  return ab;
}

MetricRecord train_step(TrainState& state, const TrainingData& data) {
  const auto& cfg = state.config;
  require(!state.finished(), "train_step: schedule already finished");
  const bool gate_on = gate_active(cfg, state.step);
  const double lr = scheduled_lr(cfg, state.step);

  AssembledBatch ab = assemble_batch(state, state.rng, data, gate_on);
  LossResult loss = contrastive_loss(ab.batch, cfg.method);
  if (!std::isfinite(loss.value) || !all_finite(loss.grad)) {
    throw Error(ErrorCode::Numerical, "non-finite loss at step " + std::to_string(state.step) +
                                          "\n" + dump_batch(ab, &loss));
  }

  const Eigen::Index enc_rows = ab.cache.embeddings.rows();
  const Matrix enc_grad = loss.grad.topRows(enc_rows);
  const Matrix proto_grad = loss.grad.bottomRows(state.bank.num_classes());
  const Vector param_grad = state.encoder.backward(ab.cache, enc_grad);

  state.encoder_opt.learning_rate = lr;
  state.prototype_opt.learning_rate = lr;
  state.encoder.sgd_step(param_grad, state.encoder_opt);
  update_prototypes(state.bank, proto_grad, state.prototype_opt);

  MetricRecord rec;
  rec.step = state.step;
  rec.epoch = static_cast<int>(state.step / static_cast<std::uint64_t>(cfg.steps_per_epoch));
  rec.lr = lr;
  rec.loss = loss.value;
  double weight_sum = 0.0;
  for (const auto& d : ab.decisions) {
    if (d.kind == DecisionKind::Confident) ++rec.confident;
    if (d.kind == DecisionKind::EntropySelected) ++rec.entropy_selected;
    weight_sum += d.weight;
  }
  rec.mean_unlabeled_weight = ab.decisions.empty() ? 0.0 : weight_sum / ab.decisions.size();

  ++state.step;
  const bool last = state.finished();
  const bool periodic = cfg.eval_every > 0 && state.step % static_cast<std::uint64_t>(cfg.eval_every) == 0;
  if ((last || periodic) && !data.test.labels.empty()) {
    rec.test_acc = evaluate(state.encoder, state.bank, data.test, cfg.gate.t_prime);
  }
  state.history.push_back(rec);
  return rec;
}

void train(TrainState& state, const TrainingData& data, std::uint64_t max_steps,
           const std::function<void(const TrainState&)>& on_checkpoint) {
  require(data.labeled.features.cols() == state.input_dim,
          "train: dataset dimension does not match the model");
  require(data.num_classes == state.bank.num_classes(),
          "train: dataset class count does not match the prototype bank");
  const auto every = static_cast<std::uint64_t>(state.config.checkpoint_every);
  for (std::uint64_t taken = 0; taken < max_steps && !state.finished(); ++taken) {
    train_step(state, data);
    if (on_checkpoint && every > 0 && state.step % every == 0) on_checkpoint(state);
  }
}

TrainState train(const TrainConfig& config, const Dataset& dataset) {
  const TrainingData data = TrainingData::from(dataset);
  TrainState state = init_state(config, static_cast<int>(dataset.dim()), dataset.num_classes);
  train(state, data);
  return state;
}

// ---------------------------------------------------------------- checkpoint

namespace {

constexpr const char* kCheckpointMagic = "ssce-checkpoint 1";

void write_vector(std::ostringstream& os, const char* name, const Vector& v) {
  os << name << ' ' << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << format_double(v[i]);
  os << '\n';
}

std::string record_row(const MetricRecord& r) {
  std::ostringstream os;
  os << r.step << ',' << r.epoch << ',' << format_double(r.lr) << ',' << format_double(r.loss) << ','
     << r.confident << ',' << r.entropy_selected << ',' << format_double(r.mean_unlabeled_weight)
     << ',';
  if (r.test_acc) os << format_double(*r.test_acc);
  return os.str();
}

MetricRecord parse_record(std::string_view line, std::size_t line_no) {
  const auto cells = split_view(line, ',');
  if (cells.size() != 8) {
    throw ParseError(line_no, "expected 8 metric columns, found " + std::to_string(cells.size()));
  }
  auto num = [&](std::size_t c) {
    const auto v = parse_double(cells[c]);
    if (!v) throw ParseError(line_no, "non-numeric value in column " + std::to_string(c));
    return *v;
  };
  auto whole = [&](std::size_t c) {
    const auto v = parse_u64(cells[c]);
    if (!v) throw ParseError(line_no, "non-integer value in column " + std::to_string(c));
    return *v;
  };
  MetricRecord r;
  r.step = whole(0);
  r.epoch = static_cast<int>(whole(1));
  r.lr = num(2);
  r.loss = num(3);
  r.confident = static_cast<std::size_t>(whole(4));
  r.entropy_selected = static_cast<std::size_t>(whole(5));
  r.mean_unlabeled_weight = num(6);
  if (!trim(cells[7]).empty()) r.test_acc = num(7);
  return r;
}

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  std::string_view next() {
    if (pos_ >= text_.size()) throw ParseError(line_ + 1, "unexpected end of checkpoint");
    auto end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    auto line = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    ++line_;
    return line;
  }

  void expect(std::string_view want) {
    const auto got = next();
    if (got != want) {
      throw ParseError(line_, "expected '" + std::string(want) + "', found '" + std::string(got) + "'");
    }
  }

  Vector vector(std::string_view name) {
    const auto line = next();
    const auto parts = split_view(line, ' ');
    if (parts.size() < 2 || parts[0] != name) throw ParseError(line_, "expected " + std::string(name));
    const auto n = parse_u64(parts[1]);
    if (!n || parts.size() != *n + 2) throw ParseError(line_, "bad length for " + std::string(name));
    Vector v(static_cast<Eigen::Index>(*n));
    for (std::size_t i = 0; i < *n; ++i) {
      const auto x = parse_double(parts[i + 2]);
      if (!x) throw ParseError(line_, "bad number in " + std::string(name));
      v[static_cast<Eigen::Index>(i)] = *x;
    }
    return v;
  }

  std::string_view value(std::string_view key) {
    const auto line = next();
    const auto sp = line.find(' ');
    if (sp == std::string_view::npos || line.substr(0, sp) != key) {
      throw ParseError(line_, "expected " + std::string(key));
    }
    return line.substr(sp + 1);
  }

  double real(std::string_view key) {
    const auto v = parse_double(value(key));
    if (!v) throw ParseError(line_, "bad value for " + std::string(key));
    return *v;
  }

  std::uint64_t whole(std::string_view key) {
    const auto v = parse_u64(value(key));
    if (!v) throw ParseError(line_, "bad value for " + std::string(key));
    return *v;
  }

  std::size_t line() const { return line_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const TrainState& s) {
  std::ostringstream os;
  os << kCheckpointMagic << '\n';
  os << "[config] " << config_keys().size() << '\n' << to_text(s.config);
  os << "[state]\n";
  os << "input_dim " << s.input_dim << '\n';
  os << "num_classes " << s.bank.num_classes() << '\n';
  os << "step " << s.step << '\n';
  os << "rng " << s.rng.serialize() << '\n';
  write_vector(os, "encoder", s.encoder.parameters());
  write_vector(os, "encoder_velocity", s.encoder_opt.velocity);
  os << "encoder_lr " << format_double(s.encoder_opt.learning_rate) << '\n';
  const Eigen::Map<const Vector> protos(s.bank.prototypes.data(), s.bank.prototypes.size());
  write_vector(os, "prototypes", protos);
  write_vector(os, "prototype_velocity", s.prototype_opt.velocity);
  os << "prototype_lr " << format_double(s.prototype_opt.learning_rate) << '\n';
  os << "[history] " << s.history.size() << '\n';
  for (const auto& r : s.history) os << record_row(r) << '\n';
  os << "[end]\n";
  return os.str();
}

TrainState deserialize_checkpoint(std::string_view text) {
  LineReader in(text);
  in.expect(kCheckpointMagic);
  const auto n_keys = in.value("[config]");
  const auto nk = parse_u64(n_keys);
  if (!nk) throw ParseError(in.line(), "bad config key count");
  std::string config_text;
  for (std::uint64_t i = 0; i < *nk; ++i) config_text += std::string(in.next()) + '\n';
  const TrainConfig config = parse_config(config_text, TrainConfig{});
  config.validate();
  in.expect("[state]");

  TrainState s;
  s.config = config;
  s.input_dim = static_cast<int>(in.whole("input_dim"));
  const auto K = static_cast<Eigen::Index>(in.whole("num_classes"));
  s.step = in.whole("step");
  s.rng = Rng::deserialize(std::string(in.value("rng")));
  s.encoder = MlpEncoder(config.encoder_config(s.input_dim), in.vector("encoder"));
  s.encoder_opt.velocity = in.vector("encoder_velocity");
  s.encoder_opt.learning_rate = in.real("encoder_lr");
  s.encoder_opt.momentum = config.momentum;
  const Vector protos = in.vector("prototypes");
  if (protos.size() != K * config.embedding_dim) {
    throw ParseError(in.line(), "prototype block has the wrong size");
  }
  Matrix p = Eigen::Map<const Matrix>(protos.data(), K, config.embedding_dim);
  s.bank = PrototypeBank(std::move(p));
  s.prototype_opt.velocity = in.vector("prototype_velocity");
  s.prototype_opt.learning_rate = in.real("prototype_lr");
  s.prototype_opt.momentum = config.momentum;
  if (s.encoder_opt.velocity.size() != s.encoder.parameters().size() ||
      s.prototype_opt.velocity.size() != protos.size()) {
    throw ParseError(in.line(), "optimizer state does not match parameter shapes");
  }
  const auto n_hist = parse_u64(in.value("[history]"));
  if (!n_hist) throw ParseError(in.line(), "bad history length");
  for (std::uint64_t i = 0; i < *n_hist; ++i) {
    const auto line = in.next();
    s.history.push_back(parse_record(line, in.line()));
  }
  in.expect("[end]");
  return s;
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(state));
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

// ------------------------------------------------------------------- metrics

std::string metrics_csv(const std::vector<MetricRecord>& history,
                        const std::vector<std::string>& comment_lines) {
  std::ostringstream os;
  for (const auto& line : comment_lines) os << "# " << line << '\n';
  os << kMetricsHeader << '\n';
  for (const auto& r : history) os << record_row(r) << '\n';
  return os.str();
}

void save_metrics(const std::vector<MetricRecord>& history, const std::filesystem::path& path,
                  const std::vector<std::string>& comment_lines) {
  write_file_atomic(path, metrics_csv(history, comment_lines));
}

std::optional<double> MetricsLog::final_test_acc() const {
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    if (it->test_acc) return it->test_acc;
  }
  return std::nullopt;
}

MetricsLog parse_metrics(std::string_view text) {
  MetricsLog log;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      const auto body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string_view::npos) {
        log.metadata[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
      }
      continue;
    }
    if (!have_header) {
      if (trim(line) != kMetricsHeader) throw ParseError(line_no, "malformed metrics header");
      have_header = true;
      continue;
    }
    log.records.push_back(parse_record(line, line_no));
  }
  if (!have_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing metrics header");
  return log;
}

MetricsLog load_metrics(const std::filesystem::path& path) { return parse_metrics(read_file(path)); }

}  // namespace ssce
