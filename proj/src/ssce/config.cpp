#include "ssce/config.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "ssce/error.hpp"
#include "ssce/text_io.hpp"

namespace ssce {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw Error(ErrorCode::Config, "invalid value '" + std::string(value) + "' for " +
                                     std::string(key) + " (expected " + std::string(want) + ")");
}

double to_real(std::string_view key, std::string_view v) {
  const auto x = parse_double(v);
  if (!x || !std::isfinite(*x)) bad_value(key, v, "a real number");
  return *x;
}

int to_int(std::string_view key, std::string_view v) {
  const auto x = parse_int(v);
  if (!x || *x < INT32_MIN || *x > INT32_MAX) bad_value(key, v, "an integer");
  return static_cast<int>(*x);
}

bool to_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

struct Field {
  std::string key;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

Field real_field(std::string key, double TrainConfig::*member) {
  return {key, [key, member](TrainConfig& c, std::string_view v) { c.*member = to_real(key, v); },
          [member](const TrainConfig& c) { return format_double(c.*member); }};
}

Field int_field(std::string key, int TrainConfig::*member) {
  return {key, [key, member](TrainConfig& c, std::string_view v) { c.*member = to_int(key, v); },
          [member](const TrainConfig& c) { return std::to_string(c.*member); }};
}

Field gate_real(std::string key, double GateConfig::*member) {
  return {key,
          [key, member](TrainConfig& c, std::string_view v) { c.gate.*member = to_real(key, v); },
          [member](const TrainConfig& c) { return format_double(c.gate.*member); }};
}

Field gate_bool(std::string key, bool GateConfig::*member) {
  return {key,
          [key, member](TrainConfig& c, std::string_view v) { c.gate.*member = to_bool(key, v); },
          [member](const TrainConfig& c) { return from_bool(c.gate.*member); }};
}

Field augment_real(std::string key, double AugmentationPolicy::*member) {
  return {key,
          [key, member](TrainConfig& c, std::string_view v) { c.augment.*member = to_real(key, v); },
          [member](const TrainConfig& c) { return format_double(c.augment.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"model.hidden",
       [](TrainConfig& c, std::string_view v) {
         std::vector<int> widths;
         if (!trim(v).empty()) {
           for (auto part : split_view(v, ',')) {
             const int w = to_int("model.hidden", part);
             if (w < 1) bad_value("model.hidden", v, "positive widths");
             widths.push_back(w);
           }
         }
         c.hidden = std::move(widths);
       },
       [](const TrainConfig& c) {
         std::string s;
         for (std::size_t i = 0; i < c.hidden.size(); ++i) {
           if (i) s += ',';
           s += std::to_string(c.hidden[i]);
         }
         return s;
       }},
      int_field("model.embedding_dim", &TrainConfig::embedding_dim),
      {"loss.method",
       [](TrainConfig& c, std::string_view v) { c.method = parse_loss_variant(trim(v)); },
       [](const TrainConfig& c) { return std::string(to_string(c.method)); }},
      real_field("loss.temperature", &TrainConfig::temperature),
      gate_bool("gate.enabled", &GateConfig::enabled),
      gate_real("gate.tau", &GateConfig::tau),
      gate_real("gate.tau_ent", &GateConfig::tau_ent),
      gate_real("gate.w_min", &GateConfig::w_min),
      gate_real("gate.lambda_reject", &GateConfig::lambda_reject),
      gate_real("gate.t_prime", &GateConfig::t_prime),
      gate_bool("gate.positives_only", &GateConfig::positives_only),
      augment_real("augment.weak_sigma", &AugmentationPolicy::weak_noise_sigma),
      augment_real("augment.strong_sigma", &AugmentationPolicy::strong_noise_sigma),
      augment_real("augment.strong_dropout", &AugmentationPolicy::strong_dropout_prob),
      real_field("optim.eta0", &TrainConfig::eta0),
      real_field("optim.momentum", &TrainConfig::momentum),
      int_field("train.batch_size", &TrainConfig::batch_size),
      int_field("train.mu", &TrainConfig::mu),
      int_field("train.epochs", &TrainConfig::epochs),
      int_field("train.steps_per_epoch", &TrainConfig::steps_per_epoch),
      real_field("train.gate_cutoff_fraction", &TrainConfig::gate_cutoff_fraction),
      {"train.seed",
       [](TrainConfig& c, std::string_view v) {
         const auto x = parse_u64(v);
         if (!x) bad_value("train.seed", v, "an unsigned integer");
         c.seed = *x;
       },
       [](const TrainConfig& c) { return std::to_string(c.seed); }},
      int_field("train.eval_every", &TrainConfig::eval_every),
      int_field("train.checkpoint_every", &TrainConfig::checkpoint_every),
  };
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw Error(ErrorCode::Config, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

void TrainConfig::validate() const {
  auto check = [](bool ok, const std::string& what) { require(ok, what, ErrorCode::Config); };
  check(embedding_dim >= 1, "model.embedding_dim must be >= 1");
  check(temperature > 0.0, "loss.temperature must be > 0");
  check(gate.tau > 0.0 && gate.tau <= 1.0, "gate.tau must lie in (0, 1]");
  check(gate.tau_ent > 0.0 && gate.tau_ent <= 1.0, "gate.tau_ent must lie in (0, 1]");
  check(gate.w_min >= 0.0 && gate.w_min <= 1.0, "gate.w_min must lie in [0, 1]");
  check(gate.lambda_reject >= 0.0 && gate.lambda_reject <= 1.0,
        "gate.lambda_reject must lie in [0, 1]");
  check(gate.t_prime > 0.0, "gate.t_prime must be > 0");
  check(augment.weak_noise_sigma >= 0.0 && augment.weak_noise_sigma <= augment.strong_noise_sigma,
        "augment: need 0 <= weak_sigma <= strong_sigma");
  check(augment.strong_dropout_prob >= 0.0 && augment.strong_dropout_prob < 1.0,
        "augment.strong_dropout must lie in [0, 1)");
  check(eta0 >= 0.0, "optim.eta0 must be >= 0");
  check(momentum >= 0.0 && momentum < 1.0, "optim.momentum must lie in [0, 1)");
  check(batch_size >= 1, "train.batch_size must be >= 1");
  check(mu >= 1, "train.mu must be >= 1");
  check(epochs >= 0, "train.epochs must be >= 0");
  check(steps_per_epoch >= 1, "train.steps_per_epoch must be >= 1");
  check(gate_cutoff_fraction > 0.0 && gate_cutoff_fraction <= 1.0,
        "train.gate_cutoff_fraction must lie in (0, 1]");
  check(eval_every >= 0, "train.eval_every must be >= 0");
  check(checkpoint_every >= 0, "train.checkpoint_every must be >= 0");
}

bool TrainConfig::operator==(const TrainConfig& o) const { return to_text(*this) == to_text(o); }

TrainConfig full_preset() { return TrainConfig{}; }

TrainConfig desk_preset() {
  TrainConfig c;
  c.hidden = {64, 64};
  c.embedding_dim = 16;
  c.batch_size = 12;
  c.mu = 4;
  c.epochs = 20;
  c.steps_per_epoch = 50;
  c.eval_every = 50;
  c.gate.tau_ent = 0.4;
  c.gate.t_prime = 0.2;
  return c;
}

TrainConfig preset(std::string_view name) {
  if (name == "full") return full_preset();
  if (name == "desk") return desk_preset();
  throw Error(ErrorCode::Config, "unknown preset '" + std::string(name) + "' (full, desk)");
}

std::string_view to_string(LossVariant variant) {
  return variant == LossVariant::Ssc ? "ssc" : "ssc-e";
}

LossVariant parse_loss_variant(std::string_view text) {
  if (text == "ssc") return LossVariant::Ssc;
  if (text == "ssc-e") return LossVariant::SscE;
  throw Error(ErrorCode::Config, "unknown loss method '" + std::string(text) + "' (ssc, ssc-e)");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void apply_setting(TrainConfig& config, std::string_view key, std::string_view value) {
  find_field(trim(key)).set(config, trim(value));
}

std::string get_setting(const TrainConfig& config, std::string_view key) {
  return find_field(trim(key)).get(config);
}

TrainConfig parse_config(std::string_view text, TrainConfig base) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::Config,
                  "line " + std::to_string(line_no) + ": expected 'section.key = value'");
    }
    try {
      apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  base.validate();
  return base;
}

std::vector<std::string> to_lines(const TrainConfig& config) {
  std::vector<std::string> lines;
  for (const auto& f : fields()) lines.push_back(f.key + " = " + f.get(config));
  return lines;
}

std::string to_text(const TrainConfig& config) {
  std::string s;
  for (const auto& line : to_lines(config)) s += line + '\n';
  return s;
}

}  // namespace ssce
