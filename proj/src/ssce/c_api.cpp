#include "ssce/ssce.h"

#include <cstring>
#include <new>
#include <string>

#include "ssce/config.hpp"
#include "ssce/data.hpp"
#include "ssce/error.hpp"
#include "ssce/eval.hpp"
#include "ssce/gradcheck.hpp"
#include "ssce/prob_table.hpp"
#include "ssce/text_io.hpp"
#include "ssce/trainer.hpp"

struct ssce_config {
  ssce::TrainConfig value;
};

struct ssce_dataset {
  ssce::Dataset value;
};

struct ssce_trainer {
  ssce::TrainState state;
};

struct ssce_prob_table {
  ssce::ProbTable value;
};

namespace {

thread_local std::string g_last_error;

ssce_status to_status(ssce::ErrorCode code) {
  switch (code) {
    case ssce::ErrorCode::InvalidArgument:
    case ssce::ErrorCode::DegenerateGate:
    case ssce::ErrorCode::StaleCache:
      return SSCE_ERR_INVALID_ARGUMENT;
    case ssce::ErrorCode::Config:
      return SSCE_ERR_CONFIG;
    case ssce::ErrorCode::Io:
      return SSCE_ERR_IO;
    case ssce::ErrorCode::Parse:
      return SSCE_ERR_PARSE;
    case ssce::ErrorCode::Numerical:
      return SSCE_ERR_NUMERICAL;
  }
  return SSCE_ERR_INTERNAL;
}

template <typename F>
ssce_status guarded(F&& body) {
  try {
    body();
    return SSCE_OK;
  } catch (const ssce::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SSCE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SSCE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SSCE_ERR_INTERNAL;
  }
}

template <typename T>
T& deref(T* p, const char* what) {
  if (p == nullptr) throw ssce::Error(ssce::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
  return *p;
}

const char* text(const char* p, const char* what) {
  if (p == nullptr) throw ssce::Error(ssce::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
  return p;
}

void copy_out(const std::string& s, char* buffer, size_t capacity, size_t* required) {
  if (required) *required = s.size();
  if (buffer && capacity > 0) {
    const size_t n = std::min(capacity - 1, s.size());
    std::memcpy(buffer, s.data(), n);
    buffer[n] = '\0';
  }
}

std::vector<std::string> comment_lines(const char* comment) {
  std::vector<std::string> lines;
  if (!comment) return lines;
  std::string text(comment);
  size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    if (end > pos) lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return lines;
}

ssce_metric_row to_row(const ssce::MetricRecord& r) {
  ssce_metric_row row{};
  row.step = r.step;
  row.epoch = r.epoch;
  row.lr = r.lr;
  row.loss = r.loss;
  row.confident = r.confident;
  row.entropy_selected = r.entropy_selected;
  row.mean_unlabeled_weight = r.mean_unlabeled_weight;
  row.has_test_acc = r.test_acc.has_value();
  row.test_acc = r.test_acc.value_or(0.0);
  return row;
}

ssce::EvalReport from_c(const ssce_eval_report& r) {
  ssce::EvalReport out;
  out.test_accuracy = r.test_accuracy;
  out.pseudo.coverage = r.pseudo_coverage;
  if (r.has_pseudo_precision) out.pseudo.precision = r.pseudo_precision;
  out.unlabeled_count = r.unlabeled_count;
  for (size_t b = 0; b < SSCE_WEIGHT_BINS; ++b) out.weight_histogram[b] = r.weight_histogram[b];
  return out;
}

}  // namespace

extern "C" {

const char* ssce_last_error(void) { return g_last_error.c_str(); }

const char* ssce_status_string(ssce_status status) {
  switch (status) {
    case SSCE_OK:
      return "ok";
    case SSCE_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case SSCE_ERR_CONFIG:
      return "configuration error";
    case SSCE_ERR_IO:
      return "i/o error";
    case SSCE_ERR_PARSE:
      return "parse error";
    case SSCE_ERR_NUMERICAL:
      return "numerical failure";
    case SSCE_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* ssce_version(void) { return "1.0.0"; }

// ------------------------------------------------------------------- config

ssce_status ssce_config_create(const char* preset, ssce_config** out) {
  return guarded([&] {
    deref(out, "out");
    *out = new ssce_config{ssce::preset(preset ? preset : "desk")};
  });
}

void ssce_config_destroy(ssce_config* config) { delete config; }

ssce_status ssce_config_clone(const ssce_config* config, ssce_config** out) {
  return guarded([&] {
    const auto& c = deref(config, "config");
    deref(out, "out");
    *out = new ssce_config{c.value};
  });
}

ssce_status ssce_config_load_file(ssce_config* config, const char* path) {
  return guarded([&] {
    auto& c = deref(config, "config");
    const std::string contents = ssce::read_file(text(path, "path"));
    c.value = ssce::parse_config(contents, c.value);
  });
}

ssce_status ssce_config_set(ssce_config* config, const char* key, const char* value) {
  return guarded([&] {
    ssce::apply_setting(deref(config, "config").value, text(key, "key"), text(value, "value"));
  });
}

ssce_status ssce_config_get(const ssce_config* config, const char* key, char* buffer,
                            size_t capacity, size_t* required) {
  return guarded([&] {
    copy_out(ssce::get_setting(deref(config, "config").value, text(key, "key")), buffer, capacity,
             required);
  });
}

ssce_status ssce_config_validate(const ssce_config* config) {
  return guarded([&] { deref(config, "config").value.validate(); });
}

ssce_status ssce_config_to_string(const ssce_config* config, char* buffer, size_t capacity,
                                  size_t* required) {
  return guarded(
      [&] { copy_out(ssce::to_text(deref(config, "config").value), buffer, capacity, required); });
}

size_t ssce_config_key_count(void) { return ssce::config_keys().size(); }

const char* ssce_config_key_at(size_t index) {
  const auto& keys = ssce::config_keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

// ------------------------------------------------------------------ dataset

ssce_status ssce_dataset_generate(const ssce_cluster_params* params, ssce_dataset** out) {
  return guarded([&] {
    const auto& p = deref(params, "params");
    deref(out, "out");
    ssce::GaussianClusterSpec spec{p.num_classes, p.dim, p.per_class, p.cluster_sigma,
                                   p.separation, p.seed};
    *out = new ssce_dataset{ssce::generate_gaussian_clusters(spec)};
  });
}

ssce_status ssce_dataset_split(ssce_dataset* dataset, int labels_per_class, double test_fraction,
                               uint64_t seed) {
  return guarded([&] {
    ssce::split(deref(dataset, "dataset").value, labels_per_class, test_fraction, seed);
  });
}

ssce_status ssce_dataset_save_csv(const ssce_dataset* dataset, const char* path,
                                  const char* comment) {
  return guarded([&] {
    ssce::save_csv(deref(dataset, "dataset").value, text(path, "path"), comment_lines(comment));
  });
}

ssce_status ssce_dataset_save_trainer_view_csv(const ssce_dataset* dataset, const char* path,
                                               const char* comment) {
  return guarded([&] {
    ssce::save_csv(deref(dataset, "dataset").value.trainer_view(), text(path, "path"),
                   comment_lines(comment));
  });
}

ssce_status ssce_dataset_load_csv(const char* path, ssce_dataset** out) {
  return guarded([&] {
    deref(out, "out");
    ssce::Dataset ds = ssce::load_csv(text(path, "path"));
    *out = new ssce_dataset{std::move(ds)};
  });
}

ssce_status ssce_dataset_info_get(const ssce_dataset* dataset, ssce_dataset_info* out) {
  return guarded([&] {
    const auto& ds = deref(dataset, "dataset").value;
    auto& info = deref(out, "out");
    info.rows = ds.size();
    info.dim = static_cast<size_t>(ds.dim());
    info.num_classes = ds.num_classes;
    info.labeled = ds.count(ssce::Split::Labeled);
    info.unlabeled = ds.count(ssce::Split::Unlabeled);
    info.test = ds.count(ssce::Split::Test);
  });
}

void ssce_dataset_destroy(ssce_dataset* dataset) { delete dataset; }

// ------------------------------------------------------------------ trainer

ssce_status ssce_trainer_create(const ssce_config* config, const ssce_dataset* dataset,
                                ssce_trainer** out) {
  return guarded([&] {
    const auto& cfg = deref(config, "config").value;
    const auto& ds = deref(dataset, "dataset").value;
    deref(out, "out");
    *out = new ssce_trainer{ssce::init_state(cfg, static_cast<int>(ds.dim()), ds.num_classes)};
  });
}

ssce_status ssce_trainer_load_checkpoint(const char* path, ssce_trainer** out) {
  return guarded([&] {
    deref(out, "out");
    *out = new ssce_trainer{ssce::load_checkpoint(text(path, "path"))};
  });
}

ssce_status ssce_trainer_save_checkpoint(const ssce_trainer* trainer, const char* path) {
  return guarded(
      [&] { ssce::save_checkpoint(deref(trainer, "trainer").state, text(path, "path")); });
}

ssce_status ssce_trainer_run(ssce_trainer* trainer, const ssce_dataset* dataset,
                             uint64_t max_steps, const char* checkpoint_path) {
  return guarded([&] {
    auto& state = deref(trainer, "trainer").state;
    const auto data = ssce::TrainingData::from(deref(dataset, "dataset").value);
    std::function<void(const ssce::TrainState&)> on_checkpoint;
    if (checkpoint_path) {
      const std::string path = checkpoint_path;
      on_checkpoint = [path](const ssce::TrainState& s) { ssce::save_checkpoint(s, path); };
    }
    ssce::train(state, data, max_steps == 0 ? UINT64_MAX : max_steps, on_checkpoint);
  });
}

ssce_status ssce_trainer_progress(const ssce_trainer* trainer, uint64_t* step,
                                  uint64_t* total_steps) {
  return guarded([&] {
    const auto& state = deref(trainer, "trainer").state;
    if (step) *step = state.step;
    if (total_steps) *total_steps = state.config.total_steps();
  });
}

ssce_status ssce_trainer_metric_count(const ssce_trainer* trainer, size_t* count) {
  return guarded([&] { deref(count, "count") = deref(trainer, "trainer").state.history.size(); });
}

ssce_status ssce_trainer_metric_at(const ssce_trainer* trainer, size_t index,
                                   ssce_metric_row* out) {
  return guarded([&] {
    const auto& h = deref(trainer, "trainer").state.history;
    ssce::require(index < h.size(), "metric index out of range");
    deref(out, "out") = to_row(h[index]);
  });
}

ssce_status ssce_trainer_write_metrics(const ssce_trainer* trainer, const char* path,
                                       const char* comment) {
  return guarded([&] {
    ssce::save_metrics(deref(trainer, "trainer").state.history, text(path, "path"),
                       comment_lines(comment));
  });
}

ssce_status ssce_trainer_config(const ssce_trainer* trainer, ssce_config** out) {
  return guarded([&] {
    const auto& state = deref(trainer, "trainer").state;
    deref(out, "out");
    *out = new ssce_config{state.config};
  });
}

ssce_status ssce_trainer_evaluate(const ssce_trainer* trainer, const ssce_dataset* dataset,
                                  ssce_eval_report* out) {
  return guarded([&] {
    const auto& state = deref(trainer, "trainer").state;
    const auto& ds = deref(dataset, "dataset").value;
    auto& r = deref(out, "out");
    ssce::require(ds.dim() == state.input_dim, "dataset dimension does not match the model");
    const auto report = ssce::evaluate_report(state.encoder, state.bank, ds, state.config);
    r.test_accuracy = report.test_accuracy;
    r.pseudo_coverage = report.pseudo.coverage;
    r.has_pseudo_precision = report.pseudo.precision.has_value();
    r.pseudo_precision = report.pseudo.precision.value_or(0.0);
    r.unlabeled_count = report.unlabeled_count;
    for (size_t b = 0; b < SSCE_WEIGHT_BINS; ++b) r.weight_histogram[b] = report.weight_histogram[b];
  });
}

ssce_status ssce_eval_report_format(const ssce_eval_report* report, int csv, char* buffer,
                                    size_t capacity, size_t* required) {
  return guarded([&] {
    const auto r = from_c(deref(report, "report"));
    copy_out(csv ? ssce::report_csv(r) : ssce::format_report(r), buffer, capacity, required);
  });
}

void ssce_trainer_destroy(ssce_trainer* trainer) { delete trainer; }

// ---------------------------------------------------------------- gradcheck

void ssce_gradcheck_defaults(ssce_gradcheck_params* params) {
  if (!params) return;
  const ssce::GradCheckSuiteOptions d;
  params->epsilon = d.epsilon;
  params->seed = d.seed;
  params->trials = d.trials;
  params->check_ssc = d.check_ssc;
  params->check_ssc_e = d.check_ssc_e;
  params->check_encoder = d.check_encoder;
}

ssce_status ssce_gradcheck_run(const ssce_gradcheck_params* params, ssce_gradcheck_result* out) {
  return guarded([&] {
    const auto& p = deref(params, "params");
    auto& r = deref(out, "out");
    ssce::GradCheckSuiteOptions o;
    o.epsilon = p.epsilon;
    o.seed = p.seed;
    o.trials = p.trials;
    o.check_ssc = p.check_ssc != 0;
    o.check_ssc_e = p.check_ssc_e != 0;
    o.check_encoder = p.check_encoder != 0;
    const auto res = ssce::run_grad_check_suite(o);
    r = {};
    r.has_ssc = res.ssc.has_value();
    r.ssc_max_rel_error = res.ssc.value_or(0.0);
    r.has_ssc_e = res.ssc_e.has_value();
    r.ssc_e_max_rel_error = res.ssc_e.value_or(0.0);
    r.has_encoder = res.encoder.has_value();
    r.encoder_max_rel_error = res.encoder.value_or(0.0);
    r.tolerance = ssce::kGradCheckTolerance;
  });
}

// ------------------------------------------------------------- entropy gate

const char* ssce_decision_kind_name(ssce_decision_kind kind) {
  switch (kind) {
    case SSCE_DECISION_CONFIDENT:
      return "confident";
    case SSCE_DECISION_ENTROPY_SELECTED:
      return "entropy_selected";
    case SSCE_DECISION_REJECTED:
      return "rejected";
  }
  return "unknown";
}

ssce_status ssce_prob_table_load_csv(const char* path, ssce_prob_table** out) {
  return guarded([&] {
    deref(out, "out");
    *out = new ssce_prob_table{ssce::load_prob_csv(text(path, "path"))};
  });
}

ssce_status ssce_prob_table_synthetic(size_t rows, int num_classes, double sharpness,
                                      uint64_t seed, ssce_prob_table** out) {
  return guarded([&] {
    deref(out, "out");
    *out = new ssce_prob_table{ssce::synthetic_probabilities(rows, num_classes, sharpness, seed)};
  });
}

ssce_status ssce_prob_table_shape(const ssce_prob_table* table, size_t* rows, int* num_classes) {
  return guarded([&] {
    const auto& t = deref(table, "table").value;
    if (rows) *rows = t.rows.size();
    if (num_classes) *num_classes = t.num_classes;
  });
}

void ssce_prob_table_destroy(ssce_prob_table* table) { delete table; }

ssce_status ssce_gate_assign(const ssce_prob_table* table, const ssce_gate_params* params,
                             ssce_decision* out) {
  return guarded([&] {
    const auto& t = deref(table, "table").value;
    const auto& p = deref(params, "params");
    if (t.rows.empty()) return;
    deref(out, "out");
    const auto gate = ssce::EntropyGate::make(p.tau, p.tau_ent, t.num_classes, p.w_min);
    const auto decisions =
        ssce::assign_pseudo_labels(t.rows, gate, p.lambda_reject, p.entropy_gate_enabled != 0);
    for (size_t i = 0; i < decisions.size(); ++i) {
      const auto& d = decisions[i];
      out[i].sample_index = d.sample_index;
      out[i].kind = d.kind == ssce::DecisionKind::Confident         ? SSCE_DECISION_CONFIDENT
                    : d.kind == ssce::DecisionKind::EntropySelected ? SSCE_DECISION_ENTROPY_SELECTED
                                                                    : SSCE_DECISION_REJECTED;
      out[i].assigned_label = d.assigned_label;
      out[i].weight = d.weight;
      out[i].entropy = d.entropy;
      out[i].max_prob = d.max_prob;
    }
  });
}

// ------------------------------------------------------------ metrics logs

ssce_status ssce_metrics_log_summary(const char* path, ssce_log_summary* out) {
  return guarded([&] {
    const auto log = ssce::load_metrics(text(path, "path"));
    auto& s = deref(out, "out");
    s = {};
    const auto method = log.metadata.count("loss.method") ? log.metadata.at("loss.method") : "unknown";
    std::strncpy(s.method, method.c_str(), sizeof(s.method) - 1);
    s.labels_per_class = -1;
    if (auto it = log.metadata.find("data.labels_per_class"); it != log.metadata.end()) {
      if (auto v = ssce::parse_int(it->second)) s.labels_per_class = static_cast<int>(*v);
    }
    if (auto it = log.metadata.find("train.seed"); it != log.metadata.end()) {
      if (auto v = ssce::parse_u64(it->second)) s.seed = *v;
    }
    const auto acc = log.final_test_acc();
    s.has_final_test_acc = acc.has_value();
    s.final_test_acc = acc.value_or(0.0);
    s.rows = log.records.size();
  });
}

}  // extern "C"
