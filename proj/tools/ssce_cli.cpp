// ssce: command-line front end. Talks to the library only through the C API.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ssce/ssce.h"

namespace {

enum Exit { kOk = 0, kValidation = 1, kIo = 2, kNumerical = 3 };

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(ssce_status st) {
  switch (st) {
    case SSCE_OK:
      return kOk;
    case SSCE_ERR_IO:
      return kIo;
    case SSCE_ERR_NUMERICAL:
      return kNumerical;
    default:
      return kValidation;
  }
}

void check(ssce_status st) {
  if (st != SSCE_OK) throw Failure{exit_code_for(st), ssce_last_error()};
}

[[noreturn]] void fail(int code, std::string message) { throw Failure{code, std::move(message)}; }

template <class T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};
using ConfigPtr = std::unique_ptr<ssce_config, Deleter<ssce_config, ssce_config_destroy>>;
using DatasetPtr = std::unique_ptr<ssce_dataset, Deleter<ssce_dataset, ssce_dataset_destroy>>;
using TrainerPtr = std::unique_ptr<ssce_trainer, Deleter<ssce_trainer, ssce_trainer_destroy>>;
using TablePtr = std::unique_ptr<ssce_prob_table, Deleter<ssce_prob_table, ssce_prob_table_destroy>>;

template <class F>
std::string read_string(F&& call) {
  size_t n = 0;
  check(call(nullptr, 0, &n));
  std::string s(n, '\0');
  check(call(s.data(), n + 1, &n));
  return s;
}

ConfigPtr make_config(const std::string& preset) {
  ssce_config* c = nullptr;
  check(ssce_config_create(preset.c_str(), &c));
  return ConfigPtr(c);
}

std::string config_value(const ssce_config* c, const std::string& key) {
  return read_string([&](char* b, size_t cap, size_t* n) { return ssce_config_get(c, key.c_str(), b, cap, n); });
}

std::string config_text(const ssce_config* c) {
  return read_string([&](char* b, size_t cap, size_t* n) { return ssce_config_to_string(c, b, cap, n); });
}

std::string fmt(double x, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

// Shortest text that reads back as the same double.
std::string exact(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string fixed(double x, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

// Values of the presets, for --help text.
std::string preset_default(const std::string& key) {
  const ConfigPtr desk = make_config("desk");
  const ConfigPtr full = make_config("full");
  return "default: preset value (desk " + config_value(desk.get(), key) + ", full " +
         config_value(full.get(), key) + ")";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(kIo, "cannot open '" + path + "' for writing");
  out << text;
  if (!out.flush()) fail(kIo, "write failed: '" + path + "'");
}

// ------------------------------------------------------------------ gen-data

struct GenDataArgs {
  int classes = 3;
  int dim = 8;
  int per_class = 100;
  double sigma = 1.0;
  double separation = 4.0;
  int labels_per_class = 4;
  double test_fraction = 0.5;
  uint64_t seed = 0;
  std::string out;
};

int run_gen_data(const GenDataArgs& a) {
  ssce_cluster_params p{a.classes, a.dim, a.per_class, a.sigma, a.separation, a.seed};
  ssce_dataset* raw = nullptr;
  check(ssce_dataset_generate(&p, &raw));
  const DatasetPtr ds(raw);
  check(ssce_dataset_split(ds.get(), a.labels_per_class, a.test_fraction, a.seed));
  std::ostringstream comment;
  comment << "gen.classes = " << a.classes << "\ngen.dim = " << a.dim << "\ngen.per_class = " << a.per_class
          << "\ngen.sigma = " << exact(a.sigma) << "\ngen.separation = " << exact(a.separation)
          << "\ndata.labels_per_class = " << a.labels_per_class
          << "\ngen.test_fraction = " << exact(a.test_fraction) << "\ngen.seed = " << a.seed;
  check(ssce_dataset_save_csv(ds.get(), a.out.c_str(), comment.str().c_str()));
  ssce_dataset_info info{};
  check(ssce_dataset_info_get(ds.get(), &info));
  std::cout << "wrote " << a.out << ": " << info.rows << " rows, " << info.dim << " features, "
            << info.num_classes << " classes\n"
            << "labeled " << info.labeled << ", unlabeled " << info.unlabeled << ", test " << info.test << "\n";
  return kOk;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string config_file;
  std::string preset = "desk";
  std::string method;
  std::optional<int> epochs;
  std::optional<uint64_t> seed;
  std::vector<std::string> settings;
  std::string resume;
  std::string checkpoint;
  std::string metrics = "metrics.csv";
  uint64_t max_steps = 0;
};

void apply_override(ssce_config* c, const std::string& key, const std::string& value) {
  check(ssce_config_set(c, key.c_str(), value.c_str()));
}

DatasetPtr load_dataset(const std::string& path) {
  ssce_dataset* raw = nullptr;
  check(ssce_dataset_load_csv(path.c_str(), &raw));
  return DatasetPtr(raw);
}

std::string metrics_comment(const ssce_config* c, const ssce_dataset* ds, const std::string& data_path) {
  ssce_dataset_info info{};
  check(ssce_dataset_info_get(ds, &info));
  std::string text = config_text(c);
  text += "data.path = " + data_path + "\n";
  if (info.num_classes > 0 && info.labeled % static_cast<size_t>(info.num_classes) == 0) {
    text += "data.labels_per_class = " + std::to_string(info.labeled / static_cast<size_t>(info.num_classes)) + "\n";
  }
  text += "model.activation = tanh";
  return text;
}

int run_train(const TrainArgs& a) {
  const DatasetPtr ds = load_dataset(a.data);
  TrainerPtr trainer;
  if (!a.resume.empty()) {
    if (!a.config_file.empty() || !a.method.empty() || a.epochs || a.seed || !a.settings.empty()) {
      fail(kValidation, "--resume takes its configuration from the checkpoint; drop --config/--method/--epochs/--seed/--set");
    }
    ssce_trainer* raw = nullptr;
    check(ssce_trainer_load_checkpoint(a.resume.c_str(), &raw));
    trainer.reset(raw);
  } else {
    ConfigPtr cfg = make_config(a.preset);
    if (!a.config_file.empty()) check(ssce_config_load_file(cfg.get(), a.config_file.c_str()));
    if (!a.method.empty()) apply_override(cfg.get(), "loss.method", a.method);
    if (a.epochs) apply_override(cfg.get(), "train.epochs", std::to_string(*a.epochs));
    if (a.seed) apply_override(cfg.get(), "train.seed", std::to_string(*a.seed));
    for (const auto& kv : a.settings) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) fail(kValidation, "--set expects key=value, got '" + kv + "'");
      apply_override(cfg.get(), kv.substr(0, eq), kv.substr(eq + 1));
    }
    check(ssce_config_validate(cfg.get()));
    ssce_trainer* raw = nullptr;
    check(ssce_trainer_create(cfg.get(), ds.get(), &raw));
    trainer.reset(raw);
  }

  ssce_config* used_raw = nullptr;
  check(ssce_trainer_config(trainer.get(), &used_raw));
  const ConfigPtr used(used_raw);
  const std::string comment = metrics_comment(used.get(), ds.get(), a.data);
  std::cout << "# resolved configuration\n";
  std::istringstream lines(comment);
  for (std::string line; std::getline(lines, line);) std::cout << "  " << line << "\n";

  uint64_t step = 0, total = 0;
  check(ssce_trainer_progress(trainer.get(), &step, &total));
  std::cout << "training steps " << step << " -> " << total << "\n" << std::flush;
  const auto t0 = std::chrono::steady_clock::now();
  const ssce_status st =
      ssce_trainer_run(trainer.get(), ds.get(), a.max_steps, a.checkpoint.empty() ? nullptr : a.checkpoint.c_str());
  const std::string run_error = st == SSCE_OK ? "" : ssce_last_error();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "elapsed " << fixed(secs, 1) << " s\n";

  // Metrics up to the failure point are still written.
  check(ssce_trainer_write_metrics(trainer.get(), a.metrics.c_str(), comment.c_str()));
  if (st != SSCE_OK) throw Failure{exit_code_for(st), run_error};
  if (!a.checkpoint.empty()) check(ssce_trainer_save_checkpoint(trainer.get(), a.checkpoint.c_str()));

  size_t count = 0;
  check(ssce_trainer_metric_count(trainer.get(), &count));
  std::cout << "wrote " << a.metrics << " (" << count << " rows)\n";
  if (count > 0) {
    ssce_metric_row row{};
    check(ssce_trainer_metric_at(trainer.get(), count - 1, &row));
    std::cout << "final step " << row.step << " loss " << fmt(row.loss) << " lr " << fmt(row.lr);
    if (row.has_test_acc) std::cout << " test_acc " << fixed(row.test_acc);
    std::cout << "\n";
  }
  if (!a.checkpoint.empty()) std::cout << "wrote checkpoint " << a.checkpoint << "\n";
  return kOk;
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string format = "text";
  std::string out;
};

int run_eval(const EvalArgs& a) {
  ssce_trainer* raw = nullptr;
  check(ssce_trainer_load_checkpoint(a.checkpoint.c_str(), &raw));
  const TrainerPtr trainer(raw);
  const DatasetPtr ds = load_dataset(a.data);
  ssce_eval_report report{};
  check(ssce_trainer_evaluate(trainer.get(), ds.get(), &report));
  const int csv = a.format == "csv" ? 1 : 0;
  const std::string text = read_string(
      [&](char* b, size_t cap, size_t* n) { return ssce_eval_report_format(&report, csv, b, cap, n); });
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text(a.out, text);
    std::cout << "wrote " << a.out << "\n";
  }
  return kOk;
}

// ----------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  double eps = 1e-5;
  std::string variant = "all";
  uint64_t seed = 7;
  int trials = 100;
};

int run_gradcheck(const GradcheckArgs& a) {
  ssce_gradcheck_params p;
  ssce_gradcheck_defaults(&p);
  p.epsilon = a.eps;
  p.seed = a.seed;
  p.trials = a.trials;
  p.check_ssc = a.variant != "ssc-e";
  p.check_ssc_e = a.variant != "ssc";
  p.check_encoder = a.variant != "ssc";
  ssce_gradcheck_result r{};
  check(ssce_gradcheck_run(&p, &r));
  bool ok = true;
  auto line = [&](const char* name, int has, double err) {
    if (!has) {
      std::cout << name << " skipped\n";
      return;
    }
    const bool pass = err < r.tolerance;
    ok = ok && pass;
    std::cout << name << " max_rel_error " << fmt(err, 3) << (pass ? " PASS" : " FAIL") << "\n";
  };
  std::cout << "central differences, eps " << fmt(a.eps) << ", " << a.trials << " random batches, seed "
            << a.seed << ", tolerance " << fmt(r.tolerance) << "\n";
  line("ssc", r.has_ssc, r.ssc_max_rel_error);
  line("ssc-e", r.has_ssc_e, r.ssc_e_max_rel_error);
  line("encoder+ssc-e", r.has_encoder, r.encoder_max_rel_error);
  if (a.eps > 1e-3 || a.eps < 1e-7) {
    std::cout << "note: eps outside [1e-7, 1e-3]; truncation or round-off error dominates\n";
  }
  if (!ok) fail(kNumerical, "gradient check exceeded tolerance " + fmt(r.tolerance));
  return kOk;
}

// ------------------------------------------------------------------ gate-sim

struct GateSimArgs {
  std::string input;
  size_t rows = 200;
  int classes = 10;
  double sharpness = 3.0;
  uint64_t seed = 0;
  std::vector<double> tau = {0.95};
  std::vector<double> tau_ent = {0.2};
  double w_min = 0.2;
  double lambda_reject = 0.2;
  bool no_gate = false;
  std::string out;
};

int run_gate_sim(const GateSimArgs& a) {
  ssce_prob_table* raw = nullptr;
  if (!a.input.empty()) {
    check(ssce_prob_table_load_csv(a.input.c_str(), &raw));
  } else {
    check(ssce_prob_table_synthetic(a.rows, a.classes, a.sharpness, a.seed, &raw));
  }
  const TablePtr table(raw);
  size_t rows = 0;
  int classes = 0;
  check(ssce_prob_table_shape(table.get(), &rows, &classes));

  std::ostringstream os;
  os << "# source = " << (a.input.empty() ? "synthetic" : a.input) << "\n";
  if (a.input.empty()) {
    os << "# synthetic.rows = " << a.rows << "\n# synthetic.classes = " << a.classes
       << "\n# synthetic.sharpness = " << exact(a.sharpness) << "\n# synthetic.seed = " << a.seed << "\n";
  }
  os << "# gate.w_min = " << exact(a.w_min) << "\n# gate.lambda_reject = " << exact(a.lambda_reject)
     << "\n# gate.enabled = " << (a.no_gate ? "false" : "true") << "\n";
  std::vector<ssce_decision> d(rows);
  for (double tau : a.tau) {
    for (double tau_ent : a.tau_ent) {
      const ssce_gate_params g{tau, tau_ent, a.w_min, a.lambda_reject, a.no_gate ? 0 : 1};
      check(ssce_gate_assign(table.get(), &g, d.data()));
      size_t counts[3] = {0, 0, 0};
      for (const auto& x : d) ++counts[x.kind];
      const double coverage = rows == 0 ? 0.0 : static_cast<double>(counts[0] + counts[1]) / static_cast<double>(rows);
      os << "# block tau = " << exact(tau) << ", tau_ent = " << exact(tau_ent) << "\n"
         << "# confident = " << counts[0] << ", entropy_selected = " << counts[1] << ", rejected = " << counts[2]
         << ", coverage = " << exact(coverage) << "\n"
         << "tau,tau_ent,sample,kind,label,weight,entropy,max_prob\n";
      for (const auto& x : d) {
        os << exact(tau) << ',' << exact(tau_ent) << ',' << x.sample_index << ','
           << ssce_decision_kind_name(x.kind) << ',' << x.assigned_label << ',' << exact(x.weight) << ','
           << exact(x.entropy) << ',' << exact(x.max_prob) << "\n";
      }
      std::cerr << "tau " << fmt(tau) << " tau_ent " << fmt(tau_ent) << ": confident " << counts[0]
                << ", entropy_selected " << counts[1] << ", rejected " << counts[2] << ", coverage "
                << fixed(coverage) << "\n";
    }
  }
  if (a.out.empty()) {
    std::cout << os.str();
  } else {
    write_text(a.out, os.str());
    std::cout << "wrote " << a.out << " (" << a.tau.size() * a.tau_ent.size() << " blocks of " << rows
              << " rows)\n";
  }
  return kOk;
}

// ------------------------------------------------------------------- compare

struct CompareArgs {
  std::vector<std::string> logs;
  std::string csv;
};

int run_compare(const CompareArgs& a) {
  if (a.logs.size() < 2) fail(kValidation, "compare needs at least two metrics logs");
  std::vector<std::string> missing;
  for (const auto& p : a.logs) {
    if (!std::filesystem::exists(p)) missing.push_back(p);
  }
  if (!missing.empty()) {
    std::string msg = "missing metrics logs:";
    for (const auto& p : missing) msg += "\n  " + p;
    fail(kIo, msg);
  }

  // (labels_per_class, seed) -> method -> accuracy
  std::map<std::pair<int, uint64_t>, std::map<std::string, double>> cells;
  std::set<std::string> methods;
  for (const auto& p : a.logs) {
    ssce_log_summary s{};
    check(ssce_metrics_log_summary(p.c_str(), &s));
    if (!s.has_final_test_acc) fail(kValidation, p + ": log has no final test accuracy");
    auto& row = cells[{s.labels_per_class, s.seed}];
    if (row.count(s.method)) {
      fail(kValidation, p + ": duplicate entry for method " + std::string(s.method) + ", labels_per_class " +
                            std::to_string(s.labels_per_class) + ", seed " + std::to_string(s.seed));
    }
    row[s.method] = s.final_test_acc;
    methods.insert(s.method);
  }

  std::ostringstream text, csv;
  csv << "labels_per_class,seed";
  text << "labels/class  seed ";
  for (const auto& m : methods) {
    csv << ',' << m;
    char buf[32];
    std::snprintf(buf, sizeof buf, " %9s", m.c_str());
    text << buf;
  }
  csv << "\n";
  text << "\n";

  auto emit = [&](const std::string& lpc, const std::string& seed, const std::map<std::string, std::optional<double>>& v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%12s %5s ", lpc.c_str(), seed.c_str());
    text << buf;
    csv << lpc << ',' << seed;
    for (const auto& m : methods) {
      const auto it = v.find(m);
      const bool has = it != v.end() && it->second;
      std::snprintf(buf, sizeof buf, " %9s", has ? fixed(*it->second).c_str() : "-");
      text << buf;
      csv << ',' << (has ? exact(*it->second) : "");
    }
    text << "\n";
    csv << "\n";
  };

  std::map<int, std::map<std::string, std::vector<double>>> by_lpc;
  for (const auto& [key, row] : cells) {
    std::map<std::string, std::optional<double>> v;
    for (const auto& [m, acc] : row) {
      v[m] = acc;
      by_lpc[key.first][m].push_back(acc);
    }
    emit(key.first < 0 ? "?" : std::to_string(key.first), std::to_string(key.second), v);
  }
  for (const auto& [lpc, per_method] : by_lpc) {
    std::map<std::string, std::optional<double>> v;
    for (const auto& [m, accs] : per_method) {
      double sum = 0.0;
      for (double x : accs) sum += x;
      v[m] = sum / static_cast<double>(accs.size());
    }
    emit(lpc < 0 ? "?" : std::to_string(lpc), "mean", v);
  }

  std::cout << text.str();
  if (!a.csv.empty()) {
    write_text(a.csv, csv.str());
    std::cout << "wrote " << a.csv << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-weighted semi-supervised contrastive learning experiments"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(ssce_version()));

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a Gaussian-cluster dataset CSV");
  gen_cmd->add_option("--classes", gen.classes, "number of classes")->check(CLI::Range(2, 1 << 20));
  gen_cmd->add_option("--dim", gen.dim, "feature dimension")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--per-class", gen.per_class, "samples per class")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--sigma", gen.sigma, "cluster standard deviation")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--separation", gen.separation, "norm of the class means")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--labels-per-class", gen.labels_per_class, "labeled samples per class")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--test-fraction", gen.test_fraction, "fraction of the remainder held out for test")
      ->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--seed", gen.seed, "generator and split seed");
  gen_cmd->add_option("--out", gen.out, "output CSV path")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train an encoder and prototypes on a dataset CSV");
  train_cmd->add_option("--data", tr.data, "dataset CSV")->required();
  train_cmd->add_option("--preset", tr.preset, "base configuration")->check(CLI::IsMember({"desk", "full"}));
  train_cmd->add_option("--config", tr.config_file, "config file applied on top of the preset");
  train_cmd->add_option("--method", tr.method, "loss: ssc or ssc-e; " + preset_default("loss.method"))
      ->check(CLI::IsMember({"ssc", "ssc-e"}));
  train_cmd->add_option("--epochs", tr.epochs, "epochs; " + preset_default("train.epochs"));
  train_cmd->add_option("--seed", tr.seed, "training seed; " + preset_default("train.seed"));
  train_cmd->add_option("--set", tr.settings, "override any config key, key=value (repeatable)");
  train_cmd->add_option("--resume", tr.resume, "continue from a checkpoint");
  train_cmd->add_option("--checkpoint", tr.checkpoint,
                        "checkpoint path, written every train.checkpoint_every steps and at the end");
  train_cmd->add_option("--metrics", tr.metrics, "metrics CSV path");
  train_cmd->add_option("--max-steps", tr.max_steps, "stop after this many steps, 0 runs to the end");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset CSV");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "checkpoint path")->required();
  eval_cmd->add_option("--data", ev.data, "dataset CSV (unlabeled ground truth enables precision)")->required();
  eval_cmd->add_option("--format", ev.format, "report format")->check(CLI::IsMember({"text", "csv"}));
  eval_cmd->add_option("--out", ev.out, "write the report here instead of stdout");

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradients");
  gc_cmd->add_option("--eps", gc.eps, "central-difference step")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--variant", gc.variant, "all, ssc or ssc-e (the encoder check runs with ssc-e)")
      ->check(CLI::IsMember({"all", "ssc", "ssc-e"}));
  gc_cmd->add_option("--seed", gc.seed, "seed for the random batches");
  gc_cmd->add_option("--trials", gc.trials, "random batches per loss variant")->check(CLI::PositiveNumber);

  GateSimArgs gs;
  auto* gs_cmd = app.add_subcommand("gate-sim", "Run the pseudo-label gate over a table of class probabilities");
  auto* input_opt = gs_cmd->add_option("--input", gs.input, "probability CSV with header p_0,...,p_{C-1}");
  gs_cmd->add_option("--rows", gs.rows, "synthetic rows")->excludes(input_opt);
  gs_cmd->add_option("--classes", gs.classes, "synthetic class count")->excludes(input_opt)->check(CLI::Range(2, 1 << 20));
  gs_cmd->add_option("--sharpness", gs.sharpness, "synthetic score scale")->excludes(input_opt);
  gs_cmd->add_option("--seed", gs.seed, "synthetic seed")->excludes(input_opt);
  gs_cmd->add_option("--tau", gs.tau, "confidence threshold(s)")->expected(1, -1);
  gs_cmd->add_option("--tau-ent", gs.tau_ent, "entropy fraction(s)")->expected(1, -1);
  gs_cmd->add_option("--w-min", gs.w_min, "weight at the entropy bound");
  gs_cmd->add_option("--lambda-reject", gs.lambda_reject, "weight of rejected samples");
  gs_cmd->add_flag("--no-gate", gs.no_gate, "threshold rule only");
  gs_cmd->add_option("--out", gs.out, "decisions CSV path (stdout when omitted)");

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Tabulate final accuracies from metrics logs");
  cmp_cmd->add_option("logs", cmp.logs, "metrics CSV files")->required();
  cmp_cmd->add_option("--csv", cmp.csv, "also write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  try {
    if (*gen_cmd) return run_gen_data(gen);
    if (*train_cmd) return run_train(tr);
    if (*eval_cmd) return run_eval(ev);
    if (*gc_cmd) return run_gradcheck(gc);
    if (*gs_cmd) return run_gate_sim(gs);
    if (*cmp_cmd) return run_compare(cmp);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  }
  return kValidation;
}
