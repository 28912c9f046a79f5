// Drives the installed command-line tool end to end.

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "ssce/data.hpp"
#include "ssce/text_io.hpp"
#include "ssce/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "ssce_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

Run run(const std::string& args) {
  const std::string err_file = path("stderr.txt");
  const std::string cmd = std::string(SSCE_CLI_PATH) + " " + args + " 2>" + err_file;
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = ssce::read_file(err_file);
  return r;
}

std::string slurp(const std::string& p) { return ssce::read_file(p); }

std::string data_rows(const std::string& text) {
  std::string out;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    const std::string line = text.substr(start, end - start);
    if (!line.empty() && line[0] != '#') out += line + "\n";
    start = end + 1;
  }
  return out;
}

const std::string kTiny =
    "--set model.hidden=8 --set model.embedding_dim=4 --set train.batch_size=4 --set train.mu=2 "
    "--set train.steps_per_epoch=5 --set train.eval_every=5 --epochs 3";

const std::string& tiny_data() {
  static const std::string p = [] {
    const std::string file = path("tiny.csv");
    const Run r = run("gen-data --classes 3 --dim 5 --per-class 30 --labels-per-class 4 --test-fraction 0.3 "
                      "--seed 21 --out " + file);
    REQUIRE(r.code == 0);
    return file;
  }();
  return p;
}

}  // namespace

TEST_CASE("gen-data") {
  const Run a = run("gen-data --classes 3 --per-class 100 --labels-per-class 4 --seed 5 --out " + path("g1.csv"));
  REQUIRE(a.code == 0);
  CHECK(a.out.find("300 rows") != std::string::npos);
  const Run b = run("gen-data --classes 3 --per-class 100 --labels-per-class 4 --seed 5 --out " + path("g2.csv"));
  REQUIRE(b.code == 0);
  CHECK(slurp(path("g1.csv")) == slurp(path("g2.csv")));

  const ssce::Dataset ds = ssce::load_csv(path("g1.csv"));
  CHECK(ds.size() == 300);
  CHECK(ds.count(ssce::Split::Labeled) == 12);
  CHECK(slurp(path("g1.csv")).find("# data.labels_per_class = 4") != std::string::npos);

  CHECK(run("gen-data --classes 1 --out " + path("g3.csv")).code == 1);
  CHECK(run("gen-data --per-class 2 --labels-per-class 4 --out " + path("g3.csv")).code == 1);
  CHECK(run("gen-data --out /nonexistent-dir/x.csv").code == 2);
  CHECK(run("gen-data --bogus 1 --out " + path("g3.csv")).code == 1);
  CHECK(run("gen-data").code == 1);
}

TEST_CASE("help lists defaults") {
  const Run top = run("--help");
  CHECK(top.code == 0);
  for (const char* cmd : {"gen-data", "train", "eval", "gradcheck", "gate-sim", "compare"}) {
    CHECK(top.out.find(cmd) != std::string::npos);
  }
  const Run gen = run("gen-data --help");
  CHECK(gen.out.find("--separation") != std::string::npos);
  CHECK(gen.out.find("[4]") != std::string::npos);
  const Run train = run("train --help");
  CHECK(train.out.find("desk 20, full 256") != std::string::npos);
  CHECK(train.out.find("[desk]") != std::string::npos);
  const Run gs = run("gate-sim --help");
  CHECK(gs.out.find("[0.95]") != std::string::npos);
}

TEST_CASE("train writes reproducible, self-describing metrics") {
  const std::string data = tiny_data();
  const Run a = run("train --data " + data + " " + kTiny + " --metrics " + path("m1.csv"));
  REQUIRE(a.code == 0);
  CHECK(a.out.find("loss.method = ssc-e") != std::string::npos);
  CHECK(a.out.find("test_acc") != std::string::npos);
  const Run b = run("train --data " + data + " " + kTiny + " --metrics " + path("m2.csv"));
  REQUIRE(b.code == 0);
  const std::string m1 = slurp(path("m1.csv"));
  CHECK(m1 == slurp(path("m2.csv")));
  CHECK(m1.find("# train.epochs = 3") != std::string::npos);
  CHECK(m1.find("# data.labels_per_class = 4") != std::string::npos);
  const ssce::MetricsLog log = ssce::load_metrics(path("m1.csv"));
  CHECK(log.records.size() == 15);
  CHECK(log.final_test_acc().has_value());

  SUBCASE("zero epochs") {
    const Run z = run("train --data " + data + " --epochs 0 --metrics " + path("m0.csv"));
    CHECK(z.code == 0);
    CHECK(ssce::load_metrics(path("m0.csv")).records.empty());
  }

  SUBCASE("uniform weights make the two losses identical") {
    const std::string flat = " --set gate.enabled=false --set gate.lambda_reject=1 --metrics ";
    REQUIRE(run("train --data " + data + " " + kTiny + " --method ssc" + flat + path("u1.csv")).code == 0);
    REQUIRE(run("train --data " + data + " " + kTiny + " --method ssc-e" + flat + path("u2.csv")).code == 0);
    CHECK(data_rows(slurp(path("u1.csv"))) == data_rows(slurp(path("u2.csv"))));
  }

  SUBCASE("interrupted and resumed run matches") {
    const std::string ck = path("ck.txt");
    REQUIRE(run("train --data " + data + " " + kTiny + " --max-steps 7 --checkpoint " + ck + " --metrics " +
                path("r0.csv")).code == 0);
    const Run r = run("train --data " + data + " --resume " + ck + " --metrics " + path("r1.csv"));
    REQUIRE(r.code == 0);
    CHECK(data_rows(slurp(path("r1.csv"))) == data_rows(m1));
    CHECK(run("train --data " + data + " --resume " + ck + " --epochs 4").code == 1);
  }

  SUBCASE("errors") {
    CHECK(run("train --data /nonexistent.csv").code == 2);
    CHECK(run("train --data " + data + " --set no.such=1").code == 1);
    CHECK(run("train --data " + data + " --set gate.tau").code == 1);
    CHECK(run("train --data " + data + " --method simclr").code == 1);
    CHECK(run("train --data " + data + " --config /nonexistent.conf").code == 2);
    const Run blow = run("train --data " + data + " " + kTiny +
                         " --set optim.eta0=1e300 --set optim.momentum=0 --metrics " + path("nan.csv"));
    CHECK(blow.code == 3);
    CHECK(blow.err.find("error:") != std::string::npos);
  }
}

TEST_CASE("desk preset learns the separable fixture") {
  const std::string data = path("sep.csv");
  REQUIRE(run("gen-data --classes 3 --dim 8 --per-class 200 --separation 4 --sigma 0.4 --seed 3 --out " + data)
              .code == 0);
  const Run r = run("train --data " + data + " --metrics " + path("sep_metrics.csv") + " --checkpoint " +
                    path("sep_ck.txt"));
  REQUIRE(r.code == 0);
  const auto acc = ssce::load_metrics(path("sep_metrics.csv")).final_test_acc();
  REQUIRE(acc.has_value());
  CHECK(*acc >= 0.9);

  const Run text = run("eval --checkpoint " + path("sep_ck.txt") + " --data " + data);
  REQUIRE(text.code == 0);
  CHECK(text.out.find("test_accuracy") != std::string::npos);
  CHECK(text.out.find("pseudo_precision") != std::string::npos);
  const Run csv = run("eval --checkpoint " + path("sep_ck.txt") + " --data " + data + " --format csv --out " +
                      path("eval.csv"));
  REQUIRE(csv.code == 0);
  CHECK(slurp(path("eval.csv")).find("test_accuracy") != std::string::npos);
  CHECK(run("eval --checkpoint /nonexistent --data " + data).code == 2);
}

TEST_CASE("gradcheck") {
  const Run ok = run("gradcheck --trials 20");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("ssc max_rel_error") != std::string::npos);
  CHECK(ok.out.find("encoder+ssc-e max_rel_error") != std::string::npos);
  CHECK(ok.out.find("FAIL") == std::string::npos);

  const Run only = run("gradcheck --trials 5 --variant ssc");
  CHECK(only.code == 0);
  CHECK(only.out.find("ssc-e skipped") != std::string::npos);

  const Run coarse = run("gradcheck --trials 20 --eps 1e-2");
  CHECK(coarse.out.find("max_rel_error") != std::string::npos);
  CHECK(coarse.out.find("note: eps outside") != std::string::npos);
  CHECK((coarse.code == 0 || coarse.code == 3));
}

TEST_CASE("gate-sim") {
  SUBCASE("one-hot rows are all confident") {
    std::ofstream(path("onehot.csv")) << "p_0,p_1,p_2\n1,0,0\n0,1,0\n0,0,1\n";
    const Run r = run("gate-sim --input " + path("onehot.csv") + " --tau 0.5 0.9 0.99");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("rejected") == r.out.find("rejected = 0"));
    CHECK(r.out.find(",entropy_selected,") == std::string::npos);
  }
  SUBCASE("uniform rows are all rejected") {
    std::ofstream(path("uniform.csv")) << "p_0,p_1\n0.5,0.5\n0.5,0.5\n";
    const Run r = run("gate-sim --input " + path("uniform.csv") + " --tau 0.6 --tau-ent 1.0");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("confident = 1") == std::string::npos);
    CHECK(r.out.find("coverage = 0\n") != std::string::npos);
  }
  SUBCASE("coverage grows with tau_ent") {
    const Run r = run("gate-sim --rows 500 --classes 10 --sharpness 3 --seed 4 --tau-ent 0.1 0.2 0.4 --out " +
                      path("sweep.csv"));
    REQUIRE(r.code == 0);
    const std::string text = slurp(path("sweep.csv"));
    std::vector<double> cov;
    for (std::size_t at = text.find("coverage = "); at != std::string::npos;
         at = text.find("coverage = ", at + 1)) {
      cov.push_back(std::stod(text.substr(at + 11)));
    }
    REQUIRE(cov.size() == 3);
    CHECK(cov[0] <= cov[1]);
    CHECK(cov[1] <= cov[2]);
    CHECK(cov[2] > cov[0]);
    CHECK(run("gate-sim --rows 500 --classes 10 --sharpness 3 --seed 4 --tau-ent 0.1 0.2 0.4 --out " +
              path("sweep2.csv")).code == 0);
    CHECK(slurp(path("sweep2.csv")) == text);
  }
  SUBCASE("malformed input names the line") {
    std::ofstream(path("bad.csv")) << "p_0,p_1\n0.5,0.5\n0.5,0.5\n0.2,0.2\n";
    const Run r = run("gate-sim --input " + path("bad.csv"));
    CHECK(r.code == 1);
    CHECK(r.err.find("line 4") != std::string::npos);
    CHECK(run("gate-sim --input /nonexistent.csv").code == 2);
  }
}

TEST_CASE("compare") {
  const std::string data = tiny_data();
  std::string logs;
  for (int seed = 0; seed < 5; ++seed) {
    for (const char* m : {"ssc", "ssc-e"}) {
      const std::string out = path(std::string("cmp_") + m + "_" + std::to_string(seed) + ".csv");
      REQUIRE(run("train --data " + data + " " + kTiny + " --method " + m + " --seed " + std::to_string(seed) +
                  " --metrics " + out).code == 0);
      logs += " " + out;
    }
  }
  const Run r = run("compare" + logs + " --csv " + path("table.csv"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mean") != std::string::npos);
  CHECK(r.out.find("ssc-e") != std::string::npos);
  const std::string csv = slurp(path("table.csv"));
  CHECK(csv.rfind("labels_per_class,seed,ssc,ssc-e\n", 0) == 0);
  CHECK(csv.find("\n4,4,") != std::string::npos);
  CHECK(csv.find("\n4,mean,") != std::string::npos);

  const Run missing = run("compare " + path("cmp_ssc_0.csv") + " " + path("nope1.csv") + " " + path("nope2.csv"));
  CHECK(missing.code == 2);
  CHECK(missing.err.find("nope1.csv") != std::string::npos);
  CHECK(missing.err.find("nope2.csv") != std::string::npos);
  CHECK(run("compare " + path("cmp_ssc_0.csv")).code == 1);
  CHECK(run("compare " + path("cmp_ssc_0.csv") + " " + path("cmp_ssc_0.csv")).code == 1);
}
