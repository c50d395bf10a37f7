#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "orl/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = orl::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("orl_cli_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

const char* kTinyGenConfig = R"({
  "n_classes": 4,
  "n_samples": 60,
  "zipf_exponent": 1.0,
  "labels_per_sample": [1, 2],
  "feature_dim": 8,
  "grid_size": 2,
  "noise_sigma": 0.02,
  "seed": 5
})";

}  // namespace

TEST_CASE("gen writes a dataset and is byte-deterministic per seed") {
  TempDir dir("gen");
  write_text(dir.file("gen.json"), kTinyGenConfig);

  const CliResult first =
      run({"gen", "--config", dir.file("gen.json"), "--out", dir.file("a.orldata")});
  REQUIRE(first.code == 0);
  CHECK(first.out.find("samples 60") != std::string::npos);

  const CliResult second =
      run({"gen", "--config", dir.file("gen.json"), "--out", dir.file("b.orldata")});
  REQUIRE(second.code == 0);
  CHECK(read_bytes(dir.file("a.orldata")) == read_bytes(dir.file("b.orldata")));

  // an explicit different seed changes the bytes
  const CliResult third = run(
      {"gen", "--config", dir.file("gen.json"), "--out", dir.file("c.orldata"), "--seed", "6"});
  REQUIRE(third.code == 0);
  CHECK(read_bytes(dir.file("a.orldata")) != read_bytes(dir.file("c.orldata")));
}

TEST_CASE("gen rejects infeasible configs with exit code 1") {
  TempDir dir("gen_bad");
  write_text(dir.file("gen.json"), R"({"n_classes": 2, "labels_per_sample": [1, 5]})");
  const CliResult result =
      run({"gen", "--config", dir.file("gen.json"), "--out", dir.file("x.orldata")});
  CHECK(result.code == 1);
  CHECK(result.err.find("error") != std::string::npos);
}

TEST_CASE("train then eval round trip on a toy dataset") {
  TempDir dir("train");
  write_text(dir.file("gen.json"), kTinyGenConfig);
  REQUIRE(run({"gen", "--config", dir.file("gen.json"), "--out", dir.file("d.orldata")}).code ==
          0);

  const CliResult trained = run({"train", "--data", dir.file("d.orldata"), "--strategy", "pla",
                                 "--epochs", "40", "--batch-size", "8", "--lr", "0.02",
                                 "--seed", "1", "--hidden-dim", "16", "--embed-dim", "8",
                                 "--val-fraction", "0", "--out", dir.file("run")});
  REQUIRE(trained.code == 0);
  CHECK(fs::exists(dir.file("run") + "/model.orlmodel"));
  CHECK(fs::exists(dir.file("run") + "/loss.csv"));

  // loss curve trends down on this overfit-able toy set
  const auto lines = read_lines(dir.file("run") + "/loss.csv");
  REQUIRE(lines.size() > 20);
  CHECK(lines[0] == "iteration,loss");
  auto loss_of = [&](std::size_t i) {
    const std::string& line = lines[i];
    return std::stod(line.substr(line.find(',') + 1));
  };
  double early = 0.0, late = 0.0;
  for (std::size_t i = 1; i <= 5; ++i) early += loss_of(i);
  for (std::size_t i = lines.size() - 5; i < lines.size(); ++i) late += loss_of(i);
  CHECK(late < early);

  const CliResult evaluated = run({"eval", "--data", dir.file("d.orldata"), "--model",
                                   dir.file("run") + "/model.orlmodel", "--out",
                                   dir.file("eval")});
  REQUIRE(evaluated.code == 0);
  const auto metric_lines = read_lines(dir.file("eval") + "/metrics.csv");
  REQUIRE(!metric_lines.empty());
  CHECK(metric_lines[0] == "metric,value");
  CHECK(metric_lines[1].rfind("c_precision,", 0) == 0);
  const auto per_class = read_lines(dir.file("eval") + "/per_class.csv");
  CHECK(per_class[0] == "class,name,true_positives,predicted,actual,precision,recall,defined");
}

TEST_CASE("bad train invocations exit with code 1") {
  TempDir dir("train_bad");
  write_text(dir.file("gen.json"), kTinyGenConfig);
  REQUIRE(run({"gen", "--config", dir.file("gen.json"), "--out", dir.file("d.orldata")}).code ==
          0);
  CHECK(run({"train", "--data", dir.file("d.orldata"), "--strategy", "sideways"}).code == 1);
  CHECK(run({"train", "--data", dir.file("d.orldata"), "--epochs", "0"}).code == 1);
  CHECK(run({"train"}).code == 1);  // missing --data
}

TEST_CASE("eval with a missing checkpoint exits with code 2") {
  TempDir dir("eval_bad");
  write_text(dir.file("gen.json"), kTinyGenConfig);
  REQUIRE(run({"gen", "--config", dir.file("gen.json"), "--out", dir.file("d.orldata")}).code ==
          0);
  const CliResult result = run({"eval", "--data", dir.file("d.orldata"), "--model",
                                dir.file("missing.orlmodel"), "--out", dir.file("eval")});
  CHECK(result.code == 2);
}

TEST_CASE("align reproduces the mla/pla divergence fixture") {
  TempDir dir("align");
  // rows: A, B, end; columns: three steps
  write_text(dir.file("matrix.txt"),
             "# classes x steps, last row is the end token\n"
             "0.4 0.01 0.0\n"
             "0.5 0.6 0.0\n"
             "0.1 0.39 1.0\n");
  const CliResult both =
      run({"align", "--matrix", dir.file("matrix.txt"), "--labels", "0,1", "--mode", "both"});
  REQUIRE(both.code == 0);
  CHECK(both.out.find("mla: order 0 1 <end>, loss 1.427116") != std::string::npos);
  CHECK(both.out.find("pla: order 1 0 <end>, loss 5.298317") != std::string::npos);

  const CliResult just_mla =
      run({"align", "--matrix", dir.file("matrix.txt"), "--labels", "0,1", "--mode", "mla"});
  REQUIRE(just_mla.code == 0);
  CHECK(just_mla.out.find("pla:") == std::string::npos);

  // identity-like matrix: both modes agree
  write_text(dir.file("sharp.txt"),
             "0.9 0.05 0.0\n"
             "0.05 0.9 0.0\n"
             "0.05 0.05 1.0\n");
  const CliResult sharp =
      run({"align", "--matrix", dir.file("sharp.txt"), "--labels", "0,1", "--mode", "both"});
  REQUIRE(sharp.code == 0);
  CHECK(sharp.out.find("mla: order 0 1 <end>") != std::string::npos);
  CHECK(sharp.out.find("pla: order 0 1 <end>") != std::string::npos);
}

TEST_CASE("align rejects malformed matrices with a line number") {
  TempDir dir("align_bad");
  write_text(dir.file("matrix.txt"), "0.5 0.5\n0.5 oops\n");
  const CliResult result =
      run({"align", "--matrix", dir.file("matrix.txt"), "--labels", "0", "--mode", "mla"});
  CHECK(result.code == 1);
  CHECK(result.err.find(":2:") != std::string::npos);

  write_text(dir.file("ragged.txt"), "0.5 0.5\n0.5\n");
  CHECK(run({"align", "--matrix", dir.file("ragged.txt"), "--labels", "0"}).code == 1);
}

TEST_CASE("compare emits one combined row per strategy, reproducibly") {
  TempDir dir("compare");
  write_text(dir.file("gen.json"), kTinyGenConfig);
  REQUIRE(run({"gen", "--config", dir.file("gen.json"), "--out", dir.file("d.orldata")}).code ==
          0);
  const std::string spec = std::string(R"({
    "dataset": ")") + dir.file("d.orldata") + R"(",
    "strategies": ["frequent_first", "pla"],
    "train": {"epochs": 4, "batch_size": 8, "learning_rate": 0.02, "seed": 2,
              "hidden_dim": 12, "embed_dim": 8, "validation_fraction": 0.2}
  })";
  write_text(dir.file("exp.json"), spec);

  const CliResult first =
      run({"compare", "--config", dir.file("exp.json"), "--out", dir.file("out1")});
  REQUIRE(first.code == 0);
  const auto lines = read_lines(dir.file("out1") + "/combined.csv");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] ==
        "strategy,c_f1,o_f1,duplicate_ratio,order_rigidness,final_loss,alignment_ms");
  CHECK(lines[1].rfind("frequent_first,", 0) == 0);
  CHECK(lines[2].rfind("pla,", 0) == 0);
  CHECK(fs::exists(dir.file("out1") + "/loss_frequent_first.csv"));
  CHECK(fs::exists(dir.file("out1") + "/loss_pla.csv"));

  const CliResult second =
      run({"compare", "--config", dir.file("exp.json"), "--out", dir.file("out2")});
  REQUIRE(second.code == 0);
  const auto again = read_lines(dir.file("out2") + "/combined.csv");
  REQUIRE(again.size() == lines.size());
  // deterministic except the wall-clock alignment_ms column
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto strip_timing = [](const std::string& line) {
      return line.substr(0, line.rfind(','));
    };
    CHECK(strip_timing(lines[i]) == strip_timing(again[i]));
  }
  CHECK(read_bytes(dir.file("out1") + "/loss_pla.csv") ==
        read_bytes(dir.file("out2") + "/loss_pla.csv"));

  write_text(dir.file("empty.json"), R"({"dataset": "x", "strategies": []})");
  CHECK(run({"compare", "--config", dir.file("empty.json")}).code == 1);
}

TEST_CASE("unknown subcommands and help behave") {
  CHECK(run({"frobnicate"}).code == 1);
  const CliResult help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("gen") != std::string::npos);
}
