#include <algorithm>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "flipguard/attack.hpp"
#include "flipguard/dataset.hpp"
#include "flipguard/experiments.hpp"
#include "flipguard/io.hpp"
#include "support.hpp"

using namespace flipguard;
using flipguard::testing::from_rows;
using flipguard::testing::make_blobs;
using flipguard::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "flipguard");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

const std::string kSource = std::string(FLIPGUARD_SOURCE_DIR) + "/data/raw/breast_cancer.csv";

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run({}).code == cli::kUsageError);
  CHECK(run({"nonsense"}).code == cli::kUsageError);
  CHECK(run({"attack", "--train"}).code == cli::kUsageError);
  CHECK(run({"attack", "--train", "/nonexistent.csv", "--val", "/nonexistent.csv", "-p", "1", "--out", "/tmp"}).code ==
        cli::kDataError);
  CHECK(run({"fetch", "unknown-dataset"}).code == cli::kUsageError);
  CHECK(run({"--help"}).code == cli::kOk);
}

TEST_CASE("help lists defaults") {
  const auto r = run({"experiment", "--help"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("--lr FLOAT [0.01]") != std::string::npos);
  CHECK(r.out.find("--epochs INT [100]") != std::string::npos);
  CHECK(r.out.find("--eta FLOAT [0.5]") != std::string::npos);
}

TEST_CASE("config file expansion") {
  TempDir dir("cfg");
  write_file_atomic(dir / "c.cfg", "# comment\nrepetitions = 3\n\nseed=5 # trailing\n[ignored]\n");
  const auto args = cli::expand_config_file(
      {"flipguard", "experiment", "--config", (dir / "c.cfg").string(), "--seed", "9"});
  CHECK(args == std::vector<std::string>{"flipguard", "experiment", "--repetitions=3", "--seed", "9"});
  write_file_atomic(dir / "bad.cfg", "novalue\n");
  CHECK(run({"experiment", "--config", (dir / "bad.cfg").string(), "--out", "x"}).code == cli::kUsageError);
}

TEST_CASE("fetch converts and is idempotent") {
  TempDir dir("fetch");
  const auto out = dir.path().string();
  auto r = run({"fetch", "breastcancer", "--source", kSource, "--out", out});
  REQUIRE(r.code == cli::kOk);
  const auto csv = read_text_file(dir / "breastcancer.csv");
  CHECK(line_count(csv) == 569);
  const auto first = csv.substr(0, csv.find('\n'));
  CHECK(std::count(first.begin(), first.end(), ',') == 30);
  CHECK(std::filesystem::exists(dir / "SHA256SUMS"));

  r = run({"fetch", "breastcancer", "--source", kSource, "--out", out});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("up to date") != std::string::npos);

  write_file_atomic(dir / "breastcancer.csv", "1,2,+1\n");
  CHECK(run({"fetch", "breastcancer", "--source", kSource, "--out", out}).code == cli::kDataError);
  CHECK(run({"fetch", "breastcancer", "--source", kSource, "--out", out, "--force"}).code == cli::kOk);
  CHECK(read_text_file(dir / "breastcancer.csv") == csv);
}

TEST_CASE("attack subcommand") {
  TempDir dir("attack");
  write_canonical_csv(dir / "train.csv", make_blobs(4, 2, 3.0, 1.0, 101));
  write_canonical_csv(dir / "val.csv", make_blobs(10, 2, 3.0, 1.0, 202));
  const auto train = (dir / "train.csv").string();
  const auto val = (dir / "val.csv").string();

  SUBCASE("fraction 0 leaves the data unchanged") {
    REQUIRE(run({"attack", "--train", train, "--val", val, "--fraction", "0", "--out", (dir / "f0").string()}).code ==
            cli::kOk);
    CHECK(read_text_file(dir / "f0" / "poisoned.csv") == read_text_file(train));
    CHECK(read_text_file(dir / "f0" / "flips.txt").empty());
  }
  SUBCASE("random strategy is repeatable") {
    for (const char* name : {"r1", "r2"}) {
      REQUIRE(run({"attack", "--train", train, "--strategy", "random", "--seed", "1", "-p", "3", "--out",
                   (dir / name).string()})
                  .code == cli::kOk);
    }
    CHECK(read_text_file(dir / "r1" / "poisoned.csv") == read_text_file(dir / "r2" / "poisoned.csv"));
    CHECK(read_text_file(dir / "r1" / "flips.txt") == read_text_file(dir / "r2" / "flips.txt"));
  }
  SUBCASE("bruteforce beats or matches greedy") {
    for (const char* strategy : {"greedy", "bruteforce"}) {
      REQUIRE(run({"attack", "--train", train, "--val", val, "--strategy", strategy, "-p", "2", "--out",
                   (dir / strategy).string()})
                  .code == cli::kOk);
    }
    auto final_loss = [&](const char* name) {
      const auto text = read_text_file(dir / name / "trace.csv");
      const auto line_start = text.find_last_of('\n', text.size() - 2) + 1;
      const auto line = text.substr(line_start, text.size() - 1 - line_start);
      return std::stod(line.substr(line.find_last_of(',') + 1));
    };
    CHECK(final_loss("bruteforce") >= final_loss("greedy"));
    CHECK(line_count(read_text_file(dir / "greedy" / "trace.csv")) == 3);
  }
  SUBCASE("bad budgets") {
    CHECK(run({"attack", "--train", train, "--val", val, "-p", "99", "--out", (dir / "x").string()}).code ==
          cli::kUsageError);
    CHECK(run({"attack", "--train", train, "--val", val, "--out", (dir / "x").string()}).code == cli::kUsageError);
    CHECK(run({"attack", "--train", train, "--val", val, "--fraction", "0.1", "--epochs", "0", "--out",
               (dir / "x").string()})
              .code == cli::kUsageError);
  }
}

TEST_CASE("defend subcommand") {
  TempDir dir("defend");
  auto relabels = [&](const std::string& name) {
    return line_count(read_text_file(dir / name / "report.csv")) - 1;
  };
  SUBCASE("clean blobs are untouched") {
    write_canonical_csv(dir / "clean.csv", make_blobs(15, 2, 20.0, 1.0, 3));
    REQUIRE(run({"defend", "--train", (dir / "clean.csv").string(), "-k", "5", "--out", (dir / "c").string()}).code ==
            cli::kOk);
    CHECK(relabels("c") == 0);
    CHECK(read_text_file(dir / "c" / "sanitized.csv") == read_text_file(dir / "clean.csv"));
  }
  SUBCASE("higher eta relabels no more") {
    write_canonical_csv(dir / "p.csv", random_flip(make_blobs(20, 2, 3.0, 1.0, 4), 6, 5).poisoned);
    for (const char* eta : {"0.5", "0.9"}) {
      REQUIRE(run({"defend", "--train", (dir / "p.csv").string(), "-k", "5", "--eta", eta, "--out",
                   (dir / eta).string()})
                  .code == cli::kOk);
    }
    CHECK(relabels("0.9") <= relabels("0.5"));
  }
  SUBCASE("fixpoint on the five point chain") {
    write_canonical_csv(dir / "chain.csv", from_rows({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}}, {-1, 1, 1, 1, 1}));
    const auto r = run({"defend", "--train", (dir / "chain.csv").string(), "-k", "2", "--eta", "1", "--fixpoint",
                        "--raw", "--out", (dir / "chain").string()});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.out.find("in 2 pass(es)") != std::string::npos);
    CHECK(read_text_file(dir / "chain" / "report.csv") == "pass,index,old_label,new_label\n1,0,-1,1\n");
  }
  SUBCASE("invalid settings") {
    write_canonical_csv(dir / "tiny.csv", from_rows({{0.0}, {1.0}, {2.0}}, {-1, 1, 1}));
    CHECK(run({"defend", "--train", (dir / "tiny.csv").string(), "-k", "5", "--out", (dir / "t").string()}).code ==
          cli::kDataError);
    CHECK(run({"defend", "--train", (dir / "tiny.csv").string(), "--eta", "0.2", "--out", (dir / "t").string()})
              .code == cli::kUsageError);
  }
}

TEST_CASE("experiment and plot subcommands") {
  TempDir dir("experiment");
  write_canonical_csv(dir / "toy.csv", make_blobs(40, 2, 2.5, 1.0, 31));
  write_file_atomic(dir / "toy.cfg",
                    "dataset = toy\ndata = " + (dir / "toy.csv").string() +
                        "\nfractions = 0,0.1\nrepetitions = 1\nn-train = 20\nn-val = 20\nepochs = 20\n"
                        "k-grid = 1,3,5\n");
  const auto r = run({"experiment", "--config", (dir / "toy.cfg").string(), "--out", (dir / "e").string()});
  REQUIRE(r.code == cli::kOk);
  const auto results = read_text_file(dir / "e" / "results.csv");
  CHECK(line_count(results) == 1 + 5);
  CHECK(std::filesystem::exists(dir / "e" / "summary.csv"));
  CHECK(std::filesystem::exists(dir / "e" / "metadata.json"));

  REQUIRE(run({"experiment", "--config", (dir / "toy.cfg").string(), "--jobs", "4", "--out", (dir / "e4").string()})
              .code == cli::kOk);
  CHECK(read_text_file(dir / "e4" / "results.csv") == results);
  CHECK(read_text_file(dir / "e4" / "metadata.json") == read_text_file(dir / "e" / "metadata.json"));

  REQUIRE(run({"plot", "--results", (dir / "e" / "results.csv").string(), "--out", (dir / "p.svg").string()}).code ==
          cli::kOk);
  const auto svg = read_text_file(dir / "p.svg");
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("<polyline") != std::string::npos);

  write_file_atomic(dir / "bad.csv", "a,b\n");
  CHECK(run({"plot", "--results", (dir / "bad.csv").string()}).code == cli::kDataError);
  write_file_atomic(dir / "empty.csv", std::string(ResultsTable::kHeader) + "\n");
  CHECK(run({"plot", "--results", (dir / "empty.csv").string()}).code == cli::kDataError);
  CHECK(run({"experiment", "--data", (dir / "toy.csv").string(), "--vary", "k", "--out", (dir / "v").string()})
            .code == cli::kUsageError);
}
