// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "temp_dir.hpp"
#include "w2v/cli/cli.hpp"

namespace fs = std::filesystem;
using namespace w2v;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Corpus plus a tiny config file; returns the config path.
fs::path setup(const fs::path& dir) {
  const auto r = run({"synth-data", "--out", (dir / "corpus").string(), "--count", "24", "--min-seconds", "1",
                      "--max-seconds", "2", "--val-fraction", "0.25"});
  EXPECT_EQ(r.code, 0) << r.err;
  const fs::path cfg = dir / "tiny.cfg";
  std::ofstream f(cfg);
  f << "# tiny test run\n"
    << "preset = tiny\n"
    << "train_manifest = " << (dir / "corpus" / "train.tsv").string() << "\n"
    << "val_manifest = " << (dir / "corpus" / "val.tsv").string() << "\n"
    << "batch_seconds = 4\n"
    << "ft_batch_seconds = 4\n"
    << "ft_iterations = 6\n"
    << "ft_freeze_context_steps = 2\n";
  return cfg;
}

std::map<std::string, fs::file_time_type> listing(const fs::path& dir) {
  std::map<std::string, fs::file_time_type> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = e.last_write_time();
  return out;
}

}  // namespace

TEST(Cli, DataSeenPrintsTheTableHours) {
  const auto r = run({"data-seen", "--batch-seconds", "4800", "--iterations", "400000"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "533333 h  585 epochs\n");
}

TEST(Cli, UsageErrorsExitOneWithACategory) {
  auto r = run({});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_EQ(r.err.rfind("error: usage: ", 0), 0u) << r.err;
  r = run({"data-seen", "--batch-seconds", "4800"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  r = run({"data-seen", "--batch-seconds", "-1", "--iterations", "3"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("pretrain"), std::string::npos);
}

TEST(Cli, ConfigErrorsListEveryKeyOnOneLine) {
  w2v::test::TempDir dir;
  const auto r = run({"pretrain", "--out", (dir.path() / "run").string(), "bogus=1", "batch_seconds=abc",
                      "mask_prob=2", "noequals"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_EQ(r.err.rfind("error: config: ", 0), 0u);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
  for (const char* key : {"bogus", "batch_seconds", "mask_prob", "noequals"}) {
    EXPECT_NE(r.err.find(key), std::string::npos) << key << " missing from: " << r.err;
  }
  EXPECT_FALSE(fs::exists(dir.path() / "run"));
}

TEST(Cli, PretrainTwiceWithTheSameSeedGivesIdenticalMetrics) {
  w2v::test::TempDir dir;
  const fs::path cfg = setup(dir.path());
  for (const char* name : {"a", "b"}) {
    const auto r = run({"pretrain", "--config", cfg.string(), "--seed", "7", "--out", (dir.path() / name).string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const std::string a = slurp(dir.path() / "a" / "metrics.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir.path() / "b" / "metrics.csv"));
  for (const char* f : {"config.cfg", "config.json", "metrics.csv", "data_seen.csv", "best.txt",
                        "step-00000010.ckpt", "step-00000040.ckpt"}) {
    EXPECT_TRUE(fs::exists(dir.path() / "a" / f)) << f;
  }
  EXPECT_NE(slurp(dir.path() / "a" / "config.cfg").find("seed = 7\n"), std::string::npos);
  const auto again = run({"pretrain", "--config", cfg.string(), "--out", (dir.path() / "a").string()});
  EXPECT_EQ(again.code, cli::kExitUsage);
}

TEST(Cli, ResumeAfterAnInterruptionReproducesTheFullRun) {
  w2v::test::TempDir dir;
  const fs::path cfg = setup(dir.path());
  const fs::path full = dir.path() / "full", cut = dir.path() / "cut";
  ASSERT_EQ(run({"pretrain", "--config", cfg.string(), "--out", full.string()}).code, 0);
  fs::copy(full, cut);
  fs::remove(cut / "step-00000040.ckpt");
  fs::remove(cut / "step-00000030.ckpt");
  for (const char* csv : {"metrics.csv", "data_seen.csv"}) {
    std::istringstream in(slurp(cut / csv));
    std::string line, kept;
    for (int i = 0; i < 3 && std::getline(in, line); ++i) kept += line + "\n";
    std::ofstream(cut / csv, std::ios::trunc) << kept;
  }
  const auto r = run({"pretrain", "--config", cfg.string(), "--out", cut.string(), "--resume"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("resumed from"), std::string::npos);
  EXPECT_EQ(slurp(full / "metrics.csv"), slurp(cut / "metrics.csv"));
  EXPECT_EQ(slurp(full / "step-00000040.ckpt"), slurp(cut / "step-00000040.ckpt"));
}

TEST(Cli, OutputRootComesFromTheEnvironment) {
  w2v::test::TempDir dir;
  const fs::path cfg = setup(dir.path());
  const fs::path root = dir.path() / "root";
  ::setenv(cli::kOutputRootEnv, root.c_str(), 1);
  const auto r = run({"pretrain", "--config", cfg.string(), "iterations=10", "validate_every=10", "half_cycle=1",
                      "num_cycles=5"});
  ::unsetenv(cli::kOutputRootEnv);
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::is_directory(root));
  const auto runs = listing(root);
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs.begin()->first.rfind("pretrain-", 0), 0u);
}

TEST(Cli, ReportIsPureAndHasFigureColumns) {
  w2v::test::TempDir dir;
  const fs::path cfg = setup(dir.path());
  const fs::path runp = dir.path() / "run";
  ASSERT_EQ(run({"pretrain", "--config", cfg.string(), "--out", runp.string()}).code, 0);
  const auto before = listing(runp);
  const auto r = run({"report", "--run-dir", runp.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(listing(runp), before);
  std::istringstream in(r.out);
  std::string header;
  std::getline(in, header);
  for (const char* col : {"step", "hours_seen", "L_c", "L_d", "L_p", "accuracy", "perplexity_g1", "sim1_avg"}) {
    EXPECT_NE(header.find(col), std::string::npos) << col;
  }
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
  EXPECT_EQ(run({"report", "--run-dir", (dir.path() / "nothing").string()}).code, cli::kExitFailure);
}

TEST(Cli, FinetuneEvalAndProbeOnAPretrainedRun) {
  w2v::test::TempDir dir;
  const fs::path cfg = setup(dir.path());
  const fs::path pre = dir.path() / "pre", ft = dir.path() / "ft";
  ASSERT_EQ(run({"pretrain", "--config", cfg.string(), "--out", pre.string()}).code, 0);
  const fs::path ckpt = pre / "step-00000040.ckpt";

  auto r = run({"finetune", "--init", ckpt.string(), "--out", ft.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(ft / "final.ckpt"));
  EXPECT_TRUE(fs::exists(ft / "config.cfg"));
  const std::string report = slurp(ft / "eval.csv");
  EXPECT_EQ(report.rfind("id,reference,hypothesis,cer,wer\n", 0), 0u);
  EXPECT_NE(report.find("\nALL,,,"), std::string::npos);

  r = run({"eval", "--checkpoint", (ft / "final.ckpt").string(), "--manifest",
           (dir.path() / "corpus" / "val.tsv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, report);

  r = run({"finetune", "--init", "scratch", "--config", cfg.string(), "--out", (dir.path() / "scratch").string()});
  EXPECT_EQ(r.code, 0) << r.err;

  r = run({"finetune", "--init", ckpt.string(), "--out", (dir.path() / "bad").string(), "dim=4"});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_EQ(r.err.rfind("error: checkpoint: ", 0), 0u);
  EXPECT_NE(r.err.find("context.proj.weight"), std::string::npos);

  r = run({"probe-gradvar", "--checkpoint", ckpt.string(), "--n-batches", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("step,batch_seconds,avg_std,n_batches\n40,4,", 0), 0u) << r.out;
  EXPECT_EQ(run({"probe-gradvar", "--checkpoint", ckpt.string(), "--n-batches", "1"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"probe-gradvar", "--checkpoint", (dir.path() / "missing.ckpt").string()}).code,
            cli::kExitFailure);
}

TEST(EqualData, ParsePairs) {
  const auto p = cli::parse_pairs("150:400, 600:100,1.5e2:4");
  ASSERT_EQ(p.size(), 3u);
  EXPECT_DOUBLE_EQ(p[0].first, 150.0);
  EXPECT_EQ(p[1].second, 100);
  EXPECT_DOUBLE_EQ(p[2].first, 150.0);
  EXPECT_ANY_THROW(cli::parse_pairs("150x400"));
  EXPECT_ANY_THROW(cli::parse_pairs(""));
  EXPECT_ANY_THROW(cli::parse_pairs("0:10"));
}

TEST(EqualData, MismatchedProductsAreRejected) {
  w2v::test::TempDir dir;
  const fs::path cfg = setup(dir.path());
  const auto r = run({"experiment-equal-data", "--config", cfg.string(), "--pairs", "2:32,4:32", "--out",
                      (dir.path() / "eq").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("batch_seconds * iterations"), std::string::npos) << r.err;
}

TEST(EqualData, EqualProductsGiveEqualHoursAndOneRowPerCondition) {
  w2v::test::TempDir dir;
  const fs::path cfg = setup(dir.path());
  const fs::path eq = dir.path() / "eq";
  auto r = run({"experiment-equal-data", "--config", cfg.string(), "--pairs", "2:16,4:8", "--out", eq.string(),
                "num_cycles=2"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(eq / "comparison.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, cli::equal_data_csv_header());
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    rows.push_back(cols);
  }
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][0], rows[1][0]);
  EXPECT_EQ(rows[0][1], "2");
  EXPECT_EQ(rows[1][2], "8");
  for (const auto& row : rows) {
    EXPECT_TRUE(std::isfinite(std::stod(row[4])));
    EXPECT_TRUE(std::isfinite(std::stod(row[5])));
  }
  r = run({"experiment-equal-data", "--config", cfg.string(), "--pairs", "2:8", "--out",
           (dir.path() / "single").string(), "--no-finetune", "num_cycles=2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n') > 0, true);
  const std::string single = slurp(dir.path() / "single" / "comparison.csv");
  EXPECT_EQ(std::count(single.begin(), single.end(), '\n'), 2);
  EXPECT_NE(single.find(",nan"), std::string::npos);
}
