/*
 * Copyright 2026 The occf Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "occf/posterior_io.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("occf-cli-" + std::to_string(::getpid()) + "-" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  /// Runs the binary and returns its exit code; stderr is kept in err_.
  int run(const std::string& args) {
    const auto err = path("stderr.txt");
    const std::string cmd = std::string(OCCF_BINARY) + " " + args + " > " + path("stdout.txt") + " 2> " + err;
    const int status = std::system(cmd.c_str());
    err_ = read(err);
    out_ = read(path("stdout.txt"));
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string read(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  std::string write_synthetic(const std::string& name, const synthetic::Config& c) {
    std::ofstream out(path(name));
    occf::write_edges(out, synthetic::simulate(c));
    return path(name);
  }

  std::string small_graph() {
    synthetic::Config c;
    c.users = 60;
    c.items = 25;
    c.considered = 12;
    return write_synthetic("graph.tsv", c);
  }

  static nlohmann::json json(const std::string& p) { return nlohmann::json::parse(read(p)); }

  fs::path dir_;
  std::string err_, out_;
};

TEST_F(Cli, SplitWritesFilesAndManifest) {
  const auto g = small_graph();
  ASSERT_EQ(run("split --input " + g + " --train " + path("train.tsv") + " --test " + path("test.tsv")), 0) << err_;
  EXPECT_TRUE(fs::exists(path("train.tsv")));
  EXPECT_TRUE(fs::exists(path("test.tsv")));
  EXPECT_TRUE(fs::exists(path("test.tsv.excluded")));
  const auto man = json(path("train.tsv.manifest.json"));
  EXPECT_EQ(man["command"], "split");
  EXPECT_EQ(man["inputs"][0]["path"], g);
  EXPECT_EQ(man["inputs"][0]["sha256"].get<std::string>().size(), 64u);
  EXPECT_TRUE(man.contains("seed"));
  EXPECT_TRUE(man.contains("duration_seconds"));
  EXPECT_EQ(man["outputs"].size(), 3u);
}

TEST_F(Cli, SplitIsReproducible) {
  const auto g = small_graph();
  for (const char* tag : {"a", "b"}) {
    const std::string t = tag;
    ASSERT_EQ(run("split --seed 5 --input " + g + " --train " + path("train" + t) + " --test " + path("test" + t)), 0);
  }
  EXPECT_EQ(read(path("traina")), read(path("trainb")));
  EXPECT_EQ(read(path("testa")), read(path("testb")));
  ASSERT_EQ(run("split --seed 6 --input " + g + " --train " + path("trainc") + " --test " + path("testc")), 0);
  EXPECT_NE(read(path("testa")), read(path("testc")));
}

TEST_F(Cli, MissingInputIsAnIoError) {
  const auto missing = path("no-such-file.tsv");
  EXPECT_EQ(run("split --input " + missing + " --train " + path("a") + " --test " + path("b")), 2);
  EXPECT_NE(err_.find(missing), std::string::npos) << err_;
  EXPECT_EQ(run("stats --input " + missing), 2);
}

TEST_F(Cli, MalformedInputIsAnIoError) {
  std::ofstream(path("bad.tsv")) << "u1\ti1\nu2\n";
  EXPECT_EQ(run("stats --input " + path("bad.tsv")), 2);
  EXPECT_NE(err_.find("line 2"), std::string::npos) << err_;
}

TEST_F(Cli, UsageErrors) {
  const auto g = small_graph();
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("train --input " + g), 1);
  EXPECT_EQ(run("train --input " + g + " --model " + path("m") + " -K 2 --kappa 5"), 1);
  EXPECT_EQ(run("train --input " + g + " --model " + path("m") + " --iterations 5 --warmup 5"), 1);
  EXPECT_EQ(run("train --input " + g + " --model " + path("m") + " -r 0"), 1);
  EXPECT_EQ(run("sample-graph --users 0 --items 5 --output " + path("s")), 1);
  EXPECT_EQ(run("evaluate --train " + g + " --test " + g + " --out-dir " + path("e")), 1);
}

TEST_F(Cli, TrainDefaultsAndZeroIterations) {
  const auto g = small_graph();
  ASSERT_EQ(run("train --input " + g + " --model " + path("m") + " --iterations 0"), 0) << err_;
  const auto cfg = json(path("m.manifest.json"))["config"];
  EXPECT_EQ(cfg["K"], 20);
  EXPECT_EQ(cfg["alpha"], 0.01);
  EXPECT_EQ(cfg["beta"], 0.01);
  EXPECT_EQ(cfg["clamp_user_bias"], true);
  EXPECT_EQ(cfg["r"], 0.5);
  std::ifstream in(path("m"));
  const auto q = occf::read_posterior(in);
  EXPECT_EQ(q.dim, 20u);
  EXPECT_TRUE(q.user_bias_clamped);
  for (const auto& f : q.item_bias) EXPECT_EQ(f, (occf::GaussianFactor{0.0, 1.0}));
  // header only
  EXPECT_EQ(read(path("m.log.tsv")).find('\n'), read(path("m.log.tsv")).size() - 1);
}

TEST_F(Cli, TrainLogAndReproducibility) {
  const auto g = small_graph();
  const std::string common = "train --input " + g + " -K 3 --iterations 12 --warmup 4 --seed 9 --model ";
  ASSERT_EQ(run(common + path("a")), 0) << err_;
  ASSERT_EQ(run(common + path("b") + " --workers 1 --blocks 3"), 0) << err_;
  const auto log = read(path("a.log.tsv"));
  EXPECT_EQ(log.substr(0, log.find('\n')), "t\tepsilon\telbo_sample\tE[tau_u]\tE[tau_v]\tE[tau_bu]\tE[tau_bv]");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 13);
  // blocks and workers change neither the summation order nor the file
  EXPECT_EQ(read(path("a")), read(path("b")));
}

TEST_F(Cli, RateChangesSampledNegatives) {
  synthetic::Config c;
  c.users = 150;
  c.items = 40;
  c.considered = 12;
  c.popularity = 1.0;
  const auto g = write_synthetic("graph.tsv", c);
  const std::string common = "train --input " + g + " -K 2 --iterations 1 --warmup 0 --hyper-start 0 --model ";
  ASSERT_EQ(run(common + path("half") + " -r 0.5"), 0) << err_;
  ASSERT_EQ(run(common + path("one") + " -r 1"), 0) << err_;
  const auto half = read(path("half.ratios.tsv"));
  const auto one = read(path("one.ratios.tsv"));
  EXPECT_EQ(half.substr(0, half.find('\n')), "item_id\tpositives\tnegatives\tratio");
  EXPECT_NE(half, one);
}

TEST_F(Cli, EvaluateUntrainedModelIsNearRandom) {
  synthetic::Config c;
  c.users = 200;
  c.items = 50;
  c.considered = 20;
  const auto g = write_synthetic("graph.tsv", c);
  ASSERT_EQ(run("split --input " + g + " --train " + path("train") + " --test " + path("test")), 0) << err_;
  ASSERT_EQ(run("train --input " + path("train") + " -K 2 --iterations 0 --model " + path("m")), 0) << err_;
  ASSERT_EQ(run("evaluate --model " + path("m") + " --train " + path("train") + " --test " + path("test") +
                " --out-dir " + path("eval") + " --mode like,popularity,popularity-like"),
            0)
      << err_;
  for (const auto* f : {"rank_by_user_bin.tsv", "rank_by_item_bin.tsv", "classification_by_user_bin.tsv",
                        "like_histograms.tsv", "summary.tsv", "manifest.json"})
    EXPECT_TRUE(fs::exists(path("eval/") + f)) << f;
  std::istringstream summary(read(path("eval/summary.tsv")));
  std::string line;
  std::getline(summary, line);
  std::map<std::string, double> mean;
  while (std::getline(summary, line)) {
    std::istringstream row(line);
    std::string mode;
    std::size_t records, skipped;
    double m;
    row >> mode >> records >> skipped >> m;
    mean[mode] = m;
  }
  ASSERT_EQ(mean.size(), 3u);
  EXPECT_NEAR(mean["like"], 0.5, 0.05);
}

TEST_F(Cli, BprEvaluatesWithTheSameSchema) {
  const auto g = small_graph();
  ASSERT_EQ(run("split --input " + g + " --train " + path("train") + " --test " + path("test")), 0) << err_;
  ASSERT_EQ(run("train-bpr --input " + path("train") + " -K 2 --epochs 3 --model " + path("bpr")), 0) << err_;
  ASSERT_EQ(run("train --input " + path("train") + " -K 2 --iterations 3 --warmup 1 --hyper-start 1 --model " +
                path("vb")),
            0);
  const std::string rest = " --train " + path("train") + " --test " + path("test") + " --mode like";
  ASSERT_EQ(run("evaluate --bpr-model " + path("bpr") + rest + " --out-dir " + path("e1")), 0) << err_;
  ASSERT_EQ(run("evaluate --model " + path("vb") + rest + " --out-dir " + path("e2")), 0) << err_;
  for (const auto* f : {"rank_by_user_bin.tsv", "summary.tsv", "classification_by_user_bin.tsv"}) {
    const auto a = read(path("e1/") + f), b = read(path("e2/") + f);
    // same header lines: an optional comment, then the column names
    const auto header = [](const std::string& s) {
      const auto first = s.find('\n');
      return s[0] == '#' ? s.substr(0, s.find('\n', first + 1)) : s.substr(0, first);
    };
    EXPECT_EQ(header(a), header(b)) << f;
  }
  EXPECT_EQ(json(path("bpr.manifest.json"))["config"]["sampling"], "uniform");
}

TEST_F(Cli, ModelFromAnotherGraphIsInconsistent) {
  const auto g = small_graph();
  std::ofstream(path("other.tsv")) << "x\ty\nx\tz\nw\ty\n";
  ASSERT_EQ(run("train --input " + path("other.tsv") + " -K 2 --iterations 0 --model " + path("m")), 0) << err_;
  EXPECT_EQ(run("evaluate --model " + path("m") + " --train " + g + " --test " + g + " --out-dir " + path("e")), 3);
  EXPECT_EQ(run("predict --model " + path("m") + " --train " + g + " --output " + path("p")), 3);
}

TEST_F(Cli, PredictTopK) {
  const auto g = small_graph();
  ASSERT_EQ(run("train --input " + g + " -K 2 --iterations 4 --warmup 1 --hyper-start 1 --model " + path("m")), 0);
  ASSERT_EQ(run("predict --model " + path("m") + " --train " + g + " -k 3 --users u1,u2 --mode popularity-like" +
                " --output " + path("p.tsv")),
            0)
      << err_;
  std::istringstream in(read(path("p.tsv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "user_id\titem_id\tscore\tmode");
  std::map<std::string, int> per_user;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string user, item, mode;
    double score;
    row >> user >> item >> score >> mode;
    ++per_user[user];
    EXPECT_EQ(mode, "popularity-like");
  }
  EXPECT_EQ(per_user.size(), 2u);
  for (const auto& [u, n] : per_user) EXPECT_LE(n, 3) << u;
}

TEST_F(Cli, SampleGraphFlags) {
  ASSERT_EQ(run("sample-graph --users 400 --items 150 --item-exponent 0.77 --item-dmax 60 --user-cutoff 70 --seed 3"
                " --output " + path("g.tsv")),
            0)
      << err_;
  EXPECT_TRUE(fs::exists(path("g.tsv.degrees.tsv")));
  ASSERT_EQ(run("sample-graph --users 400 --items 150 --item-exponent 0.77 --item-dmax 60 --user-cutoff 70 --seed 3"
                " --output " + path("h.tsv")),
            0);
  EXPECT_EQ(read(path("g.tsv")), read(path("h.tsv")));
  EXPECT_EQ(json(path("g.tsv.manifest.json"))["command"], "sample-graph");
  ASSERT_EQ(run("stats --input " + path("g.tsv")), 0) << err_;
  EXPECT_FALSE(out_.empty());
}

TEST_F(Cli, ImpossibleDegreeSpecIsAGenerationError) {
  EXPECT_EQ(run("sample-graph --users 400 --items 150 --redraw-budget 100 --output " + path("g.tsv")), 4) << err_;
}

}  // namespace
