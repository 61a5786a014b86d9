#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "rntraj/corpus_io.hpp"
#include "rntraj/metrics.hpp"
#include "rntraj/roadnet.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rntraj");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = rntraj::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("rntraj_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_F(Cli, Pipeline) {
  ASSERT_EQ(cli({"netgen", "--rows", "4", "--cols", "4", "-o", p("net")}).code, 0);
  ASSERT_EQ(cli({"simulate", "--net", p("net"), "--n", "60", "--tmin", "5", "--tmax", "8", "-o", p("ref.txt")}).code, 0);
  ASSERT_EQ(cli({"pretrain", "--corpus", p("ref.txt"), "--net", p("net"), "--dim", "8", "--walks", "2", "--walk-len",
                 "10", "--iters", "1", "-o", p("emb.bin")})
                .code,
            0);
  const auto tr = cli({"--workers", "1", "train", "--corpus", p("ref.txt"), "--net", p("net"), "--emb", p("emb.bin"),
                       "--epochs", "2", "--batch-size", "16", "--set", "diffusion_steps=20", "--set", "channels=8",
                       "--set", "step_dim=16", "--set", "layers=2", "--set", "layers_per_block=2", "--set", "top_k=8",
                       "-o", p("run")});
  ASSERT_EQ(tr.code, 0) << tr.err;
  EXPECT_TRUE(fs::exists(p("run/model.ckpt")));
  EXPECT_TRUE(fs::exists(p("run/epoch_002.ckpt")));
  const auto resolved = slurp(p("run/config.resolved"));
  EXPECT_NE(resolved.find("diffusion_steps = 20"), std::string::npos) << resolved;
  const auto log = slurp(p("run/train_log.csv"));
  EXPECT_EQ(log.rfind("epoch,l1,l2,l3_soft,l3_hard,lr\n", 0), 0u);
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 3);

  const auto sa = cli({"sample", "--ckpt", p("run/model.ckpt"), "--emb", p("emb.bin"), "--net", p("net"),
                       "--counts-from", p("ref.txt"), "-o", p("gen.txt")});
  ASSERT_EQ(sa.code, 0) << sa.err;
  const auto net = rntraj::load_network(p("net"));
  const auto ref = rntraj::read_corpus(fs::path(p("ref.txt"))).trajectories;
  const auto gen = rntraj::read_corpus(fs::path(p("gen.txt"))).trajectories;
  EXPECT_EQ(rntraj::length_counts(gen), rntraj::length_counts(ref));
  for (const auto& t : gen) {
    for (const auto& pt : t.points) EXPECT_TRUE(net.has_segment(pt.segment));
  }

  const auto ev = cli({"evaluate", "--gen", p("gen.txt"), "--ref", p("ref.txt"), "--net", p("net"), "--heatmap-dir",
                       p("maps"), "-o", p("report.csv")});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(slurp(p("report.csv")).rfind("metric,value\njsd_td,", 0), 0u);
  EXPECT_TRUE(fs::exists(p("maps/gpd_gen.csv")));

  for (const std::string kind : {"rwrn", "markov"}) {
    ASSERT_EQ(cli({"baseline", "--kind", kind, "--ref", p("ref.txt"), "-o", p(kind + ".txt")}).code, 0);
    EXPECT_EQ(rntraj::length_counts(rntraj::read_corpus(fs::path(p(kind + ".txt"))).trajectories), rntraj::length_counts(ref));
  }
}

TEST_F(Cli, SelfEvaluationIsZero) {
  ASSERT_EQ(cli({"netgen", "--rows", "3", "--cols", "3", "-o", p("net")}).code, 0);
  ASSERT_EQ(cli({"simulate", "--net", p("net"), "--n", "30", "--tmin", "4", "--tmax", "6", "-o", p("ref.txt")}).code, 0);
  const auto ev = cli({"evaluate", "--gen", p("ref.txt"), "--ref", p("ref.txt"), "--net", p("net"), "-o", p("r.csv")});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(slurp(p("r.csv")), "metric,value\njsd_td,0\njsd_sd,0\njsd_gpd,0\njsd_rs,0\nrsc,100\n");
}

TEST_F(Cli, UsageAndRuntimeErrors) {
  auto r = cli({"simulate", "--n", "3", "-o", p("x.txt")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error: usage:", 0), 0u) << r.err;
  EXPECT_EQ(cli({"nosuchcommand"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"baseline", "--kind", "gan", "--ref", p("x"), "-o", p("y")}).code, 2);
  r = cli({"simulate", "--net", p("missing"), "-o", p("x.txt")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
  EXPECT_EQ(cli({"--help"}).code, 0);
}
