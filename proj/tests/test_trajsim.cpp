#include <gtest/gtest.h>

#include "rntraj/corpus_io.hpp"
#include "rntraj/error.hpp"
#include "rntraj/metrics.hpp"
#include "rntraj/trajsim.hpp"
#include "rntraj/utgraph.hpp"
#include "support/oracles.hpp"

using namespace rntraj;

namespace {

RoadNetwork two_segments() {
  return RoadNetwork({{1, 0, 0}, {2, 1, 0}, {3, 2, 0}}, {{1, 1, 2, 100.0}, {2, 2, 3, 50.0}}, "line");
}

}  // namespace

TEST(EncodeMovingRatios, HandValues) {
  const auto net = two_segments();
  const auto t = encode_moving_ratios({{{1, 30.0}, {1, 65.0}, {2, 0.0}, {2, 25.0}}}, net);
  ASSERT_EQ(t.size(), 4u);
  EXPECT_DOUBLE_EQ(t.points[0].ratio, 0.3);
  EXPECT_DOUBLE_EQ(t.points[1].ratio, 0.5);
  EXPECT_EQ(t.points[2].ratio, 0.0);
  EXPECT_DOUBLE_EQ(t.points[3].ratio, 0.5);
}

TEST(EncodeMovingRatios, ClampsAtSegmentEnd) {
  const auto net = two_segments();
  EncodeStats stats;
  const auto t = encode_moving_ratios({{{1, 100.0}, {1, 100.0}}}, net, &stats);
  EXPECT_EQ(t.points[1].ratio, 1.0);
  EXPECT_EQ(stats.clamped_at_segment_end, 1);
}

TEST(EncodeMovingRatios, RejectsInvalidTraces) {
  const auto net = two_segments();
  EXPECT_THROW(encode_moving_ratios({{{1, 120.0}}}, net), InvalidArgument);
  EXPECT_THROW(encode_moving_ratios({{{1, 50.0}, {1, 40.0}}}, net), InvalidArgument);
  EXPECT_THROW(encode_moving_ratios({{{2, 10.0}, {1, 40.0}}}, net), InvalidArgument);
  EXPECT_THROW(encode_moving_ratios({{{9, 10.0}}}, net), UnknownId);
}

TEST(Simulate, RejectsEmptyRequest) {
  SimulationConfig cfg;
  cfg.n_traj = 0;
  EXPECT_THROW(simulate_corpus(generate_grid_network(3, 3, 100), cfg), InvalidArgument);
}

TEST(Simulate, SeedDeterministicAcrossWorkerCounts) {
  const auto net = generate_grid_network(4, 4, 100);
  SimulationConfig cfg;
  cfg.n_traj = 200;
  cfg.seed = 11;
  const auto a = corpus_to_string(simulate_corpus(net, cfg), net.name());
  const auto b = corpus_to_string(simulate_corpus(net, cfg), net.name());
  cfg.workers = 3;
  const auto c = corpus_to_string(simulate_corpus(net, cfg), net.name());
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  cfg.seed = 12;
  EXPECT_NE(a, corpus_to_string(simulate_corpus(net, cfg), net.name()));
}

TEST(Simulate, LengthsRatiosAndSelfConnectivity) {
  const auto net = generate_grid_network(6, 6, 100);
  SimulationConfig cfg;
  cfg.n_traj = 2000;
  const auto corpus = simulate_corpus(net, cfg);
  ASSERT_EQ(corpus.size(), 2000u);
  for (const auto& t : corpus) {
    ASSERT_GE(t.size(), 15u);
    ASSERT_LE(t.size(), 25u);
    for (std::size_t i = 0; i < t.size(); ++i) {
      ASSERT_GE(t.points[i].ratio, 0.0);
      ASSERT_LE(t.points[i].ratio, 1.0);
      if (i > 0 && t.points[i].segment != t.points[i - 1].segment) {
        ASSERT_TRUE(net.is_successor(t.points[i - 1].segment, t.points[i].segment));
      }
    }
  }
  EXPECT_EQ(mean_rsc(corpus, build_utgraph(corpus)), 100.0);
}

TEST(Simulate, AlgorithmOneMatchesPathWalker) {
  const auto net = generate_grid_network(6, 6, 100);
  SimulationConfig cfg;
  cfg.n_traj = 300;
  cfg.seed = 5;
  for (const auto& trip : simulate_trips(net, cfg)) {
    const auto truth = oracle::walked_fractions(trip.trace, net);
    const auto frac = interpolation_fractions(trip.traj);
    ASSERT_EQ(truth.size(), frac.size());
    for (std::size_t i = 0; i < frac.size(); ++i) ASSERT_NEAR(frac[i], truth[i], 1e-9);
  }
}

TEST(Simulate, RejectsStepsLongerThanSegments) {
  SimulationConfig cfg;
  cfg.speed.mean_mps = 30.0;
  EXPECT_THROW(simulate_corpus(generate_grid_network(3, 3, 100), cfg), InvalidArgument);
}

TEST(CorpusIo, RoundTripsAtSixDecimals) {
  const auto net = generate_grid_network(3, 3, 100);
  SimulationConfig cfg;
  cfg.n_traj = 20;
  const auto corpus = simulate_corpus(net, cfg);
  const auto text = corpus_to_string(corpus, net.name());
  std::istringstream in(text);
  const auto back = read_corpus(in);
  EXPECT_EQ(back.network, net.name());
  ASSERT_EQ(back.trajectories.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ASSERT_EQ(back.trajectories[i].size(), corpus[i].size());
    for (std::size_t k = 0; k < corpus[i].size(); ++k) {
      EXPECT_EQ(back.trajectories[i].points[k].segment, corpus[i].points[k].segment);
      EXPECT_NEAR(back.trajectories[i].points[k].ratio, corpus[i].points[k].ratio, 5e-7);
    }
  }
  EXPECT_EQ(corpus_to_string(back.trajectories, net.name()), text);
}

TEST(CorpusIo, RejectsMalformedInput) {
  std::istringstream no_header("1:0.5\n");
  EXPECT_THROW(read_corpus(no_header), ParseError);
  std::istringstream bad_token("#rntraj v1 network=x\n1-0.5\n");
  EXPECT_THROW(read_corpus(bad_token), ParseError);
}
