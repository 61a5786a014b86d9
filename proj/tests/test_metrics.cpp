#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "rntraj/error.hpp"
#include "rntraj/metrics.hpp"
#include "rntraj/trajsim.hpp"
#include "support/oracles.hpp"

using namespace rntraj;

namespace {

// Three one-way segments of 100 m in a row along the equator:
// node 1 -> seg 1 -> node 2 -> seg 2 -> node 3 -> seg 3 -> node 4.
RoadNetwork line() {
  const double step = 100.0 / kMetersPerDegree;
  return RoadNetwork({{1, 0, 0}, {2, step, 0}, {3, 2 * step, 0}, {4, 3 * step, 0}},
                     {{1, 1, 2, 100.0}, {2, 2, 3, 100.0}, {3, 3, 4, 100.0}}, "line");
}

Histogram random_hist(std::mt19937_64& rng, int bins) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Histogram h;
  for (int i = 0; i <= bins; ++i) h.edges.push_back(i);
  double total = 0.0;
  for (int i = 0; i < bins; ++i) {
    h.mass.push_back(u(rng) < 0.2 ? 0.0 : u(rng));
    total += h.mass.back();
  }
  for (double& m : h.mass) m /= total;
  return h;
}

std::vector<double> masses(std::initializer_list<std::pair<int, double>> at, int bins) {
  std::vector<double> out(static_cast<std::size_t>(bins), 0.0);
  for (auto [i, m] : at) out[static_cast<std::size_t>(i)] += m;
  return out;
}

}  // namespace

TEST(Jsd, Axioms) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_hist(rng, 12);
    const auto q = random_hist(rng, 12);
    EXPECT_NEAR(jsd(p, q), jsd(q, p), 1e-12);
    EXPECT_NEAR(jsd(p, p), 0.0, 1e-12);
    EXPECT_GE(jsd(p, q), 0.0);
    EXPECT_LE(jsd(p, q), 1.0);
    EXPECT_NEAR(jsd(p, q), oracle::jsd_bits(p.mass, q.mass), 1e-12);
  }
  Histogram a{{0, 1, 2}, {}, {1.0, 0.0}};
  Histogram b{{0, 1, 2}, {}, {0.0, 1.0}};
  EXPECT_NEAR(jsd(a, b), 1.0, 1e-12);
}

TEST(Jsd, RejectsMismatchedBinning) {
  Histogram a{{0, 1, 2}, {}, {0.5, 0.5}};
  Histogram b{{0, 1, 3}, {}, {0.5, 0.5}};
  EXPECT_THROW(jsd(a, b), InvalidArgument);
  Histogram c{{}, {1, 2}, {0.5, 0.5}};
  Histogram d{{}, {1, 3}, {0.5, 0.5}};
  EXPECT_THROW(jsd(c, d), InvalidArgument);
}

TEST(Histogram, PooledEdgesCoverBothSamples) {
  const std::vector<double> a = {3.0, 5.0};
  const std::vector<double> b = {4.0, 9.0};
  const auto edges = pooled_edges(a, b, 3);
  ASSERT_EQ(edges.size(), 4u);
  EXPECT_EQ(edges.front(), 3.0);
  EXPECT_EQ(edges.back(), 9.0);
  const auto h = histogram(b, edges);
  EXPECT_EQ(h.mass, (std::vector<double>{0.5, 0.0, 0.5}));
}

TEST(GapDistance, AlongTheNetwork) {
  const auto net = line();
  const GapDistance d(net);
  const auto same = d.gaps({{{1, 0.2}, {1, 0.5}}});
  EXPECT_NEAR(same[0], 40.0, 1e-9);  // 20 m to 60 m
  const auto next = d.gaps({{{1, 0.5}, {2, 0.25}}});
  EXPECT_NEAR(next[0], 75.0, 1e-9);
  const auto skip = d.gaps({{{1, 0.5}, {3, 0.5}}});
  EXPECT_NEAR(skip[0], 200.0, 1e-9);
}

TEST(GapDistance, UnreachablePairsAndStraightLineMode) {
  const auto net = line();
  const GapDistance d(net);
  // Segment 3 cannot reach segment 1 on one-way roads: straight line between the points.
  const auto back = d.gaps({{{3, 0.5}, {1, 0.5}}});
  EXPECT_NEAR(back[0], 200.0, 1e-6);
  const GapDistance straight(net, DistanceMode::kStraightLine);
  EXPECT_NEAR(straight.gaps({{{1, 0.5}, {3, 0.5}}})[0], 200.0, 1e-6);
  EXPECT_NEAR(straight.gaps({{{1, 0.2}, {1, 0.5}}})[0], 40.0, 1e-6);
}

TEST(MetricTd, HandBuiltCorpora) {
  const auto net = line();
  // Totals: gen {50, 125}, ref {50, 50}. Pooled edges [50, 125] in 100 bins.
  const Corpus gen = {RNTraj{{{1, 0.0}, {1, 0.5}}}, RNTraj{{{1, 0.0}, {2, 0.25}}}};
  const Corpus ref = {RNTraj{{{1, 0.0}, {1, 0.5}}}, RNTraj{{{1, 0.0}, {1, 0.5}}}};
  const double expected = oracle::jsd_bits(masses({{0, 0.5}, {99, 0.5}}, 100), masses({{0, 1.0}}, 100));
  EXPECT_NEAR(metric_td(gen, ref, net), expected, 1e-12);
  EXPECT_NEAR(metric_td(gen, gen, net), 0.0, 1e-12);
  // Equal single totals.
  EXPECT_NEAR(metric_td({RNTraj{{{1, 0.0}, {1, 0.5}}}}, {RNTraj{{{2, 0.0}, {2, 0.5}}}}, net), 0.0, 1e-12);
}

TEST(MetricSd, HandBuiltCorpora) {
  const auto net = line();
  // Gaps: gen {50, 25}, ref {50, 50, 50}. Pooled edges [25, 50] in 4 bins.
  const Corpus gen = {RNTraj{{{1, 0.0}, {1, 0.5}, {1, 0.5}}}};
  const Corpus ref = {RNTraj{{{1, 0.0}, {1, 0.5}, {2, 0.0}, {2, 0.5}}}};
  MetricOptions opts;
  opts.bins = 4;
  const double expected = oracle::jsd_bits(masses({{3, 0.5}, {0, 0.5}}, 4), masses({{3, 1.0}}, 4));
  EXPECT_NEAR(metric_sd(gen, ref, net, opts), expected, 1e-12);
  EXPECT_NEAR(metric_sd(ref, ref, net, opts), 0.0, 1e-12);
}

TEST(MetricGpd, SameAndDifferentCells) {
  const auto net = line();
  MetricOptions opts;
  opts.grid_m = 50.0;
  // Points at 10 m and 30 m share a cell; 10 m and 130 m do not.
  const Corpus a = {RNTraj{{{1, 0.1}}}};
  const Corpus b = {RNTraj{{{1, 0.3}}}};
  const Corpus c = {RNTraj{{{2, 0.3}}}};
  EXPECT_NEAR(metric_gpd(a, b, net, opts), 0.0, 1e-12);
  EXPECT_NEAR(metric_gpd(a, c, net, opts), 1.0, 1e-12);
  // Half of the mass moves to another cell.
  const Corpus mixed = {RNTraj{{{1, 0.1}}}, RNTraj{{{2, 0.3}}}};
  EXPECT_NEAR(metric_gpd(a, mixed, net, opts), oracle::jsd_bits({1.0, 0.0}, {0.5, 0.5}), 1e-12);
}

TEST(MetricRs, DisjointPermutedAndSelf) {
  const Corpus a = {RNTraj{{{1, 0.5}, {2, 0.5}}}, RNTraj{{{2, 0.1}}}};
  const Corpus b = {RNTraj{{{3, 0.5}, {4, 0.5}}}};
  EXPECT_NEAR(metric_rs(a, b), 1.0, 1e-12);
  EXPECT_NEAR(metric_rs(a, a), 0.0, 1e-12);
  const Corpus swapped = {a[1], a[0]};
  const Corpus mixed = {a[0], b[0]};
  EXPECT_EQ(metric_rs(mixed, a), metric_rs(mixed, swapped));
  // Segment masses: a = {1: 1/3, 2: 2/3}, mixed = {1, 2, 3, 4: 1/4 each}.
  EXPECT_NEAR(metric_rs(mixed, a), oracle::jsd_bits({0.25, 0.25, 0.25, 0.25}, {1.0 / 3, 2.0 / 3, 0, 0}), 1e-12);
}

TEST(Rsc, HandValues) {
  const auto g = build_utgraph({RNTraj{{{1, 0.1}, {2, 0.1}, {2, 0.5}, {3, 0.2}}}});
  EXPECT_EQ(rsc(RNTraj{{{1, 0.1}, {2, 0.1}, {2, 0.5}, {3, 0.2}}}, g), 100.0);
  EXPECT_EQ(rsc(RNTraj{{{1, 0.1}, {2, 0.1}, {1, 0.5}}}, g), 50.0);
  EXPECT_EQ(rsc(RNTraj{{{3, 0.1}, {1, 0.1}}}, g), 0.0);
  EXPECT_THROW(rsc(RNTraj{{{1, 0.1}}}, g), InvalidArgument);
}

TEST(Evaluate, SelfComparisonIsZeroAndOrderInvariant) {
  const auto net = generate_grid_network(5, 5, 100);
  SimulationConfig cfg;
  cfg.n_traj = 200;
  auto corpus = simulate_corpus(net, cfg);
  const auto self = evaluate(corpus, corpus, net);
  EXPECT_NEAR(self.jsd_td, 0.0, 1e-12);
  EXPECT_NEAR(self.jsd_sd, 0.0, 1e-12);
  EXPECT_NEAR(self.jsd_gpd, 0.0, 1e-12);
  EXPECT_NEAR(self.jsd_rs, 0.0, 1e-12);
  EXPECT_EQ(self.rsc, 100.0);

  cfg.seed = 2;
  const auto other = simulate_corpus(net, cfg);
  const auto before = evaluate(other, corpus, net);
  std::reverse(corpus.begin(), corpus.end());
  MetricOptions opts;
  opts.workers = 3;
  const auto after = evaluate(other, corpus, net, opts);
  EXPECT_EQ(before.jsd_td, after.jsd_td);
  EXPECT_EQ(before.jsd_sd, after.jsd_sd);
  EXPECT_EQ(before.jsd_gpd, after.jsd_gpd);
  EXPECT_EQ(before.jsd_rs, after.jsd_rs);
  EXPECT_GT(before.jsd_rs, 0.0);
  EXPECT_THROW(evaluate({}, corpus, net), InvalidArgument);
}

TEST(Report, CsvLayout) {
  const MetricReport r{0.5, 0.25, 0.125, 1.0, 87.5};
  EXPECT_EQ(report_to_string(r), "metric,value\njsd_td,0.5\njsd_sd,0.25\njsd_gpd,0.125\njsd_rs,1\nrsc,87.5\n");
}
