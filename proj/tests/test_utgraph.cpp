#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "rntraj/error.hpp"
#include "rntraj/trajsim.hpp"
#include "rntraj/utgraph.hpp"
#include "support/oracles.hpp"

using namespace rntraj;

namespace {

RNTraj route(std::initializer_list<SegmentId> ids) {
  RNTraj t;
  for (auto id : ids) t.points.push_back({id, 0.5});
  return t;
}

double cosine(const Eigen::MatrixXd& m, Eigen::Index a, Eigen::Index b) {
  return m.row(a).dot(m.row(b)) / (m.row(a).norm() * m.row(b).norm());
}

}  // namespace

TEST(BuildUtgraph, CountsConsecutivePairs) {
  const auto g = build_utgraph({route({1, 2, 2, 3})});
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.num_edges(), 3u);
  EXPECT_EQ(g.weight(1, 2), 1);
  EXPECT_EQ(g.weight(2, 2), 1);
  EXPECT_EQ(g.weight(2, 3), 1);
  EXPECT_EQ(g.weight(2, 1), 0);
  const auto twice = build_utgraph({route({1, 2, 2, 3}), route({1, 2, 2, 3})});
  EXPECT_EQ(twice.weight(1, 2), 2);
  EXPECT_EQ(twice.weight(2, 2), 2);
  EXPECT_EQ(twice.weight(2, 3), 2);
}

TEST(BuildUtgraph, SinglePointTrajectoriesAddNoEdges) {
  const auto g = build_utgraph({route({4})});
  EXPECT_EQ(g.num_nodes(), 1u);
  EXPECT_EQ(g.num_edges(), 0u);
  EXPECT_THROW(build_utgraph({}), InvalidArgument);
}

TEST(BuildUtgraph, MatchesBruteForcePairScan) {
  const auto net = generate_grid_network(4, 4, 100);
  SimulationConfig cfg;
  cfg.n_traj = 300;
  cfg.seed = 8;
  const auto corpus = simulate_corpus(net, cfg);
  const auto g = build_utgraph(corpus);
  const auto pairs = oracle::consecutive_pairs(corpus);
  std::int64_t expected_weight = 0;
  for (const auto& t : corpus) expected_weight += static_cast<std::int64_t>(t.size()) - 1;
  EXPECT_EQ(g.total_weight(), expected_weight);
  EXPECT_EQ(g.num_edges(), pairs.size());
  for (auto a : g.nodes()) {
    for (auto b : g.nodes()) EXPECT_EQ(g.has_edge(a, b), pairs.contains({a, b}));
  }
}

TEST(BuildUtgraph, AdjacencyMatrixMatchesEdges) {
  const auto g = build_utgraph({route({5, 9, 9, 2}), route({2, 5})});
  const auto adj = g.adjacency();
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    for (std::size_t j = 0; j < g.num_nodes(); ++j) {
      EXPECT_EQ(adj(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), g.has_edge(g.node(i), g.node(j)) ? 1.0 : 0.0);
    }
  }
}

TEST(Walks, FollowEdgesAndHaveRequestedShape) {
  const auto g = build_utgraph({route({1, 2, 3, 1}), route({3, 3, 2})});
  Node2VecConfig cfg;
  cfg.walks_per_node = 4;
  cfg.walk_length = 9;
  const auto walks = generate_walks(g, cfg);
  EXPECT_EQ(walks.size(), 12u);
  for (const auto& w : walks) {
    EXPECT_EQ(w.size(), 9u);
    for (std::size_t i = 1; i < w.size(); ++i) EXPECT_GT(g.weight(g.node(w[i - 1]), g.node(w[i])), 0);
  }
}

TEST(Pretrain, SeedDeterministic) {
  const auto g = build_utgraph({route({1, 2, 3, 1, 2}), route({3, 3, 2, 3})});
  Node2VecConfig cfg;
  cfg.dim = 8;
  cfg.walks_per_node = 10;
  cfg.walk_length = 10;
  cfg.iterations = 3;
  const auto a = pretrain_embeddings(g, cfg);
  const auto b = pretrain_embeddings(g, cfg);
  EXPECT_EQ(a.matrix(), b.matrix());
  cfg.seed = 2;
  EXPECT_NE(a.matrix(), pretrain_embeddings(g, cfg).matrix());
}

TEST(Pretrain, TargetRmsRescalesWithoutTurning) {
  const auto g = build_utgraph({route({1, 2, 3, 1, 2}), route({3, 3, 2, 3})});
  Node2VecConfig cfg;
  cfg.dim = 8;
  cfg.walks_per_node = 10;
  cfg.walk_length = 10;
  const auto plain = pretrain_embeddings(g, cfg);
  cfg.target_rms = 1.5;
  const auto scaled = pretrain_embeddings(g, cfg);
  EXPECT_NEAR(std::sqrt(scaled.matrix().array().square().mean()), 1.5, 1e-6);
  EXPECT_LT((scaled.normalized() - plain.normalized()).cwiseAbs().maxCoeff(), 1e-6);
  cfg.target_rms = -1.0;
  EXPECT_THROW(pretrain_embeddings(g, cfg), InvalidArgument);
}

TEST(Pretrain, SingleSelfLoopNode) {
  const auto g = build_utgraph({route({7, 7, 7})});
  Node2VecConfig cfg;
  cfg.dim = 4;
  cfg.walks_per_node = 3;
  cfg.walk_length = 5;
  cfg.iterations = 2;
  for (const auto& w : generate_walks(g, cfg)) {
    for (auto v : w) EXPECT_EQ(v, 0u);
  }
  const auto table = pretrain_embeddings(g, cfg);
  EXPECT_EQ(table.rows(), 1u);
  EXPECT_GT(table.matrix().norm(), 0.0);
}

TEST(Pretrain, IsolatedNodesAreCountedAndEmbedded) {
  const std::vector<SegmentId> extra = {40, 41};
  const auto g = build_utgraph({route({1, 2, 1, 2})}, extra);
  Node2VecConfig cfg;
  cfg.dim = 4;
  cfg.walks_per_node = 3;
  cfg.walk_length = 5;
  cfg.iterations = 2;
  PretrainStats stats;
  const auto table = pretrain_embeddings(g, cfg, &stats);
  EXPECT_EQ(stats.isolated_nodes, 2);
  EXPECT_EQ(table.rows(), 4u);
  for (Eigen::Index r = 0; r < 4; ++r) EXPECT_GT(table.matrix().row(r).norm(), 0.0);
}

TEST(Pretrain, CommunitiesAreCloserInside) {
  // Two directed 5-cliques joined by one weak edge each way.
  Corpus corpus;
  for (int rep = 0; rep < 20; ++rep) {
    for (SegmentId base : {0, 10}) {
      for (SegmentId a = 0; a < 5; ++a) {
        for (SegmentId b = 0; b < 5; ++b) {
          if (a != b) corpus.push_back(route({base + a, base + b}));
        }
      }
    }
  }
  corpus.push_back(route({4, 10}));
  corpus.push_back(route({10, 4}));
  const auto g = build_utgraph(corpus);
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Node2VecConfig cfg;
    cfg.dim = 16;
    cfg.walks_per_node = 20;
    cfg.walk_length = 20;
    cfg.window = 5;
    cfg.iterations = 5;
    cfg.seed = seed;
    const auto m = pretrain_embeddings(g, cfg).matrix();
    double intra = 0.0, inter = 0.0;
    int n_intra = 0, n_inter = 0;
    for (Eigen::Index a = 0; a < 10; ++a) {
      for (Eigen::Index b = a + 1; b < 10; ++b) {
        if ((a < 5) == (b < 5)) {
          intra += cosine(m, a, b);
          ++n_intra;
        } else {
          inter += cosine(m, a, b);
          ++n_inter;
        }
      }
    }
    if (intra / n_intra > inter / n_inter) ++wins;
  }
  EXPECT_GE(wins, 6);
}

TEST(EmbeddingTable, Validation) {
  Eigen::MatrixXd m(2, 2);
  m << 1, 0, 0, 1;
  EXPECT_NO_THROW(SegmentEmbeddingTable({3, 1}, m));
  EXPECT_THROW(SegmentEmbeddingTable({3, 3}, m), InvalidArgument);
  Eigen::MatrixXd zero = m;
  zero.row(1).setZero();
  EXPECT_THROW(SegmentEmbeddingTable({3, 1}, zero), InvalidArgument);
  Eigen::MatrixXd dup(2, 2);
  dup << 1, 2, 1, 2;
  EXPECT_THROW(SegmentEmbeddingTable({3, 1}, dup), InvalidArgument);
  const SegmentEmbeddingTable t({3, 1}, m);
  EXPECT_EQ(t.id(0), 1);
  EXPECT_EQ(t.matrix()(0, 1), 1.0);
}

TEST(EmbeddingFile, RoundTripsBitExactly) {
  const auto g = build_utgraph({route({11, 12, 13, 11}), route({13, 12})});
  Node2VecConfig cfg;
  cfg.dim = 6;
  cfg.walks_per_node = 5;
  cfg.walk_length = 6;
  cfg.iterations = 2;
  const auto table = pretrain_embeddings(g, cfg);
  const auto path = std::filesystem::temp_directory_path() / "rntraj_test_emb.bin";
  save_embeddings(table, path);
  const auto back = load_embeddings(path);
  EXPECT_EQ(std::vector<SegmentId>(back.ids().begin(), back.ids().end()),
            std::vector<SegmentId>(table.ids().begin(), table.ids().end()));
  EXPECT_EQ(back.matrix(), table.matrix());
}
