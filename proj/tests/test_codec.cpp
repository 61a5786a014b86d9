#include <gtest/gtest.h>

#include <random>

#include "rntraj/codec.hpp"
#include "rntraj/corpus_io.hpp"
#include "rntraj/error.hpp"
#include "rntraj/trajsim.hpp"

using namespace rntraj;

namespace {

SegmentEmbeddingTable random_table(const std::vector<SegmentId>& ids, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(ids.size()), dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return SegmentEmbeddingTable(ids, m);
}

}  // namespace

TEST(Vectorize, LayoutAndScaling) {
  const auto table = random_table({4, 8}, 3, 1);
  const auto x = vectorize({{{8, 0.0}, {4, 1.0}, {4, 0.25}}}, table);
  ASSERT_EQ(x.rows(), 3);
  ASSERT_EQ(x.cols(), 4);
  EXPECT_EQ(x.row(0).head(3), table.matrix().row(1));
  EXPECT_EQ(x.row(1).head(3), table.matrix().row(0));
  EXPECT_EQ(x(0, 3), -1.0);
  EXPECT_EQ(x(1, 3), 1.0);
  EXPECT_EQ(x(2, 3), -0.5);
  EXPECT_THROW(vectorize({{{5, 0.5}}}, table), UnknownId);
  EXPECT_THROW(vectorize({{{4, 1.5}}}, table), InvalidArgument);
}

TEST(Decode, ArgmaxIsScaleInvariantAndTiesPickLowestRow) {
  Eigen::MatrixXd m(3, 2);
  m << 1, 0, 0, 1, 2, 0;  // rows 0 and 2 point the same way
  const SegmentEmbeddingTable table({10, 20, 30}, m);
  Eigen::MatrixXd x(2, 3);
  x << 5, 0.1, 0.0, 0.2, 3, 0.0;
  const auto t = decode_rntraj(x, table);
  EXPECT_EQ(t.points[0].segment, 10);
  EXPECT_EQ(t.points[1].segment, 20);
  EXPECT_EQ(t.points[0].ratio, 0.5);
}

TEST(Decode, RatioChannelIsClamped) {
  EXPECT_EQ(ratio_of_channel(-3.0), 0.0);
  EXPECT_EQ(ratio_of_channel(2.0), 1.0);
  EXPECT_EQ(ratio_of_channel(0.5), 0.75);
}

TEST(Decode, ZeroRowIsADecodeError) {
  const auto table = random_table({1, 2}, 3, 2);
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 4);
  x.row(1).head(3).setZero();
  try {
    decode_rntraj(x, table);
    FAIL() << "expected DecodeError";
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.row(), 1);
  }
}

TEST(Decode, RoundTripOnSimulatedCorpus) {
  const auto net = generate_grid_network(5, 5, 100);
  SimulationConfig cfg;
  cfg.n_traj = 300;
  const auto corpus = simulate_corpus(net, cfg);
  std::vector<SegmentId> ids;
  for (const auto& s : net.segments()) ids.push_back(s.id);
  const auto table = random_table(ids, 8, 3);
  Corpus back;
  for (const auto& t : corpus) {
    const auto d = decode(vectorize(t, table), table, net);
    ASSERT_EQ(d.gps.size(), t.size());
    ASSERT_EQ(d.traj.size(), t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      ASSERT_EQ(d.traj.points[i].segment, t.points[i].segment);
      ASSERT_NEAR(d.traj.points[i].ratio, t.points[i].ratio, 1e-15);
    }
    back.push_back(d.traj);
  }
  EXPECT_EQ(corpus_to_string(back, net.name()), corpus_to_string(corpus, net.name()));
}
