#pragma once

#include <cstdint>
#include <vector>

#include "rntraj/trajectory.hpp"
#include "rntraj/utgraph.hpp"

namespace rntraj {

/// Random walk over the graph: uniform start among nodes with an outgoing
/// edge, uniform successor at every step, uniform ratio. Walks that reach a
/// node without successors are discarded and redrawn.
Corpus rwrn_generate(const UTGraph& g, const LengthCounts& counts, std::uint64_t seed, int workers = 1);

/// First-order segment transition model fitted on a corpus.
class MarkovModel {
 public:
  static constexpr int kRatioBins = 20;

  explicit MarkovModel(const Corpus& ref);

  const UTGraph& graph() const { return graph_; }
  /// Row-normalized transition probability.
  double transition(SegmentId from, SegmentId to) const;
  double initial(SegmentId id) const;

  RNTraj generate(int length, std::uint64_t seed) const;

 private:
  struct Row {
    std::vector<std::size_t> targets;
    std::vector<double> cumulative;
  };
  UTGraph graph_;
  std::vector<std::size_t> start_nodes_;
  std::vector<double> start_cumulative_;
  std::vector<Row> rows_;
  std::vector<std::vector<double>> ratio_cumulative_;
};

/// Exactly `counts[T]` trajectories of every length T.
Corpus markov_generate(const Corpus& ref, const LengthCounts& counts, std::uint64_t seed, int workers = 1);

}  // namespace rntraj
