#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "rntraj/trajectory.hpp"

namespace rntraj {

/// Directed, weighted graph over road segments built from consecutive
/// traversals observed in trajectories. Edge (i, j) weighs the number of
/// times a trajectory point on i is immediately followed by one on j;
/// self-edges (i == j) are counted like any other pair.
class UTGraph {
 public:
  struct Edge {
    std::size_t target = 0;  // node index
    std::int64_t weight = 0;
  };

  UTGraph() = default;

  /// Node ids must be unique; they are stored sorted ascending.
  explicit UTGraph(std::vector<SegmentId> nodes);

  void add_traversal(SegmentId from, SegmentId to, std::int64_t count = 1);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const;
  std::int64_t total_weight() const;
  std::span<const SegmentId> nodes() const { return nodes_; }
  SegmentId node(std::size_t index) const { return nodes_[index]; }
  bool contains(SegmentId id) const { return index_.contains(id); }
  std::size_t index_of(SegmentId id) const;

  /// Out-edges of a node index, sorted by target index.
  std::span<const Edge> out_edges(std::size_t index) const { return out_[index]; }
  std::int64_t weight(SegmentId from, SegmentId to) const;
  bool has_edge(SegmentId from, SegmentId to) const { return weight(from, to) > 0; }

  /// 0/1 adjacency over node indices (row = from).
  Eigen::MatrixXd adjacency() const;

 private:
  std::vector<SegmentId> nodes_;
  std::unordered_map<SegmentId, std::size_t> index_;
  std::vector<std::vector<Edge>> out_;
};

/// Counts every consecutive segment pair in the corpus. Nodes are the
/// segments seen in the corpus plus any listed in `extra_nodes`.
UTGraph build_utgraph(const Corpus& corpus, std::span<const SegmentId> extra_nodes = {});

/// |R| x D segment representation, one row per segment id, rows ordered by
/// ascending id. Rows are nonzero and pairwise distinct.
class SegmentEmbeddingTable {
 public:
  SegmentEmbeddingTable() = default;
  /// Throws InvalidArgument on duplicate ids, zero rows, or duplicate rows.
  SegmentEmbeddingTable(std::vector<SegmentId> ids, Eigen::MatrixXd rows);

  std::size_t rows() const { return ids_.size(); }
  int dim() const { return static_cast<int>(matrix_.cols()); }
  std::span<const SegmentId> ids() const { return ids_; }
  SegmentId id(std::size_t row) const { return ids_[row]; }
  bool contains(SegmentId id) const { return index_.contains(id); }
  std::size_t row_of(SegmentId id) const;
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  /// Rows scaled to unit norm.
  const Eigen::MatrixXd& normalized() const { return normalized_; }

 private:
  std::vector<SegmentId> ids_;
  std::unordered_map<SegmentId, std::size_t> index_;
  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd normalized_;
};

struct Node2VecConfig {
  int dim = 64;
  int walks_per_node = 100;
  int walk_length = 80;
  int window = 10;
  /// Passes of skip-gram training over the walk corpus.
  int iterations = 1000;
  int negatives = 5;
  double learning_rate = 0.025;
  double return_p = 1.0;
  double inout_q = 1.0;
  /// When positive, the trained table is rescaled so its entries have this
  /// root mean square. Cosine similarities are unchanged.
  double target_rms = 0.0;
  std::uint64_t seed = 1;
};

struct PretrainStats {
  int isolated_nodes = 0;
  std::int64_t walk_tokens = 0;
};

/// Weighted second-order random walks over the graph, then skip-gram with
/// negative sampling (unigram^0.75 noise, linearly decaying learning rate).
/// Single-threaded and deterministic under `cfg.seed`.
SegmentEmbeddingTable pretrain_embeddings(const UTGraph& g, const Node2VecConfig& cfg,
                                          PretrainStats* stats = nullptr);

/// Walks used by `pretrain_embeddings`, as node indices. Exposed for tests.
std::vector<std::vector<std::size_t>> generate_walks(const UTGraph& g, const Node2VecConfig& cfg);

/// Binary embedding file: text line `#emb v1 rows=<R> dim=<D> ids=<id,...>`
/// then R*D little-endian float32 values, row-major.
void save_embeddings(const SegmentEmbeddingTable& table, const std::filesystem::path& path);
SegmentEmbeddingTable load_embeddings(const std::filesystem::path& path);

}  // namespace rntraj
