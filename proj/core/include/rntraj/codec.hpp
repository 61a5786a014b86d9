#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rntraj/roadnet.hpp"
#include "rntraj/trajectory.hpp"
#include "rntraj/utgraph.hpp"

namespace rntraj {

/// T x (D+1): D embedding channels followed by the ratio channel 2r - 1.
using VectorizedTrajectory = Eigen::MatrixXd;

VectorizedTrajectory vectorize(const RNTraj& traj, const SegmentEmbeddingTable& table);

/// Cosine similarity of every row of `segment_part` (T x D) against every
/// embedding row: T x |R|. Throws DecodeError on a zero-norm row.
Eigen::MatrixXd cosine_similarity(const Eigen::MatrixXd& segment_part, const SegmentEmbeddingTable& table);

/// Per-row argmax of the cosine similarity (lowest row on ties), as table
/// row indices.
std::vector<std::size_t> nearest_rows(const Eigen::MatrixXd& segment_part, const SegmentEmbeddingTable& table);

/// (x + 1) / 2 clamped to [0, 1].
double ratio_of_channel(double x);

/// Segment ids and ratios only; no network required.
RNTraj decode_rntraj(const VectorizedTrajectory& x, const SegmentEmbeddingTable& table);

struct DecodedTrajectory {
  RNTraj traj;
  std::vector<LonLat> gps;
};

DecodedTrajectory decode(const VectorizedTrajectory& x, const SegmentEmbeddingTable& table, const RoadNetwork& net);

}  // namespace rntraj
