#include "rntraj/codec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rntraj/error.hpp"

namespace rntraj {

VectorizedTrajectory vectorize(const RNTraj& traj, const SegmentEmbeddingTable& table) {
  const int d = table.dim();
  VectorizedTrajectory x(static_cast<Eigen::Index>(traj.size()), d + 1);
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const auto& p = traj.points[t];
    if (p.ratio < 0.0 || p.ratio > 1.0) throw InvalidArgument("ratio outside [0, 1] at point " + std::to_string(t));
    const auto row = static_cast<Eigen::Index>(t);
    x.row(row).head(d) = table.matrix().row(static_cast<Eigen::Index>(table.row_of(p.segment)));
    x(row, d) = 2.0 * p.ratio - 1.0;
  }
  return x;
}

Eigen::MatrixXd cosine_similarity(const Eigen::MatrixXd& segment_part, const SegmentEmbeddingTable& table) {
  if (segment_part.cols() != table.dim()) {
    throw InvalidArgument("segment channels (" + std::to_string(segment_part.cols()) +
                          ") do not match embedding dimension (" + std::to_string(table.dim()) + ")");
  }
  Eigen::MatrixXd unit = segment_part;
  for (Eigen::Index t = 0; t < unit.rows(); ++t) {
    const double norm = unit.row(t).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw DecodeError("generated row " + std::to_string(t) + " has zero or non-finite norm", static_cast<int>(t));
    }
    unit.row(t) /= norm;
  }
  return unit * table.normalized().transpose();
}

std::vector<std::size_t> nearest_rows(const Eigen::MatrixXd& segment_part, const SegmentEmbeddingTable& table) {
  const Eigen::MatrixXd s = cosine_similarity(segment_part, table);
  std::vector<std::size_t> out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index t = 0; t < s.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < s.cols(); ++i) {
      if (s(t, i) > s(t, best)) best = i;
    }
    out[static_cast<std::size_t>(t)] = static_cast<std::size_t>(best);
  }
  return out;
}

double ratio_of_channel(double x) { return std::clamp((x + 1.0) / 2.0, 0.0, 1.0); }

RNTraj decode_rntraj(const VectorizedTrajectory& x, const SegmentEmbeddingTable& table) {
  const int d = table.dim();
  if (x.cols() != d + 1) throw InvalidArgument("vectorized trajectory must have D+1 columns");
  const auto rows = nearest_rows(x.leftCols(d), table);
  RNTraj traj;
  traj.points.reserve(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    traj.points.push_back({table.id(rows[t]), ratio_of_channel(x(static_cast<Eigen::Index>(t), d))});
  }
  return traj;
}

DecodedTrajectory decode(const VectorizedTrajectory& x, const SegmentEmbeddingTable& table, const RoadNetwork& net) {
  DecodedTrajectory out;
  out.traj = decode_rntraj(x, table);
  out.gps = gps_of_rntraj(out.traj, net);
  return out;
}

}  // namespace rntraj
