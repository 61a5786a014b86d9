#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace rntraj {

using SegmentId = std::int64_t;

/// A point on the road network: the segment it lies on and the moving
/// ratio, i.e. newly travelled distance over the remaining untravelled
/// length of the segment at the previous point.
struct RNTrajPoint {
  SegmentId segment = 0;
  double ratio = 0.0;

  bool operator==(const RNTrajPoint&) const = default;
};

struct RNTraj {
  std::vector<RNTrajPoint> points;

  std::size_t size() const { return points.size(); }
  bool operator==(const RNTraj&) const = default;
};

using Corpus = std::vector<RNTraj>;

/// Number of trajectories per length, ordered by length.
using LengthCounts = std::map<int, int>;

inline LengthCounts length_counts(const Corpus& corpus) {
  LengthCounts counts;
  for (const auto& t : corpus) ++counts[static_cast<int>(t.size())];
  return counts;
}

}  // namespace rntraj
