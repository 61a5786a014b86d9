#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rntraj/trajectory.hpp"

namespace rntraj {

using NodeId = std::int64_t;

struct Intersection {
  NodeId id = 0;
  double lon = 0.0;
  double lat = 0.0;

  bool operator==(const Intersection&) const = default;
};

struct RoadSegment {
  SegmentId id = 0;
  NodeId start = 0;
  NodeId end = 0;
  double length_m = 0.0;

  bool operator==(const RoadSegment&) const = default;
};

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

/// Directed road graph. Immutable after construction; every accessor is
/// safe for concurrent readers.
class RoadNetwork {
 public:
  /// Validates the tables (unique ids, resolvable endpoints, start != end,
  /// positive lengths) and derives successor adjacency: segment b follows
  /// segment a when a.end == b.start.
  RoadNetwork(std::vector<Intersection> intersections, std::vector<RoadSegment> segments,
              std::string name = "network");

  const std::string& name() const { return name_; }
  std::span<const Intersection> intersections() const { return intersections_; }
  std::span<const RoadSegment> segments() const { return segments_; }

  bool has_segment(SegmentId id) const { return seg_index_.contains(id); }
  const RoadSegment& segment(SegmentId id) const;
  const Intersection& intersection(NodeId id) const;
  std::size_t segment_index(SegmentId id) const;
  std::size_t intersection_index(NodeId id) const;

  /// Segments that can be entered directly from the end of `id`.
  std::span<const SegmentId> successors(SegmentId id) const;
  bool is_successor(SegmentId from, SegmentId to) const;

  double min_segment_length() const { return min_length_; }

  bool operator==(const RoadNetwork& other) const {
    return intersections_ == other.intersections_ && segments_ == other.segments_;
  }

 private:
  std::string name_;
  std::vector<Intersection> intersections_;
  std::vector<RoadSegment> segments_;
  std::unordered_map<NodeId, std::size_t> node_index_;
  std::unordered_map<SegmentId, std::size_t> seg_index_;
  std::vector<std::vector<SegmentId>> out_adjacency_;
  double min_length_ = 0.0;
};

/// Meters per degree used for the synthetic lattice and for metric
/// rasterization (equatorial value of the WGS-84 ellipsoid, rounded).
inline constexpr double kMetersPerDegree = 111320.0;

/// Reads `<dir>/nodes.csv` (`id,lon,lat`) and `<dir>/edges.csv`
/// (`id,start,end,length_m`).
RoadNetwork load_network(const std::filesystem::path& dir);
void save_network(const RoadNetwork& net, const std::filesystem::path& dir);

/// rows x cols lattice anchored at (0, 0); every lattice edge becomes two
/// directed segments of `spacing_m` meters.
RoadNetwork generate_grid_network(int rows, int cols, double spacing_m);

/// Cumulative position along each point's segment, as a fraction of the
/// segment length, recovered by the running-ratio recurrence.
std::vector<double> interpolation_fractions(const RNTraj& traj);

/// GPS reconstruction of every point by linear interpolation between the
/// segment's start and end intersections.
std::vector<LonLat> gps_of_rntraj(const RNTraj& traj, const RoadNetwork& net);

}  // namespace rntraj
