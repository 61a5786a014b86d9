#pragma once

#include <cstdint>
#include <vector>

#include "rntraj/roadnet.hpp"
#include "rntraj/trajectory.hpp"

namespace rntraj {

struct TraceSample {
  SegmentId segment = 0;
  double offset_m = 0.0;  // distance from the segment's start intersection
};

/// Fixed-interval samples of a vehicle moving along the network.
struct PathTrace {
  std::vector<TraceSample> samples;
};

struct EncodeStats {
  /// Samples that stayed exactly at the end of their segment, where the
  /// remaining length is zero and the ratio was clamped to 1.
  int clamped_at_segment_end = 0;
};

/// Moving-ratio encoding of an on-network trace. A sample on a new segment
/// (or the first sample) gets offset / length; a later sample on the same
/// segment gets the newly travelled distance over the length still
/// untravelled at the previous sample.
///
/// Rejects traces that move backwards on a segment, skip a segment between
/// consecutive samples, or leave offsets outside [0, length].
RNTraj encode_moving_ratios(const PathTrace& trace, const RoadNetwork& net, EncodeStats* stats = nullptr);

struct SpeedModel {
  double mean_mps = 5.0;
  double jitter = 0.3;  // per-interval speed is mean * (1 + jitter * u), u ~ U[-1, 1]
};

struct SimulationConfig {
  int n_traj = 1000;
  int min_length = 15;
  int max_length = 25;
  SpeedModel speed;
  double interval_s = 5.0;
  int max_route_attempts = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
};

/// One simulated vehicle: the trace it produced and its encoding.
struct SimulatedTrip {
  PathTrace trace;
  RNTraj traj;
};

/// Samples `cfg.n_traj` trips. Each follows the shortest path between a
/// random origin and destination segment, starting at a random offset on
/// the origin, and records `T ~ U{min_length..max_length}` fixed-interval
/// samples. Trip i depends only on (seed, i), so the result does not depend
/// on the worker count.
std::vector<SimulatedTrip> simulate_trips(const RoadNetwork& net, const SimulationConfig& cfg);

Corpus simulate_corpus(const RoadNetwork& net, const SimulationConfig& cfg);

/// Shortest segment sequence from `from` to `to` (inclusive), by segment
/// length. Empty when `to` is unreachable.
std::vector<SegmentId> shortest_segment_path(const RoadNetwork& net, SegmentId from, SegmentId to);

}  // namespace rntraj
