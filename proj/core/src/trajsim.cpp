#include "rntraj/trajsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <queue>
#include <string>
#include <thread>

#include "rntraj/error.hpp"
#include "rntraj/parallel.hpp"
#include "rntraj/random.hpp"

namespace rntraj {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RNTRAJ_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RNTraj encode_moving_ratios(const PathTrace& trace, const RoadNetwork& net, EncodeStats* stats) {
  RNTraj out;
  out.points.reserve(trace.samples.size());
  for (std::size_t t = 0; t < trace.samples.size(); ++t) {
    const auto& s = trace.samples[t];
    const auto& seg = net.segment(s.segment);
    if (s.offset_m < 0.0 || s.offset_m > seg.length_m) {
      throw InvalidArgument("sample " + std::to_string(t) + " offset outside its segment");
    }
    double r = 0.0;
    if (t == 0 || s.segment != trace.samples[t - 1].segment) {
      if (t > 0 && !net.is_successor(trace.samples[t - 1].segment, s.segment)) {
        throw InvalidArgument("samples " + std::to_string(t - 1) + " and " + std::to_string(t) +
                              " are not on consecutive segments");
      }
      r = s.offset_m / seg.length_m;
    } else {
      const double prev = trace.samples[t - 1].offset_m;
      if (s.offset_m < prev) {
        throw InvalidArgument("sample " + std::to_string(t) + " moves backwards on its segment");
      }
      const double remaining = seg.length_m - prev;
      if (remaining <= 0.0) {
        r = 1.0;
        if (stats) ++stats->clamped_at_segment_end;
      } else {
        r = (s.offset_m - prev) / remaining;
      }
    }
    out.points.push_back({s.segment, std::clamp(r, 0.0, 1.0)});
  }
  return out;
}

std::vector<SegmentId> shortest_segment_path(const RoadNetwork& net, SegmentId from, SegmentId to) {
  const auto segs = net.segments();
  const std::size_t n = segs.size();
  const std::size_t src = net.segment_index(from);
  const std::size_t dst = net.segment_index(to);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, n);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[src] = 0.0;
  queue.emplace(0.0, src);
  while (!queue.empty()) {
    auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    if (u == dst) break;
    for (SegmentId next : net.successors(segs[u].id)) {
      const std::size_t v = net.segment_index(next);
      const double nd = d + segs[v].length_m;
      if (nd < dist[v]) {
        dist[v] = nd;
        parent[v] = u;
        queue.emplace(nd, v);
      }
    }
  }
  if (!std::isfinite(dist[dst])) return {};
  std::vector<SegmentId> path;
  for (std::size_t v = dst; v != n; v = parent[v]) path.push_back(segs[v].id);
  std::reverse(path.begin(), path.end());
  return path;
}

namespace {

void validate(const RoadNetwork& net, const SimulationConfig& cfg) {
  if (cfg.n_traj < 1) throw InvalidArgument("simulation needs n_traj >= 1 (empty corpus)");
  if (cfg.min_length < 2 || cfg.max_length < cfg.min_length) {
    throw InvalidArgument("trajectory length range must satisfy 2 <= min <= max");
  }
  if (!(cfg.speed.mean_mps > 0.0) || cfg.speed.jitter < 0.0 || cfg.speed.jitter >= 1.0) {
    throw InvalidArgument("speed model needs mean > 0 and jitter in [0, 1)");
  }
  if (!(cfg.interval_s > 0.0)) throw InvalidArgument("sampling interval must be positive");
  if (net.segments().size() < 2) throw RoutingError("network has fewer than two segments");
  const double max_step = cfg.interval_s * cfg.speed.mean_mps * (1.0 + cfg.speed.jitter);
  if (max_step >= net.min_segment_length()) {
    throw InvalidArgument("sampling interval and speed allow crossing more than one segment per interval");
  }
}

SimulatedTrip simulate_one(const RoadNetwork& net, const SimulationConfig& cfg, std::uint64_t index) {
  Rng rng(derive_seed(cfg.seed, index));
  const auto segs = net.segments();
  std::uniform_int_distribution<int> length_dist(cfg.min_length, cfg.max_length);
  std::uniform_int_distribution<std::size_t> seg_dist(0, segs.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);

  const int T = length_dist(rng);
  for (int attempt = 0; attempt < cfg.max_route_attempts; ++attempt) {
    const std::size_t o = seg_dist(rng);
    std::size_t d = seg_dist(rng);
    if (d == o) continue;
    const auto route = shortest_segment_path(net, segs[o].id, segs[d].id);
    if (route.empty()) continue;

    std::vector<double> starts;  // cumulative distance at each route segment's start
    double total = 0.0;
    for (SegmentId id : route) {
      starts.push_back(total);
      total += net.segment(id).length_m;
    }
    std::vector<double> positions(static_cast<std::size_t>(T));
    positions[0] = unit(rng) * net.segment(route.front()).length_m;
    for (int k = 1; k < T; ++k) {
      const double speed = cfg.speed.mean_mps * (1.0 + cfg.speed.jitter * sym(rng));
      positions[k] = positions[k - 1] + speed * cfg.interval_s;
    }
    if (positions.back() > total) continue;

    PathTrace trace;
    std::size_t j = 0;
    for (double pos : positions) {
      while (j + 1 < route.size() && pos >= starts[j + 1]) ++j;
      const double len = net.segment(route[j]).length_m;
      trace.samples.push_back({route[j], std::min(pos - starts[j], len)});
    }
    SimulatedTrip trip;
    trip.traj = encode_moving_ratios(trace, net);
    trip.trace = std::move(trace);
    return trip;
  }
  throw RoutingError("no route long enough for a trajectory of length " + std::to_string(T) + " after " +
                     std::to_string(cfg.max_route_attempts) + " attempts");
}

}  // namespace

std::vector<SimulatedTrip> simulate_trips(const RoadNetwork& net, const SimulationConfig& cfg) {
  validate(net, cfg);
  std::vector<SimulatedTrip> trips(static_cast<std::size_t>(cfg.n_traj));
  parallel_for(trips.size(), cfg.workers, [&](std::size_t i) { trips[i] = simulate_one(net, cfg, i); });
  return trips;
}

Corpus simulate_corpus(const RoadNetwork& net, const SimulationConfig& cfg) {
  auto trips = simulate_trips(net, cfg);
  Corpus corpus;
  corpus.reserve(trips.size());
  for (auto& trip : trips) corpus.push_back(std::move(trip.traj));
  return corpus;
}

}  // namespace rntraj
