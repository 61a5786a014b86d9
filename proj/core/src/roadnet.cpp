#include "rntraj/roadnet.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "csv.hpp"
#include "rntraj/error.hpp"

namespace rntraj {

RoadNetwork::RoadNetwork(std::vector<Intersection> intersections, std::vector<RoadSegment> segments,
                         std::string name)
    : name_(std::move(name)), intersections_(std::move(intersections)), segments_(std::move(segments)) {
  for (std::size_t i = 0; i < intersections_.size(); ++i) {
    if (!node_index_.emplace(intersections_[i].id, i).second) {
      throw InvalidArgument("duplicate intersection id " + std::to_string(intersections_[i].id));
    }
  }
  min_length_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!seg_index_.emplace(s.id, i).second) {
      throw InvalidArgument("duplicate segment id " + std::to_string(s.id));
    }
    if (!node_index_.contains(s.start) || !node_index_.contains(s.end)) {
      throw UnknownId("segment " + std::to_string(s.id) + " references an unknown intersection");
    }
    if (s.start == s.end) {
      throw InvalidArgument("segment " + std::to_string(s.id) + " starts and ends at the same intersection");
    }
    if (!(s.length_m > 0.0)) {
      throw InvalidArgument("segment " + std::to_string(s.id) + " has non-positive length");
    }
    min_length_ = std::min(min_length_, s.length_m);
  }

  std::unordered_map<NodeId, std::vector<SegmentId>> leaving;
  for (const auto& s : segments_) leaving[s.start].push_back(s.id);
  out_adjacency_.resize(segments_.size());
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (auto it = leaving.find(segments_[i].end); it != leaving.end()) {
      out_adjacency_[i] = it->second;
      std::sort(out_adjacency_[i].begin(), out_adjacency_[i].end());
    }
  }
}

std::size_t RoadNetwork::segment_index(SegmentId id) const {
  auto it = seg_index_.find(id);
  if (it == seg_index_.end()) throw UnknownId("unknown segment id " + std::to_string(id));
  return it->second;
}

std::size_t RoadNetwork::intersection_index(NodeId id) const {
  auto it = node_index_.find(id);
  if (it == node_index_.end()) throw UnknownId("unknown intersection id " + std::to_string(id));
  return it->second;
}

const RoadSegment& RoadNetwork::segment(SegmentId id) const { return segments_[segment_index(id)]; }

const Intersection& RoadNetwork::intersection(NodeId id) const {
  return intersections_[intersection_index(id)];
}

std::span<const SegmentId> RoadNetwork::successors(SegmentId id) const {
  return out_adjacency_[segment_index(id)];
}

bool RoadNetwork::is_successor(SegmentId from, SegmentId to) const {
  const auto succ = successors(from);
  return std::binary_search(succ.begin(), succ.end(), to);
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void expect_header(const std::vector<std::string>& lines, std::string_view header,
                   const std::filesystem::path& path) {
  if (lines.empty() || detail::trim(lines.front()) != header) {
    throw ParseError(path.string() + ": expected header '" + std::string(header) + "'");
  }
}

}  // namespace

RoadNetwork load_network(const std::filesystem::path& dir) {
  const auto nodes_path = dir / "nodes.csv";
  const auto edges_path = dir / "edges.csv";
  const auto node_lines = read_lines(nodes_path);
  const auto edge_lines = read_lines(edges_path);
  expect_header(node_lines, "id,lon,lat", nodes_path);
  expect_header(edge_lines, "id,start,end,length_m", edges_path);

  std::vector<Intersection> nodes;
  for (std::size_t i = 1; i < node_lines.size(); ++i) {
    if (detail::trim(node_lines[i]).empty()) continue;
    const auto ctx = nodes_path.string() + ":" + std::to_string(i + 1);
    const auto f = detail::split(node_lines[i], ',');
    if (f.size() != 3) throw ParseError(ctx + ": expected 3 fields");
    nodes.push_back({detail::parse_number<NodeId>(f[0], ctx), detail::parse_number<double>(f[1], ctx),
                     detail::parse_number<double>(f[2], ctx)});
  }
  std::vector<RoadSegment> edges;
  for (std::size_t i = 1; i < edge_lines.size(); ++i) {
    if (detail::trim(edge_lines[i]).empty()) continue;
    const auto ctx = edges_path.string() + ":" + std::to_string(i + 1);
    const auto f = detail::split(edge_lines[i], ',');
    if (f.size() != 4) throw ParseError(ctx + ": expected 4 fields");
    edges.push_back({detail::parse_number<SegmentId>(f[0], ctx), detail::parse_number<NodeId>(f[1], ctx),
                     detail::parse_number<NodeId>(f[2], ctx), detail::parse_number<double>(f[3], ctx)});
  }
  auto name = std::filesystem::absolute(dir).lexically_normal().filename().string();
  if (name.empty()) name = "network";
  return RoadNetwork(std::move(nodes), std::move(edges), name);
}

void save_network(const RoadNetwork& net, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream nodes(dir / "nodes.csv", std::ios::binary);
  std::ofstream edges(dir / "edges.csv", std::ios::binary);
  if (!nodes || !edges) throw IoError("cannot write network files into " + dir.string());
  nodes << "id,lon,lat\n";
  for (const auto& n : net.intersections()) {
    nodes << n.id << ',' << detail::format_double(n.lon) << ',' << detail::format_double(n.lat) << '\n';
  }
  edges << "id,start,end,length_m\n";
  for (const auto& s : net.segments()) {
    edges << s.id << ',' << s.start << ',' << s.end << ',' << detail::format_double(s.length_m) << '\n';
  }
}

RoadNetwork generate_grid_network(int rows, int cols, double spacing_m) {
  if (rows < 2 || cols < 2) throw InvalidArgument("grid needs at least 2 rows and 2 columns");
  if (!(spacing_m > 0.0)) throw InvalidArgument("grid spacing must be positive");

  const double step_deg = spacing_m / kMetersPerDegree;
  std::vector<Intersection> nodes;
  nodes.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      nodes.push_back({static_cast<NodeId>(r) * cols + c, c * step_deg, r * step_deg});
    }
  }

  std::vector<RoadSegment> segments;
  SegmentId next_id = 0;
  auto link = [&](NodeId a, NodeId b) {
    segments.push_back({next_id++, a, b, spacing_m});
    segments.push_back({next_id++, b, a, spacing_m});
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) link(static_cast<NodeId>(r) * cols + c, static_cast<NodeId>(r) * cols + c + 1);
  }
  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 0; c < cols; ++c) link(static_cast<NodeId>(r) * cols + c, static_cast<NodeId>(r + 1) * cols + c);
  }
  return RoadNetwork(std::move(nodes), std::move(segments),
                     "grid" + std::to_string(rows) + "x" + std::to_string(cols));
}

std::vector<double> interpolation_fractions(const RNTraj& traj) {
  std::vector<double> out;
  out.reserve(traj.size());
  double temp_r = 0.0;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const auto& q = traj.points[t];
    if (q.ratio < 0.0 || q.ratio > 1.0) {
      throw InvalidArgument("moving ratio " + detail::format_double(q.ratio) + " outside [0, 1] at point " +
                            std::to_string(t));
    }
    if (t == 0 || q.segment != traj.points[t - 1].segment) {
      temp_r = q.ratio;
    } else {
      temp_r = temp_r + (1.0 - temp_r) * q.ratio;
    }
    out.push_back(temp_r);
  }
  return out;
}

std::vector<LonLat> gps_of_rntraj(const RNTraj& traj, const RoadNetwork& net) {
  const auto fractions = interpolation_fractions(traj);
  std::vector<LonLat> out;
  out.reserve(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const auto& seg = net.segment(traj.points[t].segment);
    const auto& a = net.intersection(seg.start);
    const auto& b = net.intersection(seg.end);
    const double f = fractions[t];
    out.push_back({a.lon + (b.lon - a.lon) * f, a.lat + (b.lat - a.lat) * f});
  }
  return out;
}

}  // namespace rntraj
