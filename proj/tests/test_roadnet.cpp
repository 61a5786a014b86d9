#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "rntraj/error.hpp"
#include "rntraj/roadnet.hpp"

namespace fs = std::filesystem;
using namespace rntraj;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("rntraj_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

RoadNetwork unit_segment() {
  return RoadNetwork({{1, 0.0, 0.0}, {2, 1.0, 0.0}}, {{7, 1, 2, 100.0}}, "unit");
}

}  // namespace

TEST(RoadNetwork, LoadsMinimalFiles) {
  auto dir = scratch("minimal");
  write_file(dir / "nodes.csv", "id,lon,lat\n1,0,0\n2,0.001,0\n");
  write_file(dir / "edges.csv", "id,start,end,length_m\n10,1,2,100\n");
  const auto net = load_network(dir);
  EXPECT_EQ(net.intersections().size(), 2u);
  EXPECT_EQ(net.segments().size(), 1u);
  EXPECT_DOUBLE_EQ(net.segment(10).length_m, 100.0);
}

TEST(RoadNetwork, RejectsDanglingEndpoint) {
  auto dir = scratch("dangling");
  write_file(dir / "nodes.csv", "id,lon,lat\n1,0,0\n2,0.001,0\n");
  write_file(dir / "edges.csv", "id,start,end,length_m\n10,1,3,100\n");
  EXPECT_THROW(load_network(dir), UnknownId);
}

TEST(RoadNetwork, RejectsBadTables) {
  auto dir = scratch("bad");
  write_file(dir / "nodes.csv", "id,lon,lat\n1,0,0\n2,0.001,0\n");
  write_file(dir / "edges.csv", "id,start,end,length_m\n10,1,2,0\n");
  EXPECT_THROW(load_network(dir), InvalidArgument);
  write_file(dir / "edges.csv", "id,start,end,length_m\n10,1,2,abc\n");
  EXPECT_THROW(load_network(dir), ParseError);
  write_file(dir / "edges.csv", "id,start,end\n10,1,2\n");
  EXPECT_THROW(load_network(dir), ParseError);
  EXPECT_THROW(RoadNetwork({{1, 0, 0}}, {{1, 1, 1, 5.0}}), InvalidArgument);
  EXPECT_THROW(RoadNetwork({{1, 0, 0}, {1, 1, 1}}, {}), InvalidArgument);
}

TEST(RoadNetwork, GridCounts) {
  const auto g2 = generate_grid_network(2, 2, 100);
  EXPECT_EQ(g2.intersections().size(), 4u);
  EXPECT_EQ(g2.segments().size(), 8u);
  for (const auto& s : g2.segments()) EXPECT_EQ(s.length_m, 100.0);
  const auto g3 = generate_grid_network(3, 3, 50);
  EXPECT_EQ(g3.intersections().size(), 9u);
  EXPECT_EQ(g3.segments().size(), 24u);
  EXPECT_THROW(generate_grid_network(1, 3, 50), InvalidArgument);
  EXPECT_THROW(generate_grid_network(3, 3, 0), InvalidArgument);
}

TEST(RoadNetwork, AdjacencyMatchesEndpoints) {
  const auto net = generate_grid_network(4, 5, 80);
  for (const auto& a : net.segments()) {
    for (const auto& b : net.segments()) {
      EXPECT_EQ(net.is_successor(a.id, b.id), a.end == b.start) << a.id << "->" << b.id;
    }
  }
}

TEST(RoadNetwork, GridRoundTripsThroughFiles) {
  const auto net = generate_grid_network(3, 3, 50);
  auto dir = scratch("grid_rt");
  save_network(net, dir);
  EXPECT_EQ(load_network(dir), net);
}

TEST(GpsOfRntraj, HandExecutedExample) {
  const auto net = unit_segment();
  const auto gps = gps_of_rntraj({{{7, 0.3}, {7, 0.5}}}, net);
  ASSERT_EQ(gps.size(), 2u);
  EXPECT_NEAR(gps[0].lon, 0.3, 1e-15);
  EXPECT_NEAR(gps[1].lon, 0.65, 1e-15);
  EXPECT_EQ(gps[1].lat, 0.0);
}

TEST(GpsOfRntraj, EndpointsAtZeroAndOne) {
  const auto net = generate_grid_network(3, 3, 100);
  for (const auto& s : net.segments()) {
    const auto gps = gps_of_rntraj({{{s.id, 0.0}}}, net);
    EXPECT_EQ(gps[0].lon, net.intersection(s.start).lon);
    EXPECT_EQ(gps[0].lat, net.intersection(s.start).lat);
    const auto end = gps_of_rntraj({{{s.id, 1.0}}}, net);
    EXPECT_EQ(end[0].lon, net.intersection(s.end).lon);
    EXPECT_EQ(end[0].lat, net.intersection(s.end).lat);
  }
}

TEST(GpsOfRntraj, Errors) {
  const auto net = unit_segment();
  EXPECT_THROW(gps_of_rntraj({{{8, 0.5}}}, net), UnknownId);
  EXPECT_THROW(gps_of_rntraj({{{7, 1.5}}}, net), InvalidArgument);
  EXPECT_THROW(gps_of_rntraj({{{7, -0.1}}}, net), InvalidArgument);
}

TEST(GpsOfRntraj, PointsStayOnTheirSegmentAndFractionsGrow) {
  const auto net = generate_grid_network(3, 3, 100);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    RNTraj t;
    SegmentId seg = net.segments()[rng() % net.segments().size()].id;
    for (int k = 0; k < 12; ++k) {
      if (k > 0 && u(rng) < 0.3) {
        auto next = net.successors(seg);
        seg = next[rng() % next.size()];
      }
      t.points.push_back({seg, u(rng)});
    }
    const auto gps = gps_of_rntraj(t, net);
    const auto frac = interpolation_fractions(t);
    ASSERT_EQ(gps.size(), t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto& s = net.segment(t.points[i].segment);
      const auto& a = net.intersection(s.start);
      const auto& b = net.intersection(s.end);
      EXPECT_GE(gps[i].lon, std::min(a.lon, b.lon) - 1e-15);
      EXPECT_LE(gps[i].lon, std::max(a.lon, b.lon) + 1e-15);
      EXPECT_GE(gps[i].lat, std::min(a.lat, b.lat) - 1e-15);
      EXPECT_LE(gps[i].lat, std::max(a.lat, b.lat) + 1e-15);
      if (i > 0 && t.points[i].segment == t.points[i - 1].segment) EXPECT_GE(frac[i], frac[i - 1]);
    }
  }
}
