#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rntraj/roadnet.hpp"
#include "rntraj/trajectory.hpp"
#include "rntraj/utgraph.hpp"

namespace rntraj {

/// Probability masses over either continuous bins (`edges` has one more
/// entry than `mass`) or discrete categories (`categories` parallels
/// `mass`).
struct Histogram {
  std::vector<double> edges;
  std::vector<std::int64_t> categories;
  std::vector<double> mass;
};

/// Jensen-Shannon divergence in bits, so the result lies in [0, 1].
/// Throws InvalidArgument when the two histograms are binned differently.
double jsd(const Histogram& p, const Histogram& q);

/// `bins` equal-width bins spanning the pooled min..max of both samples.
std::vector<double> pooled_edges(const std::vector<double>& a, const std::vector<double>& b, int bins);
Histogram histogram(const std::vector<double>& values, const std::vector<double>& edges);

enum class DistanceMode { kNetwork, kStraightLine };

/// Distance between consecutive trajectory points. Along the network it is
/// the rest of the first segment, the shortest intersection path, then the
/// start of the second segment; pairs with no route fall back to the
/// straight line.
class GapDistance {
 public:
  explicit GapDistance(const RoadNetwork& net, DistanceMode mode = DistanceMode::kNetwork);

  /// One entry per adjacent pair.
  std::vector<double> gaps(const RNTraj& traj) const;

 private:
  double node_distance(std::size_t from, std::size_t to) const;

  const RoadNetwork& net_;
  DistanceMode mode_;
  mutable std::mutex mutex_;
  mutable std::map<std::size_t, std::shared_ptr<const std::vector<double>>> from_node_;
};

/// Equirectangular distance in meters.
double straight_line_m(const LonLat& a, const LonLat& b);

struct MetricOptions {
  int bins = 100;
  double grid_m = 50.0;
  DistanceMode distance = DistanceMode::kNetwork;
  int workers = 1;
};

double metric_td(const Corpus& gen, const Corpus& ref, const RoadNetwork& net, const MetricOptions& opts = {});
double metric_sd(const Corpus& gen, const Corpus& ref, const RoadNetwork& net, const MetricOptions& opts = {});
double metric_gpd(const Corpus& gen, const Corpus& ref, const RoadNetwork& net, const MetricOptions& opts = {});
double metric_rs(const Corpus& gen, const Corpus& ref);

/// Share of adjacent pairs that are graph edges, in percent.
double rsc(const RNTraj& traj, const UTGraph& g);
/// Mean of `rsc` over the corpus.
double mean_rsc(const Corpus& corpus, const UTGraph& g);

/// Cell masses of reconstructed GPS points on a grid of `cell_m` squares
/// anchored at (lon0, lat0). Row y, column x is mass[y * nx + x].
struct GridDensity {
  double lon0 = 0.0;
  double lat0 = 0.0;
  double cell_m = 50.0;
  int nx = 0;
  int ny = 0;
  std::vector<double> mass;
};

/// Both corpora rasterized over their shared bounding box.
std::pair<GridDensity, GridDensity> grid_densities(const Corpus& gen, const Corpus& ref, const RoadNetwork& net,
                                                   double cell_m);
void write_heatmap_csv(const GridDensity& d, const std::filesystem::path& path);

struct MetricReport {
  double jsd_td = 0.0;
  double jsd_sd = 0.0;
  double jsd_gpd = 0.0;
  double jsd_rs = 0.0;
  double rsc = 0.0;
};

/// RSC is measured against the graph of the reference corpus.
MetricReport evaluate(const Corpus& gen, const Corpus& ref, const RoadNetwork& net, const MetricOptions& opts = {});
/// CSV `metric,value`.
void write_report(const MetricReport& r, const std::filesystem::path& path);
std::string report_to_string(const MetricReport& r);

}  // namespace rntraj
