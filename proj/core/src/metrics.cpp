#include "rntraj/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include "csv.hpp"
#include "rntraj/error.hpp"
#include "rntraj/parallel.hpp"

namespace rntraj {

double jsd(const Histogram& p, const Histogram& q) {
  if (p.mass.size() != q.mass.size() || p.edges != q.edges || p.categories != q.categories) {
    throw InvalidArgument("jsd: histograms use different binning");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.mass.size(); ++i) {
    const double a = p.mass[i];
    const double b = q.mass[i];
    if (a < 0.0 || b < 0.0) throw InvalidArgument("jsd: negative mass");
    const double m = 0.5 * (a + b);
    if (a > 0.0) d += 0.5 * a * std::log2(a / m);
    if (b > 0.0) d += 0.5 * b * std::log2(b / m);
  }
  return std::clamp(d, 0.0, 1.0);
}

std::vector<double> pooled_edges(const std::vector<double>& a, const std::vector<double>& b, int bins) {
  if (bins < 1) throw InvalidArgument("bin count must be positive");
  if (a.empty() || b.empty()) throw InvalidArgument("cannot bin an empty sample");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* v : {&a, &b}) {
    const auto [mn, mx] = std::minmax_element(v->begin(), v->end());
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
  }
  if (!(hi > lo)) hi = lo + 1.0;
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  edges.back() = hi;
  return edges;
}

Histogram histogram(const std::vector<double>& values, const std::vector<double>& edges) {
  if (edges.size() < 2) throw InvalidArgument("histogram needs at least one bin");
  if (values.empty()) throw InvalidArgument("cannot bin an empty sample");
  const auto bins = edges.size() - 1;
  Histogram h{edges, {}, std::vector<double>(bins, 0.0)};
  for (double v : values) {
    // Right-closed last bin; everything else is [lo, hi).
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    auto idx = static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    h.mass[static_cast<std::size_t>(idx)] += 1.0;
  }
  for (double& m : h.mass) m /= static_cast<double>(values.size());
  return h;
}

namespace {

Histogram categorical(const std::map<std::int64_t, double>& counts, const std::vector<std::int64_t>& categories) {
  Histogram h{{}, categories, std::vector<double>(categories.size(), 0.0)};
  double total = 0.0;
  for (const auto& [k, c] : counts) total += c;
  if (total <= 0.0) throw InvalidArgument("cannot build a distribution from an empty sample");
  for (std::size_t i = 0; i < categories.size(); ++i) {
    auto it = counts.find(categories[i]);
    if (it != counts.end()) h.mass[i] = it->second / total;
  }
  return h;
}

double categorical_jsd(const std::map<std::int64_t, double>& a, const std::map<std::int64_t, double>& b) {
  std::vector<std::int64_t> cats;
  for (const auto& [k, c] : a) cats.push_back(k);
  for (const auto& [k, c] : b) cats.push_back(k);
  std::sort(cats.begin(), cats.end());
  cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
  return jsd(categorical(a, cats), categorical(b, cats));
}

void require_nonempty(const Corpus& gen, const Corpus& ref) {
  if (gen.empty() || ref.empty()) throw InvalidArgument("metrics need non-empty corpora");
}

}  // namespace

double straight_line_m(const LonLat& a, const LonLat& b) {
  const double lat = 0.5 * (a.lat + b.lat) * std::numbers::pi / 180.0;
  const double dx = (b.lon - a.lon) * kMetersPerDegree * std::cos(lat);
  const double dy = (b.lat - a.lat) * kMetersPerDegree;
  return std::hypot(dx, dy);
}

GapDistance::GapDistance(const RoadNetwork& net, DistanceMode mode) : net_(net), mode_(mode) {}

double GapDistance::node_distance(std::size_t from, std::size_t to) const {
  if (from == to) return 0.0;
  std::shared_ptr<const std::vector<double>> dist;
  {
    std::lock_guard lock(mutex_);
    auto it = from_node_.find(from);
    if (it != from_node_.end()) dist = it->second;
  }
  if (!dist) {
    const auto n = net_.intersections().size();
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (const auto& s : net_.segments()) {
      adj[net_.intersection_index(s.start)].emplace_back(net_.intersection_index(s.end), s.length_m);
    }
    auto d = std::make_shared<std::vector<double>>(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    (*d)[from] = 0.0;
    heap.emplace(0.0, from);
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > (*d)[u]) continue;
      for (const auto& [v, w] : adj[u]) {
        if (du + w < (*d)[v]) {
          (*d)[v] = du + w;
          heap.emplace(du + w, v);
        }
      }
    }
    std::lock_guard lock(mutex_);
    dist = from_node_.emplace(from, std::move(d)).first->second;
  }
  return (*dist)[to];
}

std::vector<double> GapDistance::gaps(const RNTraj& traj) const {
  std::vector<double> out;
  if (traj.size() < 2) return out;
  out.reserve(traj.size() - 1);
  const auto fractions = interpolation_fractions(traj);
  const auto gps = gps_of_rntraj(traj, net_);
  for (std::size_t t = 1; t < traj.size(); ++t) {
    if (mode_ == DistanceMode::kStraightLine) {
      out.push_back(straight_line_m(gps[t - 1], gps[t]));
      continue;
    }
    const auto& a = net_.segment(traj.points[t - 1].segment);
    const auto& b = net_.segment(traj.points[t].segment);
    const double fa = fractions[t - 1];
    const double fb = fractions[t];
    if (a.id == b.id && fb >= fa) {
      out.push_back((fb - fa) * a.length_m);
      continue;
    }
    const double between = node_distance(net_.intersection_index(a.end), net_.intersection_index(b.start));
    if (std::isfinite(between)) {
      out.push_back((1.0 - fa) * a.length_m + between + fb * b.length_m);
    } else {
      out.push_back(straight_line_m(gps[t - 1], gps[t]));
    }
  }
  return out;
}

namespace {

std::vector<std::vector<double>> all_gaps(const Corpus& corpus, const GapDistance& dist, int workers) {
  std::vector<std::vector<double>> out(corpus.size());
  parallel_for(corpus.size(), workers, [&](std::size_t i) { out[i] = dist.gaps(corpus[i]); });
  return out;
}

}  // namespace

double metric_td(const Corpus& gen, const Corpus& ref, const RoadNetwork& net, const MetricOptions& opts) {
  require_nonempty(gen, ref);
  const GapDistance dist(net, opts.distance);
  auto totals = [&](const Corpus& c) {
    std::vector<double> out;
    for (const auto& g : all_gaps(c, dist, opts.workers)) {
      double s = 0.0;
      for (double v : g) s += v;
      out.push_back(s);
    }
    return out;
  };
  const auto a = totals(gen);
  const auto b = totals(ref);
  const auto edges = pooled_edges(a, b, opts.bins);
  return jsd(histogram(a, edges), histogram(b, edges));
}

double metric_sd(const Corpus& gen, const Corpus& ref, const RoadNetwork& net, const MetricOptions& opts) {
  require_nonempty(gen, ref);
  const GapDistance dist(net, opts.distance);
  auto pooled = [&](const Corpus& c) {
    std::vector<double> out;
    for (const auto& g : all_gaps(c, dist, opts.workers)) out.insert(out.end(), g.begin(), g.end());
    return out;
  };
  const auto a = pooled(gen);
  const auto b = pooled(ref);
  const auto edges = pooled_edges(a, b, opts.bins);
  return jsd(histogram(a, edges), histogram(b, edges));
}

std::pair<GridDensity, GridDensity> grid_densities(const Corpus& gen, const Corpus& ref, const RoadNetwork& net,
                                                   double cell_m) {
  if (!(cell_m > 0.0)) throw InvalidArgument("grid cell size must be positive");
  require_nonempty(gen, ref);
  std::vector<LonLat> pa;
  std::vector<LonLat> pb;
  for (const auto& t : gen) {
    const auto g = gps_of_rntraj(t, net);
    pa.insert(pa.end(), g.begin(), g.end());
  }
  for (const auto& t : ref) {
    const auto g = gps_of_rntraj(t, net);
    pb.insert(pb.end(), g.begin(), g.end());
  }
  if (pa.empty() || pb.empty()) throw InvalidArgument("metrics need at least one point per corpus");
  double lon0 = pa[0].lon, lon1 = pa[0].lon, lat0 = pa[0].lat, lat1 = pa[0].lat;
  for (const auto* pts : {&pa, &pb}) {
    for (const auto& p : *pts) {
      lon0 = std::min(lon0, p.lon);
      lon1 = std::max(lon1, p.lon);
      lat0 = std::min(lat0, p.lat);
      lat1 = std::max(lat1, p.lat);
    }
  }
  const double mx = kMetersPerDegree * std::cos(0.5 * (lat0 + lat1) * std::numbers::pi / 180.0);
  const double my = kMetersPerDegree;
  // Tolerance keeps points that sit on a cell boundary from splitting on rounding noise.
  constexpr double kNudge = 1e-9;
  const int nx = static_cast<int>(std::floor((lon1 - lon0) * mx / cell_m + kNudge)) + 1;
  const int ny = static_cast<int>(std::floor((lat1 - lat0) * my / cell_m + kNudge)) + 1;
  if (static_cast<double>(nx) * ny > 5e7) throw InvalidArgument("grid too fine for the bounding box");
  auto raster = [&](const std::vector<LonLat>& pts) {
    GridDensity d{lon0, lat0, cell_m, nx, ny, std::vector<double>(static_cast<std::size_t>(nx) * ny, 0.0)};
    for (const auto& p : pts) {
      const int x = std::clamp(static_cast<int>(std::floor((p.lon - lon0) * mx / cell_m + kNudge)), 0, nx - 1);
      const int y = std::clamp(static_cast<int>(std::floor((p.lat - lat0) * my / cell_m + kNudge)), 0, ny - 1);
      d.mass[static_cast<std::size_t>(y) * nx + x] += 1.0;
    }
    for (double& m : d.mass) m /= static_cast<double>(pts.size());
    return d;
  };
  return {raster(pa), raster(pb)};
}

double metric_gpd(const Corpus& gen, const Corpus& ref, const RoadNetwork& net, const MetricOptions& opts) {
  auto [a, b] = grid_densities(gen, ref, net, opts.grid_m);
  std::vector<std::int64_t> cells(a.mass.size());
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<std::int64_t>(i);
  return jsd(Histogram{{}, cells, std::move(a.mass)}, Histogram{{}, cells, std::move(b.mass)});
}

double metric_rs(const Corpus& gen, const Corpus& ref) {
  require_nonempty(gen, ref);
  auto counts = [](const Corpus& c) {
    std::map<std::int64_t, double> out;
    for (const auto& t : c) {
      for (const auto& p : t.points) out[p.segment] += 1.0;
    }
    return out;
  };
  return categorical_jsd(counts(gen), counts(ref));
}

double rsc(const RNTraj& traj, const UTGraph& g) {
  if (traj.size() < 2) throw InvalidArgument("RSC needs at least two points");
  std::size_t connected = 0;
  for (std::size_t t = 1; t < traj.size(); ++t) {
    if (g.has_edge(traj.points[t - 1].segment, traj.points[t].segment)) ++connected;
  }
  return 100.0 * static_cast<double>(connected) / static_cast<double>(traj.size() - 1);
}

double mean_rsc(const Corpus& corpus, const UTGraph& g) {
  if (corpus.empty()) throw InvalidArgument("RSC of an empty corpus");
  double s = 0.0;
  for (const auto& t : corpus) s += rsc(t, g);
  return s / static_cast<double>(corpus.size());
}

void write_heatmap_csv(const GridDensity& d, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# lon0=" << detail::format_double(d.lon0) << " lat0=" << detail::format_double(d.lat0)
      << " cell_m=" << detail::format_double(d.cell_m) << " rows=south_to_north\n";
  for (int y = 0; y < d.ny; ++y) {
    for (int x = 0; x < d.nx; ++x) {
      out << (x ? "," : "") << detail::format_double(d.mass[static_cast<std::size_t>(y) * d.nx + x]);
    }
    out << '\n';
  }
}

MetricReport evaluate(const Corpus& gen, const Corpus& ref, const RoadNetwork& net, const MetricOptions& opts) {
  MetricReport r;
  r.jsd_td = metric_td(gen, ref, net, opts);
  r.jsd_sd = metric_sd(gen, ref, net, opts);
  r.jsd_gpd = metric_gpd(gen, ref, net, opts);
  r.jsd_rs = metric_rs(gen, ref);
  r.rsc = mean_rsc(gen, build_utgraph(ref));
  return r;
}

std::string report_to_string(const MetricReport& r) {
  std::ostringstream out;
  out << "metric,value\n"
      << "jsd_td," << detail::format_double(r.jsd_td) << '\n'
      << "jsd_sd," << detail::format_double(r.jsd_sd) << '\n'
      << "jsd_gpd," << detail::format_double(r.jsd_gpd) << '\n'
      << "jsd_rs," << detail::format_double(r.jsd_rs) << '\n'
      << "rsc," << detail::format_double(r.rsc) << '\n';
  return out.str();
}

void write_report(const MetricReport& r, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << report_to_string(r);
}

}  // namespace rntraj
