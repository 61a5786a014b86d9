#include "rntraj/utgraph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "rntraj/error.hpp"
#include "rntraj/random.hpp"

namespace rntraj {

UTGraph::UTGraph(std::vector<SegmentId> nodes) : nodes_(std::move(nodes)) {
  std::sort(nodes_.begin(), nodes_.end());
  if (std::adjacent_find(nodes_.begin(), nodes_.end()) != nodes_.end()) {
    throw InvalidArgument("UTGraph node ids must be unique");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) index_.emplace(nodes_[i], i);
  out_.resize(nodes_.size());
}

std::size_t UTGraph::index_of(SegmentId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw UnknownId("segment " + std::to_string(id) + " is not a UTGraph node");
  return it->second;
}

void UTGraph::add_traversal(SegmentId from, SegmentId to, std::int64_t count) {
  if (count <= 0) throw InvalidArgument("traversal count must be positive");
  auto& edges = out_[index_of(from)];
  const std::size_t target = index_of(to);
  auto it = std::lower_bound(edges.begin(), edges.end(), target,
                             [](const Edge& e, std::size_t t) { return e.target < t; });
  if (it != edges.end() && it->target == target) {
    it->weight += count;
  } else {
    edges.insert(it, Edge{target, count});
  }
}

std::size_t UTGraph::num_edges() const {
  std::size_t n = 0;
  for (const auto& e : out_) n += e.size();
  return n;
}

std::int64_t UTGraph::total_weight() const {
  std::int64_t w = 0;
  for (const auto& edges : out_) {
    for (const auto& e : edges) w += e.weight;
  }
  return w;
}

std::int64_t UTGraph::weight(SegmentId from, SegmentId to) const {
  auto fi = index_.find(from);
  auto ti = index_.find(to);
  if (fi == index_.end() || ti == index_.end()) return 0;
  const auto& edges = out_[fi->second];
  auto it = std::lower_bound(edges.begin(), edges.end(), ti->second,
                             [](const Edge& e, std::size_t t) { return e.target < t; });
  return (it != edges.end() && it->target == ti->second) ? it->weight : 0;
}

Eigen::MatrixXd UTGraph::adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(num_nodes(), num_nodes());
  for (std::size_t i = 0; i < out_.size(); ++i) {
    for (const auto& e : out_[i]) a(i, e.target) = 1.0;
  }
  return a;
}

UTGraph build_utgraph(const Corpus& corpus, std::span<const SegmentId> extra_nodes) {
  if (corpus.empty()) throw InvalidArgument("cannot build a UTGraph from an empty corpus");
  std::set<SegmentId> ids(extra_nodes.begin(), extra_nodes.end());
  for (const auto& traj : corpus) {
    for (const auto& p : traj.points) ids.insert(p.segment);
  }
  UTGraph g(std::vector<SegmentId>(ids.begin(), ids.end()));
  for (const auto& traj : corpus) {
    for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
      g.add_traversal(traj.points[t].segment, traj.points[t + 1].segment);
    }
  }
  return g;
}

SegmentEmbeddingTable::SegmentEmbeddingTable(std::vector<SegmentId> ids, Eigen::MatrixXd rows)
    : ids_(std::move(ids)), matrix_(std::move(rows)) {
  if (static_cast<std::size_t>(matrix_.rows()) != ids_.size()) {
    throw InvalidArgument("embedding table has " + std::to_string(matrix_.rows()) + " rows for " +
                          std::to_string(ids_.size()) + " ids");
  }
  if (matrix_.cols() < 1) throw InvalidArgument("embedding dimension must be positive");
  // Keep rows ordered by id so that lowest-row tie-breaks mean lowest id.
  std::vector<std::size_t> order(ids_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids_[a] < ids_[b]; });
  if (!std::is_sorted(ids_.begin(), ids_.end())) {
    std::vector<SegmentId> sorted_ids(ids_.size());
    Eigen::MatrixXd sorted(matrix_.rows(), matrix_.cols());
    for (std::size_t i = 0; i < order.size(); ++i) {
      sorted_ids[i] = ids_[order[i]];
      sorted.row(static_cast<Eigen::Index>(i)) = matrix_.row(static_cast<Eigen::Index>(order[i]));
    }
    ids_ = std::move(sorted_ids);
    matrix_ = std::move(sorted);
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw InvalidArgument("duplicate embedding id " + std::to_string(ids_[i]));
    }
  }
  normalized_ = matrix_;
  for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
    const double norm = matrix_.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw InvalidArgument("embedding row for segment " + std::to_string(ids_[i]) + " is zero or non-finite");
    }
    normalized_.row(i) /= norm;
  }
  // Duplicate rows would make argmax decoding ambiguous.
  std::vector<std::size_t> by_row(ids_.size());
  for (std::size_t i = 0; i < by_row.size(); ++i) by_row[i] = i;
  auto row_less = [&](std::size_t a, std::size_t b) {
    for (Eigen::Index c = 0; c < matrix_.cols(); ++c) {
      if (matrix_(a, c) != matrix_(b, c)) return matrix_(a, c) < matrix_(b, c);
    }
    return false;
  };
  std::sort(by_row.begin(), by_row.end(), row_less);
  for (std::size_t i = 1; i < by_row.size(); ++i) {
    if (!row_less(by_row[i - 1], by_row[i])) {
      throw InvalidArgument("duplicate embedding rows for segments " + std::to_string(ids_[by_row[i - 1]]) +
                            " and " + std::to_string(ids_[by_row[i]]));
    }
  }
}

std::size_t SegmentEmbeddingTable::row_of(SegmentId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw UnknownId("segment " + std::to_string(id) + " has no embedding");
  return it->second;
}

namespace {

std::size_t sample_index(const std::vector<double>& cumulative, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, cumulative.back());
  const double u = unit(rng);
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

}  // namespace

std::vector<std::vector<std::size_t>> generate_walks(const UTGraph& g, const Node2VecConfig& cfg) {
  if (g.num_nodes() == 0) throw InvalidArgument("cannot walk an empty UTGraph");
  if (cfg.walks_per_node < 1 || cfg.walk_length < 1) throw InvalidArgument("walk counts must be positive");
  if (!(cfg.return_p > 0.0) || !(cfg.inout_q > 0.0)) throw InvalidArgument("node2vec p and q must be positive");

  Rng rng(derive_seed(cfg.seed, 0x77616c6bULL));
  std::vector<std::size_t> order(g.num_nodes());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto has_edge_idx = [&](std::size_t from, std::size_t to) {
    const auto edges = g.out_edges(from);
    auto it = std::lower_bound(edges.begin(), edges.end(), to,
                               [](const UTGraph::Edge& e, std::size_t t) { return e.target < t; });
    return it != edges.end() && it->target == to;
  };

  std::vector<std::vector<std::size_t>> walks;
  walks.reserve(order.size() * static_cast<std::size_t>(cfg.walks_per_node));
  std::vector<double> cumulative;
  for (int round = 0; round < cfg.walks_per_node; ++round) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start : order) {
      std::vector<std::size_t> walk{start};
      while (static_cast<int>(walk.size()) < cfg.walk_length) {
        const std::size_t cur = walk.back();
        const auto edges = g.out_edges(cur);
        if (edges.empty()) break;
        cumulative.clear();
        double acc = 0.0;
        for (const auto& e : edges) {
          double w = static_cast<double>(e.weight);
          if (walk.size() >= 2) {
            const std::size_t prev = walk[walk.size() - 2];
            if (e.target == prev) {
              w /= cfg.return_p;
            } else if (!has_edge_idx(prev, e.target)) {
              w /= cfg.inout_q;
            }
          }
          acc += w;
          cumulative.push_back(acc);
        }
        walk.push_back(edges[sample_index(cumulative, rng)].target);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

SegmentEmbeddingTable pretrain_embeddings(const UTGraph& g, const Node2VecConfig& cfg, PretrainStats* stats) {
  if (g.num_nodes() == 0) throw InvalidArgument("cannot pretrain on an empty UTGraph");
  if (cfg.dim < 2) throw InvalidArgument("embedding dimension must be at least 2");
  if (cfg.window < 1 || cfg.iterations < 1 || cfg.negatives < 0) {
    throw InvalidArgument("window and iterations must be positive");
  }
  if (!(cfg.target_rms >= 0.0) || !std::isfinite(cfg.target_rms)) {
    throw InvalidArgument("target RMS must be a non-negative number");
  }
  const auto walks = generate_walks(g, cfg);
  const std::size_t n = g.num_nodes();
  const std::size_t dim = static_cast<std::size_t>(cfg.dim);

  std::vector<double> counts(n, 0.0);
  std::int64_t tokens = 0;
  for (const auto& w : walks) {
    for (auto v : w) counts[v] += 1.0;
    tokens += static_cast<std::int64_t>(w.size());
  }
  if (stats) {
    stats->walk_tokens = tokens;
    stats->isolated_nodes = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (g.out_edges(i).empty()) ++stats->isolated_nodes;
    }
  }
  std::vector<double> noise_weights(n);
  for (std::size_t i = 0; i < n; ++i) noise_weights[i] = std::pow(counts[i], 0.75);
  std::discrete_distribution<std::size_t> noise(noise_weights.begin(), noise_weights.end());

  Rng rng(derive_seed(cfg.seed, 0x73676e73ULL));
  std::uniform_real_distribution<double> init(-0.5 / cfg.dim, 0.5 / cfg.dim);
  std::vector<double> syn0(n * dim);
  std::vector<double> syn1(n * dim, 0.0);
  for (auto& v : syn0) v = init(rng);
  std::vector<double> grad(dim);

  const double total = static_cast<double>(cfg.iterations) * static_cast<double>(tokens);
  double processed = 0.0;
  for (int it = 0; it < cfg.iterations; ++it) {
    for (const auto& walk : walks) {
      for (std::size_t i = 0; i < walk.size(); ++i, processed += 1.0) {
        const double lr = cfg.learning_rate * std::max(1e-4, 1.0 - processed / total);
        double* in = &syn0[walk[i] * dim];
        const std::size_t lo = i >= static_cast<std::size_t>(cfg.window) ? i - cfg.window : 0;
        const std::size_t hi = std::min(walk.size() - 1, i + static_cast<std::size_t>(cfg.window));
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const std::size_t positive = walk[j];
          std::fill(grad.begin(), grad.end(), 0.0);
          for (int k = 0; k <= cfg.negatives; ++k) {
            std::size_t target = positive;
            double label = 1.0;
            if (k > 0) {
              target = noise(rng);
              if (target == positive) continue;
              label = 0.0;
            }
            double* out = &syn1[target * dim];
            double f = 0.0;
            for (std::size_t d = 0; d < dim; ++d) f += in[d] * out[d];
            const double g_scale = (label - 1.0 / (1.0 + std::exp(-f))) * lr;
            for (std::size_t d = 0; d < dim; ++d) {
              grad[d] += g_scale * out[d];
              out[d] += g_scale * in[d];
            }
          }
          for (std::size_t d = 0; d < dim; ++d) in[d] += grad[d];
        }
      }
    }
  }

  double scale = 1.0;
  if (cfg.target_rms > 0.0) {
    double sq = 0.0;
    for (double v : syn0) sq += v * v;
    const double rms = std::sqrt(sq / static_cast<double>(syn0.size()));
    if (rms > 0.0) scale = cfg.target_rms / rms;
  }
  // Round to float so a table survives save/load bit-exactly.
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(n), cfg.dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = static_cast<float>(scale * syn0[i * dim + d]);
    }
  }
  return SegmentEmbeddingTable(std::vector<SegmentId>(g.nodes().begin(), g.nodes().end()), std::move(rows));
}

void save_embeddings(const SegmentEmbeddingTable& table, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "#emb v1 rows=" << table.rows() << " dim=" << table.dim() << " ids=";
  for (std::size_t i = 0; i < table.rows(); ++i) out << (i ? "," : "") << table.id(i);
  out << '\n';
  const auto& m = table.matrix();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) detail::write_f32_le(out, static_cast<float>(m(r, c)));
  }
}

SegmentEmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header) || header.rfind("#emb v1 ", 0) != 0) {
    throw ParseError(path.string() + ": expected '#emb v1' header");
  }
  std::istringstream fields(header.substr(8));
  std::string kv;
  long long rows = -1;
  long long dim = -1;
  std::vector<SegmentId> ids;
  bool have_ids = false;
  while (fields >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError(path.string() + ": malformed header field '" + kv + "'");
    const auto key = kv.substr(0, eq);
    const std::string_view value(kv.c_str() + eq + 1);
    if (key == "rows") {
      rows = detail::parse_number<long long>(value, path.string());
    } else if (key == "dim") {
      dim = detail::parse_number<long long>(value, path.string());
    } else if (key == "ids") {
      have_ids = true;
      for (auto part : detail::split(value, ',')) ids.push_back(detail::parse_number<SegmentId>(part, path.string()));
    }
  }
  if (rows < 1 || dim < 1) throw ParseError(path.string() + ": header needs positive rows= and dim=");
  if (!have_ids) {
    for (long long i = 0; i < rows; ++i) ids.push_back(i);
  }
  if (static_cast<long long>(ids.size()) != rows) throw ParseError(path.string() + ": ids= count does not match rows=");

  std::vector<unsigned char> payload(static_cast<std::size_t>(rows * dim * 4));
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (in.gcount() != static_cast<std::streamsize>(payload.size())) {
    throw ParseError(path.string() + ": truncated embedding payload");
  }
  Eigen::MatrixXd m(rows, dim);
  for (long long r = 0; r < rows; ++r) {
    for (long long c = 0; c < dim; ++c) m(r, c) = detail::read_f32_le(&payload[static_cast<std::size_t>((r * dim + c) * 4)]);
  }
  return SegmentEmbeddingTable(std::move(ids), std::move(m));
}

}  // namespace rntraj
