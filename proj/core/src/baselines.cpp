#include "rntraj/baselines.hpp"

#include <algorithm>
#include <random>

#include "rntraj/error.hpp"
#include "rntraj/parallel.hpp"
#include "rntraj/random.hpp"

namespace rntraj {

namespace {

constexpr int kMaxRedraws = 10000;

std::size_t draw(const std::vector<double>& cumulative, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, cumulative.back());
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u(rng));
  return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

template <typename Gen>
Corpus generate_all(const LengthCounts& counts, std::uint64_t seed, int workers, Gen&& gen) {
  std::vector<int> lengths;
  for (const auto& [len, n] : counts) {
    if (len < 1 || n < 0) throw InvalidArgument("length counts must be positive");
    lengths.insert(lengths.end(), static_cast<std::size_t>(n), len);
  }
  Corpus out(lengths.size());
  parallel_for(lengths.size(), workers, [&](std::size_t i) { out[i] = gen(lengths[i], derive_seed(seed, i)); });
  return out;
}

}  // namespace

Corpus rwrn_generate(const UTGraph& g, const LengthCounts& counts, std::uint64_t seed, int workers) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    if (!g.out_edges(i).empty()) starts.push_back(i);
  }
  if (starts.empty()) throw InvalidArgument("random walk needs a graph with at least one edge");
  return generate_all(counts, seed, workers, [&](int length, std::uint64_t s) {
    Rng rng(s);
    std::uniform_int_distribution<std::size_t> pick_start(0, starts.size() - 1);
    std::uniform_real_distribution<double> ratio(0.0, 1.0);
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
      RNTraj t;
      std::size_t node = starts[pick_start(rng)];
      t.points.push_back({g.node(node), ratio(rng)});
      bool dead_end = false;
      while (static_cast<int>(t.size()) < length) {
        const auto edges = g.out_edges(node);
        if (edges.empty()) {
          dead_end = true;
          break;
        }
        node = edges[std::uniform_int_distribution<std::size_t>(0, edges.size() - 1)(rng)].target;
        t.points.push_back({g.node(node), ratio(rng)});
      }
      if (!dead_end) return t;
    }
    throw InvalidArgument("random walk keeps reaching dead ends");
  });
}

MarkovModel::MarkovModel(const Corpus& ref) : graph_(build_utgraph(ref)) {
  const auto n = graph_.num_nodes();
  std::vector<double> first(n, 0.0);
  std::vector<std::vector<double>> ratio_counts(n, std::vector<double>(kRatioBins, 0.0));
  for (const auto& t : ref) {
    if (t.points.empty()) continue;
    first[graph_.index_of(t.points.front().segment)] += 1.0;
    for (const auto& p : t.points) {
      const int bin = std::clamp(static_cast<int>(p.ratio * kRatioBins), 0, kRatioBins - 1);
      ratio_counts[graph_.index_of(p.segment)][static_cast<std::size_t>(bin)] += 1.0;
    }
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (first[i] > 0.0) {
      acc += first[i];
      start_nodes_.push_back(i);
      start_cumulative_.push_back(acc);
    }
  }
  rows_.resize(n);
  ratio_cumulative_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double c = 0.0;
    for (const auto& e : graph_.out_edges(i)) {
      c += static_cast<double>(e.weight);
      rows_[i].targets.push_back(e.target);
      rows_[i].cumulative.push_back(c);
    }
    double r = 0.0;
    for (double v : ratio_counts[i]) ratio_cumulative_[i].push_back(r += v);
  }
}

double MarkovModel::transition(SegmentId from, SegmentId to) const {
  if (!graph_.contains(from) || !graph_.contains(to)) return 0.0;
  const auto& row = rows_[graph_.index_of(from)];
  if (row.cumulative.empty()) return 0.0;
  return static_cast<double>(graph_.weight(from, to)) / row.cumulative.back();
}

double MarkovModel::initial(SegmentId id) const {
  if (!graph_.contains(id)) return 0.0;
  const auto idx = graph_.index_of(id);
  const auto it = std::find(start_nodes_.begin(), start_nodes_.end(), idx);
  if (it == start_nodes_.end()) return 0.0;
  const auto k = static_cast<std::size_t>(it - start_nodes_.begin());
  return (start_cumulative_[k] - (k ? start_cumulative_[k - 1] : 0.0)) / start_cumulative_.back();
}

RNTraj MarkovModel::generate(int length, std::uint64_t seed) const {
  Rng rng(seed);
  std::uniform_real_distribution<double> within(0.0, 1.0);
  auto ratio = [&](std::size_t node) {
    const auto bin = draw(ratio_cumulative_[node], rng);
    return (static_cast<double>(bin) + within(rng)) / kRatioBins;
  };
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    RNTraj t;
    std::size_t node = start_nodes_[draw(start_cumulative_, rng)];
    t.points.push_back({graph_.node(node), ratio(node)});
    bool absorbed = false;
    while (static_cast<int>(t.size()) < length) {
      const auto& row = rows_[node];
      if (row.targets.empty()) {
        absorbed = true;
        break;
      }
      node = row.targets[draw(row.cumulative, rng)];
      t.points.push_back({graph_.node(node), ratio(node)});
    }
    if (!absorbed) return t;
  }
  throw InvalidArgument("Markov chain keeps reaching absorbing segments");
}

Corpus markov_generate(const Corpus& ref, const LengthCounts& counts, std::uint64_t seed, int workers) {
  if (ref.empty()) throw InvalidArgument("Markov baseline needs a non-empty reference corpus");
  const MarkovModel model(ref);
  return generate_all(counts, seed, workers, [&](int length, std::uint64_t s) { return model.generate(length, s); });
}

}  // namespace rntraj
