#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rntraj/codec.hpp"
#include "rntraj/denoiser.hpp"
#include "rntraj/metrics.hpp"
#include "rntraj/trajsim.hpp"
#include "rntraj/utgraph.hpp"

using namespace rntraj;

namespace {

DenoiserConfig desk_model() {
  DenoiserConfig c;
  c.input_dim = 33;
  c.channels = 64;
  c.step_dim = 128;
  c.layers = 8;
  c.layers_per_block = 4;
  return c;
}

Eigen::MatrixXd noise(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  }
  return m;
}

// Args: batch, length.
void BM_DenoiserForward(benchmark::State& state) {
  const auto params = DenoiserParams::initialized(desk_model(), 1);
  const int b = static_cast<int>(state.range(0));
  const int t = static_cast<int>(state.range(1));
  const auto x = noise(33, static_cast<Eigen::Index>(b) * t, 2);
  const std::vector<int> steps(static_cast<std::size_t>(b), 50);
  for (auto _ : state) benchmark::DoNotOptimize(denoiser_forward(params, x, t, steps));
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_DenoiserForward)->Args({1, 20})->Args({64, 20})->Unit(benchmark::kMillisecond);

void BM_DenoiserForwardBackward(benchmark::State& state) {
  const auto params = DenoiserParams::initialized(desk_model(), 1);
  const int b = static_cast<int>(state.range(0));
  const int t = static_cast<int>(state.range(1));
  const auto x = noise(33, static_cast<Eigen::Index>(b) * t, 2);
  const auto d_out = noise(33, x.cols(), 3);
  const std::vector<int> steps(static_cast<std::size_t>(b), 50);
  DenoiserParams grads(params.config());
  for (auto _ : state) {
    DenoiserCache cache;
    denoiser_forward(params, x, t, steps, &cache);
    grads.set_zero();
    denoiser_backward(params, cache, d_out, grads);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_DenoiserForwardBackward)->Args({64, 20})->Unit(benchmark::kMillisecond);

struct Desk {
  RoadNetwork net = generate_grid_network(6, 6, 100);
  Corpus corpus;
  SegmentEmbeddingTable table;

  Desk() {
    SimulationConfig sc;
    sc.n_traj = 500;
    corpus = simulate_corpus(net, sc);
    Node2VecConfig nc;
    nc.dim = 32;
    nc.iterations = 1;
    nc.walks_per_node = 4;
    table = pretrain_embeddings(build_utgraph(corpus), nc);
  }
};

const Desk& desk() {
  static const Desk d;
  return d;
}

void BM_DecodeTrajectory(benchmark::State& state) {
  const auto& d = desk();
  const auto x = vectorize(d.corpus.front(), d.table);
  for (auto _ : state) benchmark::DoNotOptimize(decode_rntraj(x, d.table));
}
BENCHMARK(BM_DecodeTrajectory);

void BM_Evaluate(benchmark::State& state) {
  const auto& d = desk();
  const Corpus half(d.corpus.begin(), d.corpus.begin() + 250);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(half, d.corpus, d.net));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

void BM_Jsd(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::vector<double> a(10000), b(10000);
  for (auto& v : a) v = u(rng);
  for (auto& v : b) v = u(rng) * 0.9;
  for (auto _ : state) {
    const auto edges = pooled_edges(a, b, 100);
    benchmark::DoNotOptimize(jsd(histogram(a, edges), histogram(b, edges)));
  }
}
BENCHMARK(BM_Jsd);

}  // namespace

BENCHMARK_MAIN();
