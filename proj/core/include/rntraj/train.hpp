#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rntraj/denoiser.hpp"
#include "rntraj/diffusion.hpp"
#include "rntraj/trajectory.hpp"
#include "rntraj/utgraph.hpp"

namespace rntraj {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double lr_decay = 0.5;
  int lr_decay_every = 3;
  int diffusion_steps = 500;
  double beta_1 = 1e-4;
  double beta_N = 0.02;
  double temperature = 0.1;
  int top_k = 32;
  bool use_l2 = true;
  bool use_l3 = true;
  std::uint64_t seed = 1;
  DenoiserConfig model{};

  double lr_at(int epoch) const;
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3_soft = 0.0;
  double l3_hard = 0.0;
  double lr = 0.0;
  /// The optimized objective for this run's configuration.
  double total = 0.0;
};

struct BatchLoss {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3_soft = 0.0;
  double l3_hard = 0.0;
  double total = 0.0;
};

/// Training sample: clean tensor, diffusion step and the noise it was
/// diffused with.
struct TrainExample {
  Eigen::MatrixXd x0;
  int step = 1;
  Eigen::MatrixXd eps;
};

/// Mean over the batch of L1 + L2 + L3 (per the config's switches), and,
/// when `grads` is non-null, its gradient accumulated into `grads`. All
/// examples must share one length.
BatchLoss batch_loss(const DenoiserParams& params, std::span<const TrainExample> batch, const NoiseSchedule& sched,
                     const SegmentEmbeddingTable& table, const Eigen::MatrixXd& connectivity, const TrainConfig& cfg,
                     DenoiserParams* grads);

/// Adam with bias correction.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::size_t size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<double> params, std::span<const double> grads, double lr);

 private:
  std::vector<double> m_, v_;
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
};

struct TrainResult {
  DenoiserParams params;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&, const DenoiserParams&)>;

/// Length-grouped minibatch training. Each step draws one batch of equal
/// length trajectories, an independent step n ~ U{1..N} and noise per
/// element, and takes one Adam step on the batch loss. The learning rate is
/// multiplied by `lr_decay` every `lr_decay_every` epochs.
TrainResult train(const Corpus& corpus, const SegmentEmbeddingTable& table, const UTGraph& graph,
                  const NoiseSchedule& sched, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace rntraj
