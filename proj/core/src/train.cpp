#include "rntraj/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "rntraj/codec.hpp"
#include "rntraj/error.hpp"
#include "rntraj/random.hpp"

namespace rntraj {

double TrainConfig::lr_at(int epoch) const {
  const int halvings = lr_decay_every > 0 ? (epoch - 1) / lr_decay_every : 0;
  return learning_rate * std::pow(lr_decay, halvings);
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw InvalidArgument("epochs and batch size must be positive");
  if (!(learning_rate > 0.0) || !(lr_decay > 0.0) || lr_decay_every < 0) {
    throw InvalidArgument("learning rate and decay must be positive");
  }
  if (!(temperature > 0.0) || top_k < 1) throw InvalidArgument("temperature and top_k must be positive");
  model.validate();
}

AdamOptimizer::AdamOptimizer(std::size_t size, double beta1, double beta2, double eps)
    : m_(size, 0.0), v_(size, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw InvalidArgument("Adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

BatchLoss batch_loss(const DenoiserParams& params, std::span<const TrainExample> batch, const NoiseSchedule& sched,
                     const SegmentEmbeddingTable& table, const Eigen::MatrixXd& connectivity, const TrainConfig& cfg,
                     DenoiserParams* grads) {
  if (batch.empty()) throw InvalidArgument("empty training batch");
  const int length = static_cast<int>(batch[0].x0.rows());
  const auto b = static_cast<int>(batch.size());
  std::vector<Eigen::MatrixXd> noisy;
  std::vector<int> steps;
  noisy.reserve(batch.size());
  for (const auto& ex : batch) {
    if (ex.x0.rows() != length) throw InvalidArgument("training batch mixes trajectory lengths");
    noisy.push_back(forward_diffuse(ex.x0, ex.step, ex.eps, sched));
    steps.push_back(ex.step);
  }
  DenoiserCache cache;
  const Eigen::MatrixXd eps_hat_packed =
      denoiser_forward(params, pack_batch(noisy), length, steps, grads ? &cache : nullptr);
  const auto eps_hat = unpack_batch(eps_hat_packed, b, length);

  BatchLoss loss;
  Eigen::MatrixXd d_out(eps_hat_packed.rows(), eps_hat_packed.cols());
  const double top_k = std::min<double>(cfg.top_k, static_cast<double>(table.rows()));
  for (int i = 0; i < b; ++i) {
    const auto& ex = batch[static_cast<std::size_t>(i)];
    const auto& e_hat = eps_hat[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd x0_hat = estimate_x0(noisy[static_cast<std::size_t>(i)], e_hat, ex.step, sched);
    const double l1 = loss_l1(ex.eps, e_hat);
    const double l2 = loss_l2(ex.x0, x0_hat);
    const bool want_l3_grad = grads && cfg.use_l3;
    const SpatialLoss l3 = loss_l3(x0_hat, table, connectivity, cfg.temperature, static_cast<int>(top_k), want_l3_grad);
    loss.l1 += l1 / b;
    loss.l2 += l2 / b;
    loss.l3_soft += l3.soft / b;
    loss.l3_hard += l3.hard / b;
    if (!grads) continue;

    const double n_entries = static_cast<double>(e_hat.size());
    Eigen::MatrixXd d_eps_hat = 2.0 * (e_hat - ex.eps) / n_entries;
    Eigen::MatrixXd d_x0_hat = Eigen::MatrixXd::Zero(x0_hat.rows(), x0_hat.cols());
    if (cfg.use_l2) d_x0_hat += 2.0 * (x0_hat - ex.x0) / n_entries;
    if (cfg.use_l3) d_x0_hat += l3.grad;
    // x0_hat = (xn - sqrt(1 - abar) eps_hat) / sqrt(abar)
    const double abar = sched.alpha_bar(ex.step);
    d_eps_hat -= std::sqrt((1.0 - abar) / abar) * d_x0_hat;
    d_out.middleCols(static_cast<Eigen::Index>(i) * length, length) = d_eps_hat.transpose() / b;
  }
  loss.total = loss.l1 + (cfg.use_l2 ? loss.l2 : 0.0) + (cfg.use_l3 ? loss.l3_soft : 0.0);
  if (!std::isfinite(loss.total)) throw NumericError("non-finite training loss");
  if (grads) denoiser_backward(params, cache, d_out, *grads);
  return loss;
}

TrainResult train(const Corpus& corpus, const SegmentEmbeddingTable& table, const UTGraph& graph,
                  const NoiseSchedule& sched, const TrainConfig& cfg_in, const EpochCallback& on_epoch) {
  if (corpus.empty()) throw InvalidArgument("cannot train on an empty corpus");
  TrainConfig cfg = cfg_in;
  cfg.model.input_dim = table.dim() + 1;
  cfg.validate();
  if (cfg.top_k > static_cast<int>(table.rows())) throw InvalidArgument("top_k exceeds the number of segments");
  if (sched.steps() != cfg.diffusion_steps) throw InvalidArgument("schedule length differs from diffusion_steps");

  std::vector<Eigen::MatrixXd> clean;
  clean.reserve(corpus.size());
  std::map<int, std::vector<std::size_t>> by_length;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].size() < 2) throw InvalidArgument("training trajectories need T >= 2");
    clean.push_back(vectorize(corpus[i], table));
    by_length[static_cast<int>(corpus[i].size())].push_back(i);
  }
  const Eigen::MatrixXd connectivity = connectivity_matrix(graph, table);

  TrainResult result{DenoiserParams::initialized(cfg.model, cfg.seed), {}};
  DenoiserParams grads(cfg.model);
  AdamOptimizer adam(result.params.size());
  Rng rng(derive_seed(cfg.seed, 0x747261696eULL));
  std::uniform_int_distribution<int> step_dist(1, sched.steps());
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::vector<std::size_t>> batches;
    for (auto& [length, members] : by_length) {
      std::shuffle(members.begin(), members.end(), rng);
      for (std::size_t s = 0; s < members.size(); s += static_cast<std::size_t>(cfg.batch_size)) {
        const auto e = std::min(members.size(), s + static_cast<std::size_t>(cfg.batch_size));
        batches.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(s), members.begin() + static_cast<std::ptrdiff_t>(e));
      }
    }
    std::shuffle(batches.begin(), batches.end(), rng);

    const double lr = cfg.lr_at(epoch);
    EpochLog log{epoch, 0, 0, 0, 0, lr, 0};
    double seen = 0.0;
    std::vector<TrainExample> examples;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      examples.clear();
      for (std::size_t idx : batches[bi]) {
        TrainExample ex{clean[idx], step_dist(rng), Eigen::MatrixXd(clean[idx].rows(), clean[idx].cols())};
        for (Eigen::Index j = 0; j < ex.eps.size(); ++j) ex.eps.data()[j] = normal(rng);
        examples.push_back(std::move(ex));
      }
      grads.set_zero();
      BatchLoss loss;
      try {
        loss = batch_loss(result.params, examples, sched, table, connectivity, cfg, &grads);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(bi) + ": " + e.what());
      }
      adam.step(result.params.values(), grads.values(), lr);
      const double w = static_cast<double>(examples.size());
      log.l1 += loss.l1 * w;
      log.l2 += loss.l2 * w;
      log.l3_soft += loss.l3_soft * w;
      log.l3_hard += loss.l3_hard * w;
      log.total += loss.total * w;
      seen += w;
    }
    log.l1 /= seen;
    log.l2 /= seen;
    log.l3_soft /= seen;
    log.l3_hard /= seen;
    log.total /= seen;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log, result.params);
  }
  return result;
}

}  // namespace rntraj
