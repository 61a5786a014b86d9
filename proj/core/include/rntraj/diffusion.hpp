#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "rntraj/codec.hpp"
#include "rntraj/denoiser.hpp"
#include "rntraj/error.hpp"
#include "rntraj/roadnet.hpp"
#include "rntraj/utgraph.hpp"

namespace rntraj {

/// Variance schedule indexed by step n = 1..N. Step 0 is the clean sample
/// (alpha_bar(0) == 1).
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> betas);

  int steps() const { return static_cast<int>(beta_.size()) - 1; }
  double beta(int n) const { return beta_.at(static_cast<std::size_t>(n)); }
  double alpha(int n) const { return alpha_.at(static_cast<std::size_t>(n)); }
  double alpha_bar(int n) const { return alpha_bar_.at(static_cast<std::size_t>(n)); }
  /// (1 - alpha_bar(n-1)) / (1 - alpha_bar(n)) * beta(n); zero at n = 1.
  double posterior_var(int n) const { return posterior_var_.at(static_cast<std::size_t>(n)); }

 private:
  std::vector<double> beta_, alpha_, alpha_bar_, posterior_var_;
};

/// beta_n = ((N-n)/(N-1) sqrt(beta1) + (n-1)/(N-1) sqrt(betaN))^2.
NoiseSchedule quadratic_schedule(int steps, double beta1, double betaN);

/// sqrt(alpha_bar_n) x0 + sqrt(1 - alpha_bar_n) eps.
Eigen::MatrixXd forward_diffuse(const Eigen::MatrixXd& x0, int n, const Eigen::MatrixXd& eps, const NoiseSchedule& sched);

/// (xn - sqrt(1 - alpha_bar_n) eps_hat) / sqrt(alpha_bar_n).
Eigen::MatrixXd estimate_x0(const Eigen::MatrixXd& xn, const Eigen::MatrixXd& eps_hat, int n, const NoiseSchedule& sched);

/// Mean of the reverse step: (xn - beta_n / sqrt(1 - alpha_bar_n) eps_hat) / sqrt(alpha_n).
Eigen::MatrixXd reverse_mean(const Eigen::MatrixXd& xn, const Eigen::MatrixXd& eps_hat, int n, const NoiseSchedule& sched);

/// Ancestral step: reverse_mean + sqrt(posterior_var_n) z. Pass z = 0 at
/// the final step.
Eigen::MatrixXd reverse_step(const Eigen::MatrixXd& xn, const Eigen::MatrixXd& eps_hat, int n, const Eigen::MatrixXd& z,
                             const NoiseSchedule& sched);

/// The update with the posterior standard deviation added as a constant
/// (no random factor). Kept for comparison only.
Eigen::MatrixXd reverse_step_constant(const Eigen::MatrixXd& xn, const Eigen::MatrixXd& eps_hat, int n,
                                      const NoiseSchedule& sched);

double loss_l1(const Eigen::MatrixXd& eps, const Eigen::MatrixXd& eps_hat);
double loss_l2(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x0_hat);

/// 0/1 UTGraph connectivity between embedding rows (row = from).
Eigen::MatrixXd connectivity_matrix(const UTGraph& g, const SegmentEmbeddingTable& table);

struct SpatialLoss {
  /// Adjacent decoded segment pairs that are not UTGraph edges.
  double hard = 0.0;
  /// sum_t (1 - a_t' A a_{t+1}), with a_t a tempered softmax over the top-K
  /// cosine similarities of row t.
  double soft = 0.0;
  /// d(soft)/d(x0_hat), T x (D+1); ratio column is zero.
  Eigen::MatrixXd grad;
};

SpatialLoss loss_l3(const Eigen::MatrixXd& x0_hat, const SegmentEmbeddingTable& table,
                    const Eigen::MatrixXd& connectivity, double temperature, int top_k, bool with_grad = false);

class SampleDecodeError : public DecodeError {
 public:
  SampleDecodeError(const DecodeError& cause, Eigen::MatrixXd raw)
      : DecodeError(cause.what(), cause.row()), raw_(std::move(raw)) {}
  const Eigen::MatrixXd& raw() const { return raw_; }

 private:
  Eigen::MatrixXd raw_;
};

struct SamplerOptions {
  /// Use reverse_step_constant instead of ancestral sampling.
  bool constant_noise = false;
  /// Trajectories denoised together in one network call.
  int batch = 64;
  int workers = 1;
};

/// Runs the reverse chain from X_N ~ N(0, I) for `count` trajectories of
/// length T. Trajectory i draws all its noise from a stream derived from
/// (seed, T, i).
std::vector<Eigen::MatrixXd> sample_tensors(const DenoiserParams& params, const NoiseSchedule& sched, int length,
                                            int count, std::uint64_t seed, const SamplerOptions& opts = {});

RNTraj sample(const DenoiserParams& params, const SegmentEmbeddingTable& table, const NoiseSchedule& sched, int length,
              std::uint64_t seed, const SamplerOptions& opts = {});

/// Generates exactly `counts[T]` trajectories of every length T.
Corpus sample_corpus(const DenoiserParams& params, const SegmentEmbeddingTable& table, const NoiseSchedule& sched,
                     const LengthCounts& counts, std::uint64_t seed, const SamplerOptions& opts = {});

}  // namespace rntraj
