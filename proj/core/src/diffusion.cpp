#include "rntraj/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rntraj/parallel.hpp"
#include "rntraj/random.hpp"

namespace rntraj {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) {
  if (betas.empty()) throw InvalidArgument("noise schedule needs at least one step");
  const std::size_t n = betas.size();
  beta_.assign(n + 1, 0.0);
  alpha_.assign(n + 1, 1.0);
  alpha_bar_.assign(n + 1, 1.0);
  posterior_var_.assign(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    const double b = betas[i - 1];
    if (!(b > 0.0 && b < 1.0)) throw InvalidArgument("schedule betas must lie in (0, 1)");
    beta_[i] = b;
    alpha_[i] = 1.0 - b;
    alpha_bar_[i] = alpha_bar_[i - 1] * alpha_[i];
    posterior_var_[i] = (1.0 - alpha_bar_[i - 1]) / (1.0 - alpha_bar_[i]) * b;
  }
}

NoiseSchedule quadratic_schedule(int steps, double beta1, double betaN) {
  if (steps < 2) throw InvalidArgument("quadratic schedule needs N >= 2");
  if (!(beta1 > 0.0 && beta1 < betaN && betaN < 1.0)) {
    throw InvalidArgument("quadratic schedule needs 0 < beta1 < betaN < 1");
  }
  const double lo = std::sqrt(beta1);
  const double hi = std::sqrt(betaN);
  const double denom = static_cast<double>(steps - 1);
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int n = 1; n <= steps; ++n) {
    const double blend = (steps - n) / denom * lo + (n - 1) / denom * hi;
    betas[static_cast<std::size_t>(n - 1)] = blend * blend;
  }
  // Pin the endpoints against rounding in the blend.
  betas.front() = beta1;
  betas.back() = betaN;
  return NoiseSchedule(std::move(betas));
}

namespace {

void check_step(int n, const NoiseSchedule& sched) {
  if (n < 1 || n > sched.steps()) {
    throw InvalidArgument("diffusion step " + std::to_string(n) + " outside [1, " + std::to_string(sched.steps()) + "]");
  }
}

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument(std::string(what) + ": shape mismatch");
}

}  // namespace

Eigen::MatrixXd forward_diffuse(const Eigen::MatrixXd& x0, int n, const Eigen::MatrixXd& eps, const NoiseSchedule& sched) {
  check_step(n, sched);
  check_same_shape(x0, eps, "forward_diffuse");
  return std::sqrt(sched.alpha_bar(n)) * x0 + std::sqrt(1.0 - sched.alpha_bar(n)) * eps;
}

Eigen::MatrixXd estimate_x0(const Eigen::MatrixXd& xn, const Eigen::MatrixXd& eps_hat, int n, const NoiseSchedule& sched) {
  check_step(n, sched);
  check_same_shape(xn, eps_hat, "estimate_x0");
  return (xn - std::sqrt(1.0 - sched.alpha_bar(n)) * eps_hat) / std::sqrt(sched.alpha_bar(n));
}

Eigen::MatrixXd reverse_mean(const Eigen::MatrixXd& xn, const Eigen::MatrixXd& eps_hat, int n, const NoiseSchedule& sched) {
  check_step(n, sched);
  check_same_shape(xn, eps_hat, "reverse_step");
  const double coef = sched.beta(n) / std::sqrt(1.0 - sched.alpha_bar(n));
  return (xn - coef * eps_hat) / std::sqrt(sched.alpha(n));
}

Eigen::MatrixXd reverse_step(const Eigen::MatrixXd& xn, const Eigen::MatrixXd& eps_hat, int n, const Eigen::MatrixXd& z,
                             const NoiseSchedule& sched) {
  check_same_shape(xn, z, "reverse_step");
  return reverse_mean(xn, eps_hat, n, sched) + std::sqrt(sched.posterior_var(n)) * z;
}

Eigen::MatrixXd reverse_step_constant(const Eigen::MatrixXd& xn, const Eigen::MatrixXd& eps_hat, int n,
                                      const NoiseSchedule& sched) {
  return (reverse_mean(xn, eps_hat, n, sched).array() + std::sqrt(sched.posterior_var(n))).matrix();
}

double loss_l1(const Eigen::MatrixXd& eps, const Eigen::MatrixXd& eps_hat) {
  check_same_shape(eps, eps_hat, "loss_l1");
  return (eps - eps_hat).squaredNorm() / static_cast<double>(eps.size());
}

double loss_l2(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x0_hat) {
  check_same_shape(x0, x0_hat, "loss_l2");
  return (x0 - x0_hat).squaredNorm() / static_cast<double>(x0.size());
}

Eigen::MatrixXd connectivity_matrix(const UTGraph& g, const SegmentEmbeddingTable& table) {
  const auto r = static_cast<Eigen::Index>(table.rows());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(r, r);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    if (!table.contains(g.node(i))) continue;
    const auto from = static_cast<Eigen::Index>(table.row_of(g.node(i)));
    for (const auto& e : g.out_edges(i)) {
      const SegmentId to = g.node(e.target);
      if (table.contains(to)) a(from, static_cast<Eigen::Index>(table.row_of(to))) = 1.0;
    }
  }
  return a;
}

SpatialLoss loss_l3(const Eigen::MatrixXd& x0_hat, const SegmentEmbeddingTable& table,
                    const Eigen::MatrixXd& connectivity, double temperature, int top_k, bool with_grad) {
  const int d = table.dim();
  const auto r = static_cast<Eigen::Index>(table.rows());
  if (x0_hat.cols() != d + 1) throw InvalidArgument("loss_l3: tensor must have D+1 columns");
  if (connectivity.rows() != r || connectivity.cols() != r) throw InvalidArgument("loss_l3: connectivity shape");
  if (!(temperature > 0.0)) throw InvalidArgument("loss_l3: temperature must be positive");
  if (top_k < 1 || top_k > r) throw InvalidArgument("loss_l3: top_k must lie in [1, |R|]");

  const Eigen::Index len = x0_hat.rows();
  SpatialLoss out;
  if (with_grad) out.grad = Eigen::MatrixXd::Zero(len, d + 1);
  if (len < 2) return out;

  Eigen::MatrixXd unit = x0_hat.leftCols(d);
  Eigen::VectorXd norms(len);
  for (Eigen::Index t = 0; t < len; ++t) {
    norms[t] = std::max(unit.row(t).norm(), 1e-12);
    unit.row(t) /= norms[t];
  }
  const Eigen::MatrixXd sim = unit * table.normalized().transpose();  // T x |R|

  // Top-K support and tempered softmax per row.
  const auto k = static_cast<std::size_t>(top_k);
  std::vector<std::vector<Eigen::Index>> support(static_cast<std::size_t>(len));
  std::vector<Eigen::VectorXd> weights(static_cast<std::size_t>(len));
  std::vector<Eigen::Index> argmax(static_cast<std::size_t>(len));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
  for (Eigen::Index t = 0; t < len; ++t) {
    std::iota(order.begin(), order.end(), 0);
    auto better = [&](Eigen::Index a, Eigen::Index b) {
      return sim(t, a) > sim(t, b) || (sim(t, a) == sim(t, b) && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
    auto& sup = support[static_cast<std::size_t>(t)];
    sup.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    argmax[static_cast<std::size_t>(t)] = sup.front();
    Eigen::VectorXd w(static_cast<Eigen::Index>(k));
    const double top = sim(t, sup.front());
    for (std::size_t i = 0; i < k; ++i) w[static_cast<Eigen::Index>(i)] = std::exp((sim(t, sup[i]) - top) / temperature);
    weights[static_cast<std::size_t>(t)] = w / w.sum();
  }

  // Gradient of the soft loss with respect to each row's softmax weights.
  std::vector<Eigen::VectorXd> d_w(static_cast<std::size_t>(len));
  for (auto& g : d_w) g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  for (Eigen::Index t = 0; t + 1 < len; ++t) {
    const auto& s0 = support[static_cast<std::size_t>(t)];
    const auto& s1 = support[static_cast<std::size_t>(t + 1)];
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = connectivity(s0[i], s1[j]);
    }
    const auto& w0 = weights[static_cast<std::size_t>(t)];
    const auto& w1 = weights[static_cast<std::size_t>(t + 1)];
    out.soft += 1.0 - w0.dot(sub * w1);
    out.hard += 1.0 - connectivity(argmax[static_cast<std::size_t>(t)], argmax[static_cast<std::size_t>(t + 1)]);
    if (with_grad) {
      d_w[static_cast<std::size_t>(t)] -= sub * w1;
      d_w[static_cast<std::size_t>(t + 1)] -= sub.transpose() * w0;
    }
  }
  if (!with_grad) return out;

  const auto& emb = table.normalized();
  for (Eigen::Index t = 0; t < len; ++t) {
    const auto& w = weights[static_cast<std::size_t>(t)];
    const auto& g = d_w[static_cast<std::size_t>(t)];
    const Eigen::VectorXd d_logit = w.cwiseProduct((g.array() - w.dot(g)).matrix()) / temperature;
    const auto& sup = support[static_cast<std::size_t>(t)];
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
    double radial = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double ds = d_logit[static_cast<Eigen::Index>(i)];
      acc += ds * emb.row(sup[i]);
      radial += ds * sim(t, sup[i]);
    }
    out.grad.row(t).head(d) = (acc - radial * unit.row(t)) / norms[t];
  }
  return out;
}

namespace {

std::uint64_t stream_id(int length, int index) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(length)) << 32) | static_cast<std::uint32_t>(index);
}

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

}  // namespace

std::vector<Eigen::MatrixXd> sample_tensors(const DenoiserParams& params, const NoiseSchedule& sched, int length,
                                            int count, std::uint64_t seed, const SamplerOptions& opts) {
  if (length < 2) throw InvalidArgument("sampled trajectories need T >= 2");
  if (count < 0) throw InvalidArgument("sample count must be non-negative");
  const int din = params.config().input_dim;
  const int batch = std::max(1, opts.batch);
  const int n_batches = (count + batch - 1) / batch;
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(count));

  parallel_for(static_cast<std::size_t>(n_batches), opts.workers, [&](std::size_t bi) {
    const int first = static_cast<int>(bi) * batch;
    const int size = std::min(batch, count - first);
    std::vector<Rng> rngs;
    rngs.reserve(static_cast<std::size_t>(size));
    Eigen::MatrixXd x(din, static_cast<Eigen::Index>(size) * length);  // packed, Din x (B*T)
    for (int i = 0; i < size; ++i) {
      rngs.emplace_back(derive_seed(seed, stream_id(length, first + i)));
      x.middleCols(static_cast<Eigen::Index>(i) * length, length) = gaussian(length, din, rngs.back()).transpose();
    }
    std::vector<int> steps(static_cast<std::size_t>(size));
    for (int n = sched.steps(); n >= 1; --n) {
      std::fill(steps.begin(), steps.end(), n);
      const Eigen::MatrixXd eps_hat = denoiser_forward(params, x, length, steps);
      if (opts.constant_noise) {
        x = reverse_step_constant(x, eps_hat, n, sched);
      } else if (n > 1) {
        Eigen::MatrixXd z(din, x.cols());
        for (int i = 0; i < size; ++i) {
          z.middleCols(static_cast<Eigen::Index>(i) * length, length) =
              gaussian(length, din, rngs[static_cast<std::size_t>(i)]).transpose();
        }
        x = reverse_step(x, eps_hat, n, z, sched);
      } else {
        x = reverse_mean(x, eps_hat, n, sched);
      }
    }
    for (int i = 0; i < size; ++i) {
      out[static_cast<std::size_t>(first + i)] = x.middleCols(static_cast<Eigen::Index>(i) * length, length).transpose();
    }
  });
  return out;
}

namespace {

RNTraj decode_or_throw(const Eigen::MatrixXd& x, const SegmentEmbeddingTable& table) {
  try {
    return decode_rntraj(x, table);
  } catch (const DecodeError& e) {
    throw SampleDecodeError(e, x);
  }
}

}  // namespace

RNTraj sample(const DenoiserParams& params, const SegmentEmbeddingTable& table, const NoiseSchedule& sched, int length,
              std::uint64_t seed, const SamplerOptions& opts) {
  if (params.config().input_dim != table.dim() + 1) throw InvalidArgument("model and embedding dimensions disagree");
  const auto x = sample_tensors(params, sched, length, 1, seed, opts);
  return decode_or_throw(x.front(), table);
}

Corpus sample_corpus(const DenoiserParams& params, const SegmentEmbeddingTable& table, const NoiseSchedule& sched,
                     const LengthCounts& counts, std::uint64_t seed, const SamplerOptions& opts) {
  if (params.config().input_dim != table.dim() + 1) throw InvalidArgument("model and embedding dimensions disagree");
  Corpus corpus;
  for (const auto& [length, count] : counts) {
    for (const auto& x : sample_tensors(params, sched, length, count, seed, opts)) {
      corpus.push_back(decode_or_throw(x, table));
    }
  }
  return corpus;
}

}  // namespace rntraj
