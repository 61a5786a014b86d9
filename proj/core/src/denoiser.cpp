#include "rntraj/denoiser.hpp"

#include <cmath>
#include <random>

#include "rntraj/error.hpp"
#include "rntraj/random.hpp"

namespace rntraj {

void DenoiserConfig::validate() const {
  if (input_dim < 1 || channels < 1 || step_dim < 2 || layers < 1 || layers_per_block < 1 || kernel < 1) {
    throw InvalidArgument("denoiser dimensions must be positive");
  }
  if (layers % layers_per_block != 0) throw InvalidArgument("layer count must be divisible by layers per block");
  if (step_dim % 2 != 0) throw InvalidArgument("positional-encoding dimension must be even");
  if (kernel % 2 == 0) throw InvalidArgument("convolution kernel width must be odd");
}

Eigen::VectorXd positional_encoding(int step, int dim) {
  if (dim < 2 || dim % 2 != 0) throw InvalidArgument("positional-encoding dimension must be even");
  if (step < 0) throw InvalidArgument("diffusion step must be non-negative");
  const int half = dim / 2;
  Eigen::VectorXd pe(dim);
  for (int i = 0; i < half; ++i) {
    const double freq = std::pow(10.0, 4.0 * i / half);
    pe[i] = std::sin(freq * step);
    pe[half + i] = std::cos(freq * step);
  }
  return pe;
}

DenoiserParams::DenoiserParams(const DenoiserConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const Eigen::Index din = cfg.input_dim, c = cfg.channels, f = cfg.step_dim, k = cfg.kernel;
  std::size_t offset = 0;
  auto add = [&](std::string name, Eigen::Index rows, Eigen::Index cols) {
    blocks_.push_back({std::move(name), rows, cols, offset});
    offset += static_cast<std::size_t>(rows * cols);
  };
  add("input.weight", c, din);
  add("input.bias", c, 1);
  add("step_fc1.weight", f, f);
  add("step_fc1.bias", f, 1);
  add("step_fc2.weight", f, f);
  add("step_fc2.bias", f, 1);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    add(p + "step.weight", c, f);
    add(p + "step.bias", c, 1);
    add(p + "dilated.weight", 2 * c, k * c);
    add(p + "dilated.bias", 2 * c, 1);
    add(p + "residual.weight", c, c);
    add(p + "residual.bias", c, 1);
    add(p + "skip.weight", c, c);
    add(p + "skip.bias", c, 1);
  }
  add("output1.weight", c, c);
  add("output1.bias", c, 1);
  add("output2.weight", din, c);
  add("output2.bias", din, 1);
  data_.assign(offset, 0.0);
}

DenoiserParams DenoiserParams::initialized(const DenoiserConfig& cfg, std::uint64_t seed) {
  DenoiserParams p(cfg);
  Rng rng(derive_seed(seed, 0x696e6974ULL));
  // Bias blocks share the fan-in of the weight block right before them.
  Eigen::Index fan_in = 1;
  for (std::size_t i = 0; i < p.blocks_.size(); ++i) {
    const auto& b = p.blocks_[i];
    if (b.cols > 1 || b.name.ends_with(".weight")) fan_in = b.cols;
    if (i == p.out2_w() || i == p.out2_b()) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto m = p.block(i);
    for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = u(rng);
  }
  return p;
}

std::size_t DenoiserParams::find(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return i;
  }
  throw UnknownId("no parameter block named '" + name + "'");
}

void DenoiserParams::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

bool DenoiserParams::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Eigen::MatrixXd pack_batch(std::span<const Eigen::MatrixXd> samples) {
  if (samples.empty()) throw InvalidArgument("empty batch");
  const Eigen::Index t = samples[0].rows();
  const Eigen::Index din = samples[0].cols();
  Eigen::MatrixXd packed(din, t * static_cast<Eigen::Index>(samples.size()));
  for (std::size_t b = 0; b < samples.size(); ++b) {
    if (samples[b].rows() != t || samples[b].cols() != din) throw InvalidArgument("batch samples differ in shape");
    packed.middleCols(static_cast<Eigen::Index>(b) * t, t) = samples[b].transpose();
  }
  return packed;
}

std::vector<Eigen::MatrixXd> unpack_batch(const Eigen::MatrixXd& packed, int batch, int length) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) out.emplace_back(packed.middleCols(static_cast<Eigen::Index>(b) * length, length).transpose());
  return out;
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::MatrixXd swish(const Eigen::MatrixXd& a) {
  return a.unaryExpr([](double x) { return x * sigmoid(x); });
}

Eigen::MatrixXd swish_grad(const Eigen::MatrixXd& a) {
  return a.unaryExpr([](double x) {
    const double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
  });
}

/// Zero-padded "same" dilated im2col: block j of the result holds the input
/// shifted by (j - k/2) * dilation, per sample.
void im2col(const Eigen::MatrixXd& z, int batch, int length, int kernel, int dilation, Eigen::MatrixXd& cols) {
  const Eigen::Index c = z.rows();
  cols.setZero(c * kernel, z.cols());
  const int center = kernel / 2;
  for (int j = 0; j < kernel; ++j) {
    const int shift = (j - center) * dilation;
    const int t0 = std::max(0, -shift);
    const int t1 = std::min(length, length - shift);
    if (t1 <= t0) continue;
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index base = static_cast<Eigen::Index>(b) * length;
      cols.block(j * c, base + t0, c, t1 - t0) = z.middleCols(base + t0 + shift, t1 - t0);
    }
  }
}

void col2im_add(const Eigen::MatrixXd& dcols, int batch, int length, int kernel, int dilation, Eigen::MatrixXd& dz) {
  const Eigen::Index c = dz.rows();
  const int center = kernel / 2;
  for (int j = 0; j < kernel; ++j) {
    const int shift = (j - center) * dilation;
    const int t0 = std::max(0, -shift);
    const int t1 = std::min(length, length - shift);
    if (t1 <= t0) continue;
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index base = static_cast<Eigen::Index>(b) * length;
      dz.middleCols(base + t0 + shift, t1 - t0) += dcols.block(j * c, base + t0, c, t1 - t0);
    }
  }
}

void add_per_sample(Eigen::MatrixXd& m, const Eigen::MatrixXd& per_sample, int length) {
  for (Eigen::Index b = 0; b < per_sample.cols(); ++b) {
    m.middleCols(b * length, length).colwise() += per_sample.col(b);
  }
}

Eigen::MatrixXd sum_per_sample(const Eigen::MatrixXd& m, int batch, int length) {
  Eigen::MatrixXd out(m.rows(), batch);
  for (int b = 0; b < batch; ++b) out.col(b) = m.middleCols(static_cast<Eigen::Index>(b) * length, length).rowwise().sum();
  return out;
}

void check_finite(const Eigen::MatrixXd& m, const std::string& where) {
  if (!m.allFinite()) throw NumericError("non-finite values in " + where);
}

}  // namespace

Eigen::MatrixXd denoiser_forward(const DenoiserParams& params, const Eigen::MatrixXd& packed, int length,
                                 std::span<const int> steps, DenoiserCache* cache) {
  const auto& cfg = params.config();
  const int batch = static_cast<int>(steps.size());
  if (packed.rows() != cfg.input_dim || packed.cols() != static_cast<Eigen::Index>(batch) * length || length < 1) {
    throw InvalidArgument("denoiser input has shape " + std::to_string(packed.rows()) + "x" +
                          std::to_string(packed.cols()) + ", expected " + std::to_string(cfg.input_dim) + "x" +
                          std::to_string(batch * length));
  }
  DenoiserCache local;
  DenoiserCache& k = cache ? *cache : local;
  k.batch = batch;
  k.length = length;
  k.steps.assign(steps.begin(), steps.end());

  // Step embedding: PE -> FC -> swish -> FC -> swish.
  k.pe.resize(cfg.step_dim, batch);
  for (int b = 0; b < batch; ++b) k.pe.col(b) = positional_encoding(steps[b], cfg.step_dim);
  k.a1 = params.block(DenoiserParams::kStep1W) * k.pe;
  k.a1.colwise() += params.block(DenoiserParams::kStep1B).col(0);
  k.h1 = swish(k.a1);
  k.a2 = params.block(DenoiserParams::kStep2W) * k.h1;
  k.a2.colwise() += params.block(DenoiserParams::kStep2B).col(0);
  k.s = swish(k.a2);

  if (cache) k.input = packed;
  k.in_pre = params.block(DenoiserParams::kInW) * packed;
  k.in_pre.colwise() += params.block(DenoiserParams::kInB).col(0);
  k.x.resize(static_cast<std::size_t>(cfg.layers) + 1);
  k.cols.resize(static_cast<std::size_t>(cfg.layers));
  k.h.resize(static_cast<std::size_t>(cfg.layers));
  k.p.resize(static_cast<std::size_t>(cfg.layers));
  k.x[0] = k.in_pre.cwiseMax(0.0);
  check_finite(k.x[0], "input projection");

  const Eigen::Index c = cfg.channels;
  Eigen::MatrixXd skip_sum = Eigen::MatrixXd::Zero(c, packed.cols());
  Eigen::MatrixXd z;
  for (int l = 0; l < cfg.layers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    Eigen::MatrixXd step_proj = params.block(params.layer_block(l, DenoiserParams::kStepW)) * k.s;
    step_proj.colwise() += params.block(params.layer_block(l, DenoiserParams::kStepB)).col(0);
    z = k.x[li];
    add_per_sample(z, step_proj, length);
    im2col(z, batch, length, cfg.kernel, cfg.dilation(l), k.cols[li]);
    k.h[li].noalias() = params.block(params.layer_block(l, DenoiserParams::kDilW)) * k.cols[li];
    k.h[li].colwise() += params.block(params.layer_block(l, DenoiserParams::kDilB)).col(0);
    k.p[li] = k.h[li].unaryExpr([](double v) { return sigmoid(v) * std::tanh(v); });
    check_finite(k.p[li], "layer " + std::to_string(l));

    k.x[li + 1] = k.x[li];
    k.x[li + 1].noalias() += params.block(params.layer_block(l, DenoiserParams::kResW)) * k.p[li].topRows(c);
    k.x[li + 1].colwise() += params.block(params.layer_block(l, DenoiserParams::kResB)).col(0);
    skip_sum.noalias() += params.block(params.layer_block(l, DenoiserParams::kSkipW)) * k.p[li].bottomRows(c);
    skip_sum.colwise() += params.block(params.layer_block(l, DenoiserParams::kSkipB)).col(0);
  }
  k.skip = skip_sum / std::sqrt(static_cast<double>(cfg.layers));
  k.out_pre = params.block(params.out1_w()) * k.skip;
  k.out_pre.colwise() += params.block(params.out1_b()).col(0);
  Eigen::MatrixXd out = params.block(params.out2_w()) * k.out_pre.cwiseMax(0.0);
  out.colwise() += params.block(params.out2_b()).col(0);
  check_finite(out, "output head");
  return out;
}

Eigen::MatrixXd denoiser_forward(const DenoiserParams& params, const Eigen::MatrixXd& xn, int step) {
  const Eigen::MatrixXd packed = xn.transpose();
  const int steps[1] = {step};
  return denoiser_forward(params, packed, static_cast<int>(xn.rows()), steps).transpose();
}

void denoiser_backward(const DenoiserParams& params, const DenoiserCache& k, const Eigen::MatrixXd& d_out,
                       DenoiserParams& grads) {
  const auto& cfg = params.config();
  if (!(grads.config() == cfg)) throw InvalidArgument("gradient buffer has a different configuration");
  if (d_out.rows() != cfg.input_dim || d_out.cols() != k.input.cols()) {
    throw InvalidArgument("output gradient shape does not match the cached batch");
  }
  const Eigen::Index c = cfg.channels;

  // Output head.
  const Eigen::MatrixXd relu_out = k.out_pre.cwiseMax(0.0);
  grads.block(params.out2_w()).noalias() += d_out * relu_out.transpose();
  grads.block(params.out2_b()) += d_out.rowwise().sum();
  Eigen::MatrixXd d_pre = params.block(params.out2_w()).transpose() * d_out;
  d_pre = d_pre.cwiseProduct((k.out_pre.array() > 0.0).cast<double>().matrix());
  grads.block(params.out1_w()).noalias() += d_pre * k.skip.transpose();
  grads.block(params.out1_b()) += d_pre.rowwise().sum();
  const Eigen::MatrixXd d_skip =
      (params.block(params.out1_w()).transpose() * d_pre) / std::sqrt(static_cast<double>(cfg.layers));
  const Eigen::MatrixXd d_skip_sum = d_skip.rowwise().sum();

  Eigen::MatrixXd d_x = Eigen::MatrixXd::Zero(c, k.input.cols());
  Eigen::MatrixXd d_s = Eigen::MatrixXd::Zero(cfg.step_dim, k.batch);
  Eigen::MatrixXd d_p(2 * c, k.input.cols());
  Eigen::MatrixXd d_z(c, k.input.cols());
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    const auto& p = k.p[li];
    grads.block(params.layer_block(l, DenoiserParams::kSkipW)).noalias() += d_skip * p.bottomRows(c).transpose();
    grads.block(params.layer_block(l, DenoiserParams::kSkipB)) += d_skip_sum;
    grads.block(params.layer_block(l, DenoiserParams::kResW)).noalias() += d_x * p.topRows(c).transpose();
    grads.block(params.layer_block(l, DenoiserParams::kResB)) += d_x.rowwise().sum();

    d_p.topRows(c).noalias() = params.block(params.layer_block(l, DenoiserParams::kResW)).transpose() * d_x;
    d_p.bottomRows(c).noalias() = params.block(params.layer_block(l, DenoiserParams::kSkipW)).transpose() * d_skip;
    // d/dh [sigmoid(h) tanh(h)] = s(1-s) tanh(h) + s(1 - tanh(h)^2)
    const Eigen::MatrixXd d_h = d_p.cwiseProduct(k.h[li].unaryExpr([](double v) {
      const double s = sigmoid(v);
      const double th = std::tanh(v);
      return s * (1.0 - s) * th + s * (1.0 - th * th);
    }));
    grads.block(params.layer_block(l, DenoiserParams::kDilW)).noalias() += d_h * k.cols[li].transpose();
    grads.block(params.layer_block(l, DenoiserParams::kDilB)) += d_h.rowwise().sum();
    const Eigen::MatrixXd d_cols = params.block(params.layer_block(l, DenoiserParams::kDilW)).transpose() * d_h;
    d_z.setZero();
    col2im_add(d_cols, k.batch, k.length, cfg.kernel, cfg.dilation(l), d_z);

    const Eigen::MatrixXd d_step = sum_per_sample(d_z, k.batch, k.length);
    grads.block(params.layer_block(l, DenoiserParams::kStepW)).noalias() += d_step * k.s.transpose();
    grads.block(params.layer_block(l, DenoiserParams::kStepB)) += d_step.rowwise().sum();
    d_s.noalias() += params.block(params.layer_block(l, DenoiserParams::kStepW)).transpose() * d_step;

    d_x += d_z;
    if (!d_x.allFinite()) throw NumericError("non-finite gradient in layer " + std::to_string(l));
  }

  const Eigen::MatrixXd d_in = d_x.cwiseProduct((k.in_pre.array() > 0.0).cast<double>().matrix());
  grads.block(DenoiserParams::kInW).noalias() += d_in * k.input.transpose();
  grads.block(DenoiserParams::kInB) += d_in.rowwise().sum();

  const Eigen::MatrixXd d_a2 = d_s.cwiseProduct(swish_grad(k.a2));
  grads.block(DenoiserParams::kStep2W).noalias() += d_a2 * k.h1.transpose();
  grads.block(DenoiserParams::kStep2B) += d_a2.rowwise().sum();
  const Eigen::MatrixXd d_a1 = (params.block(DenoiserParams::kStep2W).transpose() * d_a2).cwiseProduct(swish_grad(k.a1));
  grads.block(DenoiserParams::kStep1W).noalias() += d_a1 * k.pe.transpose();
  grads.block(DenoiserParams::kStep1B) += d_a1.rowwise().sum();
}

}  // namespace rntraj
