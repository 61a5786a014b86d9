#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rntraj {

struct DenoiserConfig {
  int input_dim = 65;        // D + 1
  int channels = 512;        // C
  int step_dim = 512;        // F, positional-encoding width
  int layers = 8;            // L, residual dilated convolution layers
  int layers_per_block = 4;  // m
  int kernel = 3;

  /// Throws InvalidArgument unless L % m == 0, F is even, kernel is odd.
  void validate() const;
  /// Dilation of layer `layer` (0-based): 2^(layer % m), so every block
  /// runs 1, 2, ..., 2^(m-1).
  int dilation(int layer) const { return 1 << (layer % layers_per_block); }

  bool operator==(const DenoiserConfig&) const = default;
};

/// Sinusoidal step encoding: sin(10^(4i/(F/2)) n) for i < F/2, then the
/// matching cosines.
Eigen::VectorXd positional_encoding(int step, int dim);

/// All network weights in one flat buffer, with named views into it.
class DenoiserParams {
 public:
  struct Block {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::size_t offset = 0;
  };

  DenoiserParams() = default;
  /// All-zero parameters.
  explicit DenoiserParams(const DenoiserConfig& cfg);

  /// Fan-in scaled uniform weights and biases; the final output projection
  /// starts at zero so an untrained network predicts zero noise.
  static DenoiserParams initialized(const DenoiserConfig& cfg, std::uint64_t seed);

  const DenoiserConfig& config() const { return cfg_; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::size_t size() const { return data_.size(); }
  const std::vector<Block>& blocks() const { return blocks_; }

  Eigen::Map<Eigen::MatrixXd> block(std::size_t i) {
    return {data_.data() + blocks_[i].offset, blocks_[i].rows, blocks_[i].cols};
  }
  Eigen::Map<const Eigen::MatrixXd> block(std::size_t i) const {
    return {data_.data() + blocks_[i].offset, blocks_[i].rows, blocks_[i].cols};
  }
  std::size_t find(const std::string& name) const;

  void set_zero();
  bool all_finite() const;

  // Block indices.
  static constexpr std::size_t kInW = 0, kInB = 1, kStep1W = 2, kStep1B = 3, kStep2W = 4, kStep2B = 5;
  static constexpr std::size_t kPerLayer = 8;
  enum LayerBlock : std::size_t { kStepW = 0, kStepB, kDilW, kDilB, kResW, kResB, kSkipW, kSkipB };
  std::size_t layer_block(int layer, LayerBlock which) const { return 6 + kPerLayer * layer + which; }
  std::size_t out1_w() const { return 6 + kPerLayer * cfg_.layers; }
  std::size_t out1_b() const { return out1_w() + 1; }
  std::size_t out2_w() const { return out1_w() + 2; }
  std::size_t out2_b() const { return out1_w() + 3; }

 private:
  DenoiserConfig cfg_;
  std::vector<Block> blocks_;
  std::vector<double> data_;
};

/// Intermediate values kept by a forward pass for the backward pass.
struct DenoiserCache {
  int batch = 0;
  int length = 0;
  std::vector<int> steps;
  Eigen::MatrixXd input;          // Din x BT
  Eigen::MatrixXd in_pre;         // C x BT, before the rectifier
  std::vector<Eigen::MatrixXd> x; // L+1 residual-stream states, C x BT
  std::vector<Eigen::MatrixXd> cols;  // im2col of each layer's input Z, kC x BT
  std::vector<Eigen::MatrixXd> h;     // dilated conv output, 2C x BT
  std::vector<Eigen::MatrixXd> p;     // gated activation, 2C x BT
  Eigen::MatrixXd skip;           // scaled skip sum, C x BT
  Eigen::MatrixXd out_pre;        // C x BT, before the head rectifier
  Eigen::MatrixXd pe, a1, h1, a2, s;  // step embedding path, F x B
};

/// Packs B tensors of shape T x Din into Din x (B*T), sample-major.
Eigen::MatrixXd pack_batch(std::span<const Eigen::MatrixXd> samples);
std::vector<Eigen::MatrixXd> unpack_batch(const Eigen::MatrixXd& packed, int batch, int length);

/// Noise prediction for a packed batch of B samples of length T, each with
/// its own diffusion step. Returns Din x (B*T). When `cache` is given, it
/// receives everything `denoiser_backward` needs. Throws NumericError
/// naming the first layer that produced a non-finite value.
Eigen::MatrixXd denoiser_forward(const DenoiserParams& params, const Eigen::MatrixXd& packed, int length,
                                 std::span<const int> steps, DenoiserCache* cache = nullptr);

/// Single sample: T x Din in, T x Din out.
Eigen::MatrixXd denoiser_forward(const DenoiserParams& params, const Eigen::MatrixXd& xn, int step);

/// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output) for
/// the batch held in `cache`.
void denoiser_backward(const DenoiserParams& params, const DenoiserCache& cache, const Eigen::MatrixXd& d_out,
                       DenoiserParams& grads);

}  // namespace rntraj
