#pragma once

#include <filesystem>
#include <iosfwd>

#include "rntraj/denoiser.hpp"

namespace rntraj {

/// A trained denoiser plus the schedule it was trained under.
struct Checkpoint {
  DenoiserParams params;
  int diffusion_steps = 500;
  double beta_1 = 1e-4;
  double beta_N = 0.02;
  int epoch = 0;
};

/// Text header `#ckpt v1 key=value ...`, then for every tensor a text line
/// `name rows cols` followed by rows*cols little-endian float32 values in
/// column-major order.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rntraj
