#include "rntraj/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "rntraj/error.hpp"

namespace rntraj {

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const auto& cfg = ckpt.params.config();
  out << "#ckpt v1 input_dim=" << cfg.input_dim << " channels=" << cfg.channels << " step_dim=" << cfg.step_dim
      << " layers=" << cfg.layers << " layers_per_block=" << cfg.layers_per_block << " kernel=" << cfg.kernel
      << " diffusion_steps=" << ckpt.diffusion_steps << " beta_1=" << detail::format_double(ckpt.beta_1)
      << " beta_N=" << detail::format_double(ckpt.beta_N) << " epoch=" << ckpt.epoch << '\n';
  for (std::size_t i = 0; i < ckpt.params.blocks().size(); ++i) {
    const auto& blk = ckpt.params.blocks()[i];
    out << blk.name << ' ' << blk.rows << ' ' << blk.cols << '\n';
    const auto m = ckpt.params.block(i);
    for (Eigen::Index k = 0; k < m.size(); ++k) detail::write_f32_le(out, static_cast<float>(m.data()[k]));
  }
  if (!out) throw IoError("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("#ckpt v1", 0) != 0) throw ParseError("expected '#ckpt v1' header");
  std::map<std::string, std::string> fields;
  std::istringstream hs(header.substr(8));
  std::string kv;
  while (hs >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("checkpoint: malformed header field '" + kv + "'");
    fields[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  auto field = [&](const char* key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) throw ParseError(std::string("checkpoint: header lacks ") + key);
    return it->second;
  };
  auto int_field = [&](const char* key) { return detail::parse_number<int>(field(key), "checkpoint"); };

  DenoiserConfig cfg;
  cfg.input_dim = int_field("input_dim");
  cfg.channels = int_field("channels");
  cfg.step_dim = int_field("step_dim");
  cfg.layers = int_field("layers");
  cfg.layers_per_block = int_field("layers_per_block");
  cfg.kernel = int_field("kernel");
  cfg.validate();

  Checkpoint ckpt{DenoiserParams(cfg), int_field("diffusion_steps"),
                  detail::parse_number<double>(field("beta_1"), "checkpoint"),
                  detail::parse_number<double>(field("beta_N"), "checkpoint"), 0};
  if (fields.count("epoch")) ckpt.epoch = int_field("epoch");

  std::vector<unsigned char> buf;
  for (std::size_t i = 0; i < ckpt.params.blocks().size(); ++i) {
    const auto& blk = ckpt.params.blocks()[i];
    std::string line;
    if (!std::getline(in, line)) throw ParseError("checkpoint: missing tensor " + blk.name);
    std::istringstream ls(line);
    std::string name;
    long long rows = -1;
    long long cols = -1;
    if (!(ls >> name >> rows >> cols) || name != blk.name || rows != blk.rows || cols != blk.cols) {
      throw ParseError("checkpoint: expected tensor '" + blk.name + " " + std::to_string(blk.rows) + " " +
                       std::to_string(blk.cols) + "', found '" + line + "'");
    }
    buf.resize(static_cast<std::size_t>(rows * cols * 4));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw ParseError("checkpoint: truncated " + blk.name);
    auto m = ckpt.params.block(i);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = detail::read_f32_le(&buf[static_cast<std::size_t>(k) * 4]);
  }
  if (!ckpt.params.all_finite()) throw NumericError("checkpoint holds non-finite weights");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_checkpoint(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace rntraj
