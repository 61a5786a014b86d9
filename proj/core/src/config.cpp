#include "rntraj/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "csv.hpp"
#include "rntraj/error.hpp"

namespace rntraj {

ConfigMap parse_config(std::istream& in, const std::string& source) {
  ConfigMap out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    view = detail::trim(view.substr(0, view.find('#')));
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const auto key = std::string(detail::trim(view.substr(0, eq)));
    const auto value = std::string(detail::trim(view.substr(eq + 1)));
    if (key.empty()) throw ParseError(source + ":" + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

ConfigMap load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_config(in, path.string());
}

namespace {

struct Field {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError(key + ": expected true or false, got '" + v + "'");
}

template <typename T, typename M>
Field number_field(const char* key, M member) {
  return {key,
          [member](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return detail::format_double(std::invoke(member, c));
            } else {
              return std::to_string(std::invoke(member, c));
            }
          },
          [member, key](TrainConfig& c, const std::string& v) { std::invoke(member, c) = detail::parse_number<T>(v, key); }};
}

Field bool_field(const char* key, bool TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); },
          [member, key](TrainConfig& c, const std::string& v) { c.*member = parse_bool(v, key); }};
}

template <typename T>
auto model_member(T DenoiserConfig::*m) {
  return [m](auto& c) -> decltype(auto) { return (c.model.*m); };
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      number_field<int>("epochs", &TrainConfig::epochs),
      number_field<int>("batch_size", &TrainConfig::batch_size),
      number_field<double>("learning_rate", &TrainConfig::learning_rate),
      number_field<double>("lr_decay", &TrainConfig::lr_decay),
      number_field<int>("lr_decay_every", &TrainConfig::lr_decay_every),
      number_field<int>("diffusion_steps", &TrainConfig::diffusion_steps),
      number_field<double>("beta_1", &TrainConfig::beta_1),
      number_field<double>("beta_N", &TrainConfig::beta_N),
      number_field<double>("temperature", &TrainConfig::temperature),
      number_field<int>("top_k", &TrainConfig::top_k),
      bool_field("use_l2", &TrainConfig::use_l2),
      bool_field("use_l3", &TrainConfig::use_l3),
      number_field<std::uint64_t>("seed", &TrainConfig::seed),
      number_field<int>("channels", model_member(&DenoiserConfig::channels)),
      number_field<int>("step_dim", model_member(&DenoiserConfig::step_dim)),
      number_field<int>("layers", model_member(&DenoiserConfig::layers)),
      number_field<int>("layers_per_block", model_member(&DenoiserConfig::layers_per_block)),
      number_field<int>("kernel", model_member(&DenoiserConfig::kernel)),
  };
  return all;
}

}  // namespace

void apply_config(TrainConfig& cfg, const ConfigMap& values) {
  for (const auto& [key, value] : values) {
    const auto& all = fields();
    auto it = std::find_if(all.begin(), all.end(), [&](const Field& f) { return key == f.key; });
    if (it == all.end()) throw InvalidArgument("unknown config key '" + key + "'");
    it->set(cfg, value);
  }
}

std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(cfg));
  return out;
}

std::string format_config(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ostringstream out;
  for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
  return out.str();
}

void write_config(const std::vector<std::pair<std::string, std::string>>& entries, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_config(entries);
}

}  // namespace rntraj
