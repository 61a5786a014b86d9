#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rntraj/train.hpp"

namespace rntraj {

/// Flat `key = value` settings. Blank lines and `#` comments are skipped.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::istream& in, const std::string& source = "config");
ConfigMap load_config(const std::filesystem::path& path);

/// Overrides fields of `cfg` named in `values`. Throws InvalidArgument on
/// unknown keys and ParseError on malformed values.
void apply_config(TrainConfig& cfg, const ConfigMap& values);

/// Every addressable field with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& cfg);

/// `key = value` lines, one per entry.
std::string format_config(const std::vector<std::pair<std::string, std::string>>& entries);
void write_config(const std::vector<std::pair<std::string, std::string>>& entries, const std::filesystem::path& path);

}  // namespace rntraj
