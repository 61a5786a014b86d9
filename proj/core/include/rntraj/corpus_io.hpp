#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "rntraj/trajectory.hpp"

namespace rntraj {

struct CorpusFile {
  std::string network;
  Corpus trajectories;
};

/// Text corpus format: header `#rntraj v1 network=<name>`, then one
/// trajectory per line as whitespace-separated `segmentId:ratio` tokens with
/// ratios printed to 6 decimals.
void write_corpus(std::ostream& out, const Corpus& corpus, const std::string& network);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus, const std::string& network);
CorpusFile read_corpus(std::istream& in, const std::string& source = "<stream>");
CorpusFile read_corpus(const std::filesystem::path& path);

std::string corpus_to_string(const Corpus& corpus, const std::string& network);

}  // namespace rntraj
