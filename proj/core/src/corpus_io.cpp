#include "rntraj/corpus_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "csv.hpp"
#include "rntraj/error.hpp"

namespace rntraj {

void write_corpus(std::ostream& out, const Corpus& corpus, const std::string& network) {
  out << "#rntraj v1 network=" << network << '\n';
  char buf[64];
  for (const auto& traj : corpus) {
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const auto& p = traj.points[t];
      std::snprintf(buf, sizeof(buf), "%lld:%.6f", static_cast<long long>(p.segment), p.ratio);
      if (t) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus, const std::string& network) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_corpus(out, corpus, network);
}

std::string corpus_to_string(const Corpus& corpus, const std::string& network) {
  std::ostringstream out;
  write_corpus(out, corpus, network);
  return out.str();
}

CorpusFile read_corpus(std::istream& in, const std::string& source) {
  CorpusFile file;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty corpus file");
  constexpr std::string_view prefix = "#rntraj v1 network=";
  const auto header = detail::trim(line);
  if (header.substr(0, prefix.size()) != prefix) {
    throw ParseError(source + ": expected header '#rntraj v1 network=<name>'");
  }
  file.network = std::string(header.substr(prefix.size()));

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto ctx = source + ":" + std::to_string(line_no);
    std::istringstream tokens(line);
    std::string token;
    RNTraj traj;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) throw ParseError(ctx + ": token '" + token + "' is not segmentId:ratio");
      const std::string_view tv(token);
      const RNTrajPoint p{detail::parse_number<SegmentId>(tv.substr(0, colon), ctx),
                          detail::parse_number<double>(tv.substr(colon + 1), ctx)};
      if (p.ratio < 0.0 || p.ratio > 1.0) throw ParseError(ctx + ": ratio outside [0, 1]");
      traj.points.push_back(p);
    }
    if (!traj.points.empty()) file.trajectories.push_back(std::move(traj));
  }
  return file;
}

CorpusFile read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_corpus(in, path.string());
}

}  // namespace rntraj
