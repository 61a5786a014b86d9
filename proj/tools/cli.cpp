#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rntraj/baselines.hpp"
#include "rntraj/checkpoint.hpp"
#include "rntraj/config.hpp"
#include "rntraj/corpus_io.hpp"
#include "rntraj/diffusion.hpp"
#include "rntraj/error.hpp"
#include "rntraj/metrics.hpp"
#include "rntraj/parallel.hpp"
#include "rntraj/roadnet.hpp"
#include "rntraj/train.hpp"
#include "rntraj/trajsim.hpp"
#include "rntraj/utgraph.hpp"

namespace rntraj::cli {

namespace fs = std::filesystem;
using Entries = std::vector<std::pair<std::string, std::string>>;

namespace {

std::string str(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void echo_into_dir(const fs::path& dir, const Entries& entries) { write_config(entries, dir / "config.resolved"); }

void echo_beside(const fs::path& file, const Entries& entries) {
  write_config(entries, fs::path(file.string() + ".config.resolved"));
}

void check_segments(const Corpus& corpus, const RoadNetwork& net, const std::string& what) {
  for (const auto& t : corpus) {
    for (const auto& p : t.points) {
      if (!net.has_segment(p.segment)) {
        throw UnknownId(what + " uses segment " + std::to_string(p.segment) + " absent from network " + net.name());
      }
    }
  }
}

struct NetgenArgs {
  int rows = 0;
  int cols = 0;
  double spacing = 100.0;
  std::string out;
};

struct SimulateArgs {
  std::string net;
  SimulationConfig sim;
  std::string out;
};

struct PretrainArgs {
  std::string corpus;
  std::string net;
  Node2VecConfig n2v;
  std::string out;
};

struct TrainArgs {
  std::string corpus;
  std::string net;
  std::string emb;
  std::string config;
  std::vector<std::string> sets;
  int epochs = 0;
  int batch = 0;
  std::uint64_t seed = 0;
  bool no_l2 = false;
  bool no_l3 = false;
  std::string out;
};

struct SampleArgs {
  std::string ckpt;
  std::string emb;
  std::string net;
  std::string counts_from;
  std::uint64_t seed = 1;
  int batch = 64;
  bool constant_noise = false;
  std::string out;
};

struct EvaluateArgs {
  std::string gen;
  std::string ref;
  std::string net;
  double grid_m = 50.0;
  int bins = 100;
  bool straight_line = false;
  std::string heatmap_dir;
  std::string out;
};

struct BaselineArgs {
  std::string kind;
  std::string ref;
  std::uint64_t seed = 1;
  std::string out;
};

void do_netgen(const NetgenArgs& a, std::ostream& out) {
  const auto net = generate_grid_network(a.rows, a.cols, a.spacing);
  save_network(net, a.out);
  echo_into_dir(a.out, {{"command", "netgen"}, {"rows", std::to_string(a.rows)}, {"cols", std::to_string(a.cols)},
                        {"spacing", str(a.spacing)}});
  out << "wrote " << net.intersections().size() << " intersections and " << net.segments().size() << " segments to "
      << a.out << '\n';
}

void do_simulate(SimulateArgs a, int workers, std::ostream& out) {
  const auto net = load_network(a.net);
  a.sim.workers = workers;
  const auto corpus = simulate_corpus(net, a.sim);
  write_corpus(fs::path(a.out), corpus, net.name());
  echo_beside(a.out, {{"command", "simulate"},
                      {"net", a.net},
                      {"n", std::to_string(a.sim.n_traj)},
                      {"tmin", std::to_string(a.sim.min_length)},
                      {"tmax", std::to_string(a.sim.max_length)},
                      {"interval", str(a.sim.interval_s)},
                      {"speed", str(a.sim.speed.mean_mps)},
                      {"jitter", str(a.sim.speed.jitter)},
                      {"seed", std::to_string(a.sim.seed)}});
  out << "wrote " << corpus.size() << " trajectories to " << a.out << '\n';
}

void do_pretrain(const PretrainArgs& a, std::ostream& out, std::ostream& err) {
  const auto corpus = read_corpus(fs::path(a.corpus)).trajectories;
  std::vector<SegmentId> extra;
  if (!a.net.empty()) {
    const auto net = load_network(a.net);
    check_segments(corpus, net, "corpus");
    for (const auto& s : net.segments()) extra.push_back(s.id);
  }
  const auto g = build_utgraph(corpus, extra);
  PretrainStats stats;
  const auto table = pretrain_embeddings(g, a.n2v, &stats);
  if (stats.isolated_nodes > 0) {
    err << "warning: " << stats.isolated_nodes << " segments have no outgoing edge; their walks have length 1\n";
  }
  save_embeddings(table, a.out);
  echo_beside(a.out, {{"command", "pretrain"},
                      {"corpus", a.corpus},
                      {"net", a.net},
                      {"dim", std::to_string(a.n2v.dim)},
                      {"walks", std::to_string(a.n2v.walks_per_node)},
                      {"walk_len", std::to_string(a.n2v.walk_length)},
                      {"window", std::to_string(a.n2v.window)},
                      {"iters", std::to_string(a.n2v.iterations)},
                      {"negatives", std::to_string(a.n2v.negatives)},
                      {"lr", str(a.n2v.learning_rate)},
                      {"p", str(a.n2v.return_p)},
                      {"q", str(a.n2v.inout_q)},
                      {"rms", str(a.n2v.target_rms)},
                      {"seed", std::to_string(a.n2v.seed)}});
  out << "wrote " << table.rows() << "x" << table.dim() << " embeddings to " << a.out << '\n';
}

void do_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainConfig cfg;
  if (!a.config.empty()) apply_config(cfg, load_config(a.config));
  ConfigMap overrides;
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  apply_config(cfg, overrides);
  if (a.epochs > 0) cfg.epochs = a.epochs;
  if (a.batch > 0) cfg.batch_size = a.batch;
  if (a.seed > 0) cfg.seed = a.seed;
  if (a.no_l2) cfg.use_l2 = false;
  if (a.no_l3) cfg.use_l3 = false;

  const auto net = load_network(a.net);
  const auto corpus = read_corpus(fs::path(a.corpus)).trajectories;
  check_segments(corpus, net, "corpus");
  const auto table = load_embeddings(a.emb);
  cfg.model.input_dim = table.dim() + 1;
  cfg.validate();
  const auto graph = build_utgraph(corpus);
  const auto sched = quadratic_schedule(cfg.diffusion_steps, cfg.beta_1, cfg.beta_N);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  auto entries = config_entries(cfg);
  entries.insert(entries.begin(), {{"command", "train"}, {"corpus", a.corpus}, {"net", a.net}, {"emb", a.emb}});
  echo_into_dir(dir, entries);

  std::ofstream log(dir / "train_log.csv");
  if (!log) throw IoError("cannot write " + (dir / "train_log.csv").string());
  log << "epoch,l1,l2,l3_soft,l3_hard,lr\n";
  auto on_epoch = [&](const EpochLog& e, const DenoiserParams& params) {
    log << e.epoch << ',' << str(e.l1) << ',' << str(e.l2) << ',' << str(e.l3_soft) << ',' << str(e.l3_hard) << ','
        << str(e.lr) << '\n';
    log.flush();
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", e.epoch);
    save_checkpoint(dir / name, Checkpoint{params, cfg.diffusion_steps, cfg.beta_1, cfg.beta_N, e.epoch});
    err << "epoch " << e.epoch << ": total " << e.total << " l1 " << e.l1 << " l2 " << e.l2 << " l3 " << e.l3_soft
        << " hard " << e.l3_hard << " lr " << e.lr << '\n';
  };
  const auto result = train(corpus, table, graph, sched, cfg, on_epoch);
  save_checkpoint(dir / "model.ckpt",
                  Checkpoint{result.params, cfg.diffusion_steps, cfg.beta_1, cfg.beta_N, cfg.epochs});
  out << "trained " << cfg.epochs << " epochs; checkpoints in " << a.out << '\n';
}

void do_sample(const SampleArgs& a, int workers, std::ostream& out) {
  const auto ckpt = load_checkpoint(a.ckpt);
  const auto table = load_embeddings(a.emb);
  const auto net = load_network(a.net);
  if (ckpt.params.config().input_dim != table.dim() + 1) {
    throw InvalidArgument("checkpoint expects " + std::to_string(ckpt.params.config().input_dim - 1) +
                          " embedding channels, embedding file has " + std::to_string(table.dim()));
  }
  for (auto id : table.ids()) {
    if (!net.has_segment(id)) throw UnknownId("embedding row for segment " + std::to_string(id) + " not in network");
  }
  const auto counts = length_counts(read_corpus(fs::path(a.counts_from)).trajectories);
  const auto sched = quadratic_schedule(ckpt.diffusion_steps, ckpt.beta_1, ckpt.beta_N);
  SamplerOptions opts;
  opts.constant_noise = a.constant_noise;
  opts.batch = a.batch;
  opts.workers = workers;
  const auto corpus = sample_corpus(ckpt.params, table, sched, counts, a.seed, opts);
  write_corpus(fs::path(a.out), corpus, net.name());
  echo_beside(a.out, {{"command", "sample"},
                      {"ckpt", a.ckpt},
                      {"emb", a.emb},
                      {"net", a.net},
                      {"counts_from", a.counts_from},
                      {"seed", std::to_string(a.seed)},
                      {"batch", std::to_string(a.batch)},
                      {"constant_noise", a.constant_noise ? "true" : "false"}});
  out << "wrote " << corpus.size() << " trajectories to " << a.out << '\n';
}

void do_evaluate(const EvaluateArgs& a, int workers, std::ostream& out) {
  const auto net = load_network(a.net);
  const auto gen = read_corpus(fs::path(a.gen)).trajectories;
  const auto ref = read_corpus(fs::path(a.ref)).trajectories;
  check_segments(gen, net, "generated corpus");
  check_segments(ref, net, "reference corpus");
  MetricOptions opts;
  opts.bins = a.bins;
  opts.grid_m = a.grid_m;
  opts.distance = a.straight_line ? DistanceMode::kStraightLine : DistanceMode::kNetwork;
  opts.workers = workers;
  const auto report = evaluate(gen, ref, net, opts);
  write_report(report, a.out);
  if (!a.heatmap_dir.empty()) {
    const auto [g, r] = grid_densities(gen, ref, net, a.grid_m);
    write_heatmap_csv(g, fs::path(a.heatmap_dir) / "gpd_gen.csv");
    write_heatmap_csv(r, fs::path(a.heatmap_dir) / "gpd_ref.csv");
  }
  echo_beside(a.out, {{"command", "evaluate"},
                      {"gen", a.gen},
                      {"ref", a.ref},
                      {"net", a.net},
                      {"grid_m", str(a.grid_m)},
                      {"bins", std::to_string(a.bins)},
                      {"distance", a.straight_line ? "straight_line" : "network"}});
  out << report_to_string(report);
}

void do_baseline(const BaselineArgs& a, int workers, std::ostream& out) {
  const auto ref = read_corpus(fs::path(a.ref));
  const auto counts = length_counts(ref.trajectories);
  Corpus corpus;
  if (a.kind == "rwrn") {
    corpus = rwrn_generate(build_utgraph(ref.trajectories), counts, a.seed, workers);
  } else {
    corpus = markov_generate(ref.trajectories, counts, a.seed, workers);
  }
  write_corpus(fs::path(a.out), corpus, ref.network);
  echo_beside(a.out, {{"command", "baseline"}, {"kind", a.kind}, {"ref", a.ref}, {"seed", std::to_string(a.seed)}});
  out << "wrote " << corpus.size() << " " << a.kind << " trajectories to " << a.out << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Road-network trajectory generation toolkit", "rntraj"};
  app.require_subcommand(1);
  app.fallthrough();
  int workers = 0;
  app.add_option("--workers", workers, "Worker threads (default: RNTRAJ_WORKERS, else all cores)");
  std::function<void()> action;

  NetgenArgs netgen;
  auto* c = app.add_subcommand("netgen", "Write a rows x cols lattice network");
  c->add_option("--rows", netgen.rows)->required();
  c->add_option("--cols", netgen.cols)->required();
  c->add_option("--spacing", netgen.spacing, "Segment length in meters")->capture_default_str();
  c->add_option("-o,--out", netgen.out, "Output directory")->required();
  c->callback([&] { action = [&] { do_netgen(netgen, out); }; });

  SimulateArgs sim;
  c = app.add_subcommand("simulate", "Simulate ground-truth trajectories on a network");
  c->add_option("--net", sim.net, "Network directory")->required();
  c->add_option("--n", sim.sim.n_traj, "Number of trajectories")->capture_default_str();
  c->add_option("--tmin", sim.sim.min_length)->capture_default_str();
  c->add_option("--tmax", sim.sim.max_length)->capture_default_str();
  c->add_option("--interval", sim.sim.interval_s, "Sampling interval in seconds")->capture_default_str();
  c->add_option("--speed", sim.sim.speed.mean_mps, "Mean speed in m/s")->capture_default_str();
  c->add_option("--jitter", sim.sim.speed.jitter)->capture_default_str();
  c->add_option("--seed", sim.sim.seed)->capture_default_str();
  c->add_option("-o,--out", sim.out, "Output corpus file")->required();
  c->callback([&] { action = [&] { do_simulate(sim, resolve_workers(workers), out); }; });

  PretrainArgs pre;
  c = app.add_subcommand("pretrain", "Train node2vec segment embeddings on the trajectory graph");
  c->add_option("--corpus", pre.corpus)->required();
  c->add_option("--net", pre.net, "Also embed network segments absent from the corpus");
  c->add_option("--dim", pre.n2v.dim)->capture_default_str();
  c->add_option("--walks", pre.n2v.walks_per_node)->capture_default_str();
  c->add_option("--walk-len", pre.n2v.walk_length)->capture_default_str();
  c->add_option("--window", pre.n2v.window)->capture_default_str();
  c->add_option("--iters", pre.n2v.iterations, "Skip-gram passes over the walks")->capture_default_str();
  c->add_option("--negatives", pre.n2v.negatives)->capture_default_str();
  c->add_option("--lr", pre.n2v.learning_rate)->capture_default_str();
  c->add_option("--p", pre.n2v.return_p)->capture_default_str();
  c->add_option("--q", pre.n2v.inout_q)->capture_default_str();
  c->add_option("--rms", pre.n2v.target_rms, "Rescale the table to this entry RMS (0 keeps the trained scale)")
      ->capture_default_str();
  c->add_option("--seed", pre.n2v.seed)->capture_default_str();
  c->add_option("-o,--out", pre.out, "Output embedding file")->required();
  c->callback([&] { action = [&] { do_pretrain(pre, out, err); }; });

  TrainArgs tr;
  c = app.add_subcommand("train", "Train the denoiser");
  c->add_option("--corpus", tr.corpus)->required();
  c->add_option("--net", tr.net)->required();
  c->add_option("--emb", tr.emb)->required();
  c->add_option("--config", tr.config, "key = value file");
  c->add_option("--set", tr.sets, "Override one config key (key=value); repeatable");
  c->add_option("--epochs", tr.epochs);
  c->add_option("--batch-size", tr.batch);
  c->add_option("--seed", tr.seed);
  c->add_flag("--no-l2", tr.no_l2, "Drop the reconstruction loss");
  c->add_flag("--no-l3", tr.no_l3, "Drop the spatial validity loss");
  c->add_option("-o,--out", tr.out, "Checkpoint directory")->required();
  c->callback([&] { action = [&] { do_train(tr, out, err); }; });

  SampleArgs sa;
  c = app.add_subcommand("sample", "Generate trajectories with a trained denoiser");
  c->add_option("--ckpt", sa.ckpt)->required();
  c->add_option("--emb", sa.emb)->required();
  c->add_option("--net", sa.net)->required();
  c->add_option("--counts-from", sa.counts_from, "Corpus whose per-length counts are reproduced")->required();
  c->add_option("--seed", sa.seed)->capture_default_str();
  c->add_option("--batch", sa.batch, "Trajectories per network call")->capture_default_str();
  c->add_flag("--constant-noise", sa.constant_noise, "Add the posterior deviation without a random factor");
  c->add_option("-o,--out", sa.out)->required();
  c->callback([&] { action = [&] { do_sample(sa, resolve_workers(workers), out); }; });

  EvaluateArgs ev;
  c = app.add_subcommand("evaluate", "Compare a generated corpus with a reference corpus");
  c->add_option("--gen", ev.gen)->required();
  c->add_option("--ref", ev.ref)->required();
  c->add_option("--net", ev.net)->required();
  c->add_option("--grid-m", ev.grid_m)->capture_default_str();
  c->add_option("--bins", ev.bins)->capture_default_str();
  c->add_flag("--straight-line", ev.straight_line, "Use straight-line instead of network distances");
  c->add_option("--heatmap-dir", ev.heatmap_dir, "Write GPD cell masses of both corpora as CSV grids");
  c->add_option("-o,--out", ev.out, "Report CSV")->required();
  c->callback([&] { action = [&] { do_evaluate(ev, resolve_workers(workers), out); }; });

  BaselineArgs bl;
  c = app.add_subcommand("baseline", "Generate a rule-based baseline corpus");
  c->add_option("--kind", bl.kind)->required()->check(CLI::IsMember({"rwrn", "markov"}));
  c->add_option("--ref", bl.ref)->required();
  c->add_option("--seed", bl.seed)->capture_default_str();
  c->add_option("-o,--out", bl.out)->required();
  c->callback([&] { action = [&] { do_baseline(bl, resolve_workers(workers), out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    action();
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
  } catch (const fs::filesystem_error& e) {
    err << "error: io_error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace rntraj::cli
