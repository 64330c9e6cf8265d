// Copyright 2026 The lspo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// lspo command line: solve, exploitability, rpssl-demo, corpus, loop, eval,
// serve. Run with --help for the flags of each.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "lspo/best_response.hpp"
#include "lspo/cfr.hpp"
#include "lspo/eval.hpp"
#include "lspo/kuhn.hpp"
#include "lspo/latent.hpp"
#include "lspo/lspo_loop.hpp"
#include "lspo/play_server.hpp"
#include "lspo/rpssl.hpp"
#include "lspo/werewolf/replay.hpp"

namespace fs = std::filesystem;
using namespace lspo;

namespace {

struct SolveOpts {
  std::string game = "rpssl";
  int iterations = 10000;
  std::uint64_t seed = 0;
  int depth = 0;
  std::string traversal;
  bool plus = false, linear = false;
  std::string out;
  std::string corpus;
  int iteration = 1;
  int k = 0;
};

SolverConfig solver_config(const SolveOpts& o, Traversal fallback) {
  SolverConfig c{.iterations = o.iterations, .seed = o.seed,
                 .traversal = o.traversal.empty() ? fallback : parse_traversal(o.traversal),
                 .plus_variant = o.plus, .linear_averaging = o.linear};
  if (o.depth > 0) c.depth_limit = o.depth;
  c.validate();
  return c;
}

template <class G>
Checkpoint solve_plain(const G& game, const std::string& name, const SolverConfig& sc) {
  CfrSolver solver(game, sc);
  solver.solve();
  return {.game = name, .config = sc, .iterations_done = solver.iterations_done(), .tables = solver.tables()};
}

werewolf::GameConfig table_for(const std::string& game) {
  if (game == "werewolf4") return werewolf::GameConfig::four_player();
  if (game == "werewolf7") return werewolf::GameConfig::seven_player();
  fail(Errc::kParseError, "unknown game '" + game + "' (rpssl, kuhn, werewolf4, werewolf7)");
}

std::vector<latent::UtteranceRecord> corpus_or_synth(const std::string& path, int iterations,
                                                     const latent::ClusterSchedule& schedule, std::uint64_t seed) {
  if (!path.empty()) return latent::ingest_corpus(path);
  return latent::synth_corpus({.iterations = iterations, .seed = seed, .schedule = schedule});
}

int run_solve(const SolveOpts& o) {
  if (o.out.empty()) fail(Errc::kParseError, "--out is required");
  Checkpoint c;
  if (o.game == "rpssl") {
    c = solve_plain(rpssl::Game(), "rpssl", solver_config(o, Traversal::kFull));
  } else if (o.game == "kuhn") {
    c = solve_plain(kuhn::Game(), "kuhn", solver_config(o, Traversal::kExternalSampling));
  } else {
    const auto base = table_for(o.game);
    const auto schedule = o.k > 0 ? latent::ClusterSchedule::uniform(o.k) : latent::ClusterSchedule{};
    werewolf::Agent a;
    a.id = o.out;
    a.iteration = o.iteration;
    a.catalogs = latent::build_catalogs(corpus_or_synth(o.corpus, o.iteration, schedule, o.seed), schedule,
                                        o.iteration, o.seed, werewolf::roles_in(base));
    a.config = werewolf::config_for(base, a.catalogs);
    const auto sc = solver_config(o, Traversal::kExternalSampling);
    CfrSolver solver(werewolf::Game(a.config), sc);
    solver.solve();
    a.policy = solver.tables().average;
    c = werewolf::agent_checkpoint(a, sc, solver.iterations_done(), solver.tables());
  }
  save_checkpoint(c, o.out);
  std::cout << "wrote " << o.out << " (" << c.game << ", " << c.iterations_done << " iterations, "
            << c.tables.average.size() << " infosets)\n";
  return 0;
}

void print_profile(const ExploitabilityProfile& e) {
  std::cout << "seat,policy_value,best_response_value,gain\n";
  for (std::size_t p = 0; p < e.gains.size(); ++p) {
    std::cout << p << ',' << e.policy_values[p] << ',' << e.br_values[p] << ',' << e.gains[p] << '\n';
  }
  std::cout << "aggregate," << e.aggregate << '\n';
}

int run_exploitability(const std::string& path, std::int64_t cap) {
  const auto c = load_checkpoint(path);
  if (c.game == "rpssl") {
    print_profile(exploitability_profile(rpssl::Game(), c.tables.average, cap));
  } else if (c.game == "kuhn") {
    print_profile(exploitability_profile(kuhn::Game(), c.tables.average, cap));
  } else {
    const auto a = werewolf::agent_from_checkpoint(c);
    print_profile(exploitability_profile(werewolf::Game(a.config), a.policy, cap));
  }
  return 0;
}

void strategy_row(std::ostream& out, int it, const rpssl::MixedStrategy& s, double expl) {
  out << it;
  for (double p : s) out << ',' << p;
  out << ',' << expl << '\n';
}

int run_rpssl_demo(int iterations, int every, bool expand) {
  std::cout << "iteration,p_rock,p_paper,p_scissors,p_spock,p_lizard,exploitability";
  if (expand) {
    std::cout << ",subset\n";
    const auto its = loop::rpssl_expansion({});
    for (std::size_t i = 0; i < its.size(); ++i) {
      std::cout << i + 1;
      for (double p : its[i].strategy) std::cout << ',' << p;
      std::cout << ',' << its[i].exploitability << ',';
      for (std::size_t t = 0; t < its[i].subset.size(); ++t) {
        std::cout << (t ? "|" : "") << rpssl::throw_name(its[i].subset[t]);
      }
      std::cout << '\n';
    }
    return 0;
  }
  std::cout << '\n';
  const rpssl::Game game;
  CfrSolver solver(game, SolverConfig{.iterations = iterations, .traversal = Traversal::kFull});
  solver.solve([&](int t, const SolverTables& tables) {
    if (t % every != 0 && t != iterations) return;
    const auto p = tables.average.probs("p0", rpssl::kNumThrows);
    rpssl::MixedStrategy s{};
    std::copy(p.begin(), p.end(), s.begin());
    strategy_row(std::cout, t, s, rpssl::exploitability(s));
  });
  return 0;
}

struct LoopOpts {
  int iterations = 3;
  std::string out = "lspo_run";
  std::string corpus;
  std::string game = "werewolf4";
  int solver_iterations = 2000;
  int candidates = loop::kDefaultCandidates;
  int games = loop::kDefaultGames;
  int eval_games = 200;
  std::uint64_t seed = 0;
  bool best_vs_rest = false, no_exploitability = false;
  int workers = 1;
};

int run_loop(const LoopOpts& o) {
  loop::LoopConfig cfg;
  cfg.base = table_for(o.game);
  cfg.solver = SolverConfig{.iterations = o.solver_iterations, .seed = o.seed};
  cfg.candidates = o.candidates;
  cfg.games = o.games;
  cfg.eval_games = o.eval_games;
  cfg.seed = o.seed;
  cfg.dpo.best_vs_rest = o.best_vs_rest;
  cfg.exploitability = !o.no_exploitability && o.game == "werewolf4";
  cfg.workers = o.workers;
  std::unique_ptr<loop::StrategyProvider> provider;
  if (o.corpus.empty()) {
    provider = std::make_unique<loop::SynthProvider>(latent::SynthSpec{.seed = o.seed, .schedule = cfg.schedule});
  } else {
    provider = std::make_unique<loop::FileProvider>(o.corpus);
  }
  const loop::IterationArtifacts* prior = nullptr;
  loop::IterationArtifacts last;
  for (int it = 1; it <= o.iterations; ++it) {
    last = loop::run_iteration(cfg, *provider, it, o.out, prior);
    std::cout << "iteration " << it << ": " << last.dir << "  rows=" << last.metrics["dataset"]["rows"]
              << "  sha256=" << last.dataset_digest.substr(0, 16);
    if (last.metrics.contains("exploitability")) {
      std::cout << "  exploitability=" << last.metrics["exploitability"]["aggregate"];
    }
    if (last.metrics.contains("vs_previous")) {
      const auto& v = last.metrics["vs_previous"];
      std::cout << "  vs_previous=" << v["wins"] << "-" << v["losses"] << "-" << v["draws"];
    }
    std::cout << '\n';
    prior = &last;
  }
  return 0;
}

int run_corpus_synth(const std::string& out, int iterations, int per_blob, int dim, std::uint64_t seed) {
  const auto records = latent::synth_corpus({.dim = dim, .per_blob = per_blob, .iterations = iterations, .seed = seed});
  latent::write_corpus(out, records);
  std::cout << "wrote " << records.size() << " records to " << out << '\n';
  return 0;
}

std::shared_ptr<const werewolf::Agent> load_shared(const std::string& path) {
  return std::make_shared<const werewolf::Agent>(werewolf::load_agent(path));
}

int run_head2head(const std::string& wolf, const std::string& village, int games, std::uint64_t seed,
                  const std::string& out, int workers) {
  const auto w = load_shared(wolf);
  const auto v = wolf == village ? w : load_shared(village);
  const auto rep = eval::head_to_head({.wolf = w, .village = v, .games = games, .seed = seed, .workers = workers});
  fs::create_directories(out);
  {
    std::ofstream csv(fs::path(out) / "head2head.csv");
    csv << eval::report_csv(rep);
  }
  werewolf::write_replays((fs::path(out) / "replays.jsonl").string(), rep.replays);
  std::cout << eval::report_summary(rep) << "wrote " << (fs::path(out) / "head2head.csv").string() << " and "
            << (fs::path(out) / "replays.jsonl").string() << '\n';
  return 0;
}

int run_predict(std::string path, std::size_t beam) {
  if (fs::is_directory(path)) path = (fs::path(path) / "replays.jsonl").string();
  const auto replays = werewolf::read_replays(path);
  if (replays.empty()) fail(Errc::kInsufficientData, path + " holds no games");
  const auto& first = replays.front();
  for (const auto& r : replays) {
    if (r.wolf_checkpoint != first.wolf_checkpoint || r.village_checkpoint != first.village_checkpoint) {
      fail(Errc::kIncompatibleCheckpoints, "replays mix checkpoints; split the file per matchup");
    }
  }
  const auto w = load_shared(first.wolf_checkpoint);
  const auto v = first.village_checkpoint == first.wolf_checkpoint ? w : load_shared(first.village_checkpoint);
  const werewolf::Matchup m(w, v);
  const auto rep = eval::prediction_report(replays, m.game, m, beam);
  std::cout << eval::prediction_csv(rep);
  std::cerr << rep.predictions << " predictions over " << replays.size() << " games";
  if (rep.fallbacks > 0) std::cerr << ", " << rep.fallbacks << " beliefs fell back to rules-only likelihoods";
  std::cerr << '\n';
  return 0;
}

httplib::Server* g_server = nullptr;

int run_serve(const std::vector<std::string>& checkpoints, const std::string& host, int port,
              const std::string& store) {
  std::map<std::string, std::string> named;
  for (const auto& spec : checkpoints) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      named.emplace(named.empty() ? "default" : fs::path(spec).stem().string(), spec);
    } else {
      named.emplace(spec.substr(0, eq), spec.substr(eq + 1));
    }
  }
  if (named.empty()) fail(Errc::kParseError, "at least one --checkpoint is required");
  if (!named.count("default")) named.emplace("default", named.begin()->second);
  play::SessionManager sessions(named, store);
  httplib::Server server;
  play::mount(server, sessions);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "listening on http://" << host << ':' << port << '\n' << std::flush;
  if (!server.listen(host, port)) fail(Errc::kIo, "cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent space policy optimization for Werewolf and small benchmark games"};
  app.require_subcommand(1);

  SolveOpts so;
  auto* solve = app.add_subcommand("solve", "Run CFR and write a checkpoint");
  solve->add_option("--game", so.game, "rpssl, kuhn, werewolf4 or werewolf7")->capture_default_str();
  solve->add_option("--iterations", so.iterations)->capture_default_str();
  solve->add_option("--seed", so.seed)->capture_default_str();
  solve->add_option("--depth", so.depth, "Depth limit in plies, rollouts below (0 = none)");
  solve->add_option("--traversal", so.traversal, "full or external_sampling");
  solve->add_flag("--plus", so.plus, "Floor cumulative regrets at zero");
  solve->add_flag("--linear", so.linear, "Linear averaging");
  solve->add_option("--out", so.out)->required();
  solve->add_option("--corpus", so.corpus, "Utterance corpus (JSONL); synthetic when omitted");
  solve->add_option("--iteration", so.iteration, "Latent-space iteration for the catalogs")->capture_default_str();
  solve->add_option("--k", so.k, "Same cluster count for every role");

  std::string ckpt;
  std::int64_t cap = kDefaultNodeCap;
  auto* expl = app.add_subcommand("exploitability", "Exact best responses against a checkpoint's average policy");
  expl->add_option("--checkpoint", ckpt)->required();
  expl->add_option("--node-cap", cap)->capture_default_str();

  int demo_iters = 10000, every = 1000;
  bool expand = false;
  auto* demo = app.add_subcommand("rpssl-demo", "RPSSL average strategy and exploitability as CSV");
  demo->add_option("--iterations", demo_iters)->capture_default_str();
  demo->add_option("--every", every)->capture_default_str()->check(CLI::PositiveNumber);
  demo->add_flag("--expand", expand, "Restricted-game expansion from {rock, paper, scissors}");

  auto* corpus = app.add_subcommand("corpus", "Utterance corpora");
  corpus->require_subcommand(1);
  std::string corpus_out;
  int corpus_iters = 3, per_blob = 30, dim = 16;
  std::uint64_t corpus_seed = 0;
  auto* synth = corpus->add_subcommand("synth", "Write a synthetic clustered corpus");
  synth->add_option("--out", corpus_out)->required();
  synth->add_option("--iterations", corpus_iters)->capture_default_str();
  synth->add_option("--per-blob", per_blob)->capture_default_str();
  synth->add_option("--dim", dim)->capture_default_str();
  synth->add_option("--seed", corpus_seed)->capture_default_str();

  LoopOpts lo;
  auto* lp = app.add_subcommand("loop", "Iterate catalogs, solve, trajectories and preference export");
  lp->add_option("--iterations", lo.iterations)->capture_default_str();
  lp->add_option("--out", lo.out)->capture_default_str();
  lp->add_option("--corpus", lo.corpus, "Corpus with iteration tags; synthetic when omitted");
  lp->add_option("--game", lo.game)->capture_default_str();
  lp->add_option("--solver-iterations", lo.solver_iterations)->capture_default_str();
  lp->add_option("--candidates", lo.candidates)->capture_default_str();
  lp->add_option("--games", lo.games)->capture_default_str();
  lp->add_option("--eval-games", lo.eval_games)->capture_default_str();
  lp->add_option("--seed", lo.seed)->capture_default_str();
  lp->add_flag("--best-vs-rest", lo.best_vs_rest);
  lp->add_flag("--no-exploitability", lo.no_exploitability);
  lp->add_option("--workers", lo.workers)->capture_default_str();

  auto* ev = app.add_subcommand("eval", "Head-to-head play and role prediction");
  ev->require_subcommand(1);
  std::string wolf, village, h2h_out = "eval_out";
  int games = 100, workers = 1;
  std::uint64_t seed = 0;
  auto* h2h = ev->add_subcommand("head2head", "Wolf checkpoint against village checkpoint");
  h2h->add_option("--wolf", wolf)->required();
  h2h->add_option("--village", village)->required();
  h2h->add_option("--games", games)->capture_default_str();
  h2h->add_option("--seed", seed)->capture_default_str();
  h2h->add_option("--out", h2h_out)->capture_default_str();
  h2h->add_option("--workers", workers)->capture_default_str();
  std::string replays;
  std::size_t beam = belief::kDefaultBeam;
  auto* pred = ev->add_subcommand("predict", "Role prediction accuracy over saved replays");
  pred->add_option("--replays", replays, "Replay file or head2head output directory")->required();
  pred->add_option("--beam", beam)->capture_default_str();

  std::vector<std::string> serve_ckpts;
  std::string host = "127.0.0.1", store;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP play server");
  serve->add_option("--checkpoint", serve_ckpts, "PATH or NAME=PATH; repeatable")->required();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--store", store, "Directory for persisted sessions");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*solve) return run_solve(so);
    if (*expl) return run_exploitability(ckpt, cap);
    if (*demo) return run_rpssl_demo(demo_iters, every, expand);
    if (*synth) return run_corpus_synth(corpus_out, corpus_iters, per_blob, dim, corpus_seed);
    if (*lp) return run_loop(lo);
    if (*h2h) return run_head2head(wolf, village, games, seed, h2h_out, workers);
    if (*pred) return run_predict(replays, beam);
    if (*serve) return run_serve(serve_ckpts, host, port, store);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
