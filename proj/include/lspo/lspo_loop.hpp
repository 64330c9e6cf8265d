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

// One round of the training loop: cluster the corpus into catalogs, solve the
// abstracted game, collect discussion candidates by self-play, and export
// regret-ranked preference pairs. Iterations chain with catalogs growing per
// the cluster schedule.
//
// New utterances for each iteration come from a StrategyProvider. The shipped
// providers read a corpus file or generate a synthetic one; regenerating text
// with a fine-tuned language model happens outside this library.
//
// On-disk layout of an iteration:
//
//   iter_<n>/catalogs.json
//   iter_<n>/checkpoint.json
//   iter_<n>/dataset.jsonl       one preference pair per line
//   iter_<n>/dataset_meta.json
//   iter_<n>/metrics.json

#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lspo/best_response.hpp"
#include "lspo/cfr.hpp"
#include "lspo/eval.hpp"
#include "lspo/latent.hpp"
#include "lspo/rpssl.hpp"
#include "lspo/werewolf/agent.hpp"
#include "lspo/werewolf/observation.hpp"

namespace lspo::loop {

using werewolf::Agent;
using werewolf::Game;
using werewolf::GameState;
using werewolf::Phase;
using werewolf::Role;

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    fail(Errc::kIo, "sha256 failed");
  }
  return to_hex(std::string(reinterpret_cast<const char*>(md), len));
}

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIo, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

// Draws `m` distinct indices, each draw proportional to the remaining
// weights (uniform over the remainder once they are all zero).
inline std::vector<int> sample_distinct(std::span<const double> weights, int m, std::mt19937_64& rng) {
  std::vector<int> pool(weights.size());
  for (int i = 0; i < static_cast<int>(pool.size()); ++i) pool[i] = i;
  std::vector<int> out;
  while (static_cast<int>(out.size()) < m && !pool.empty()) {
    std::vector<double> w;
    double total = 0.0;
    for (int i : pool) {
      w.push_back(std::max(0.0, weights[i]));
      total += w.back();
    }
    if (total > 0.0) {
      for (double& x : w) x /= total;
    } else {
      w.assign(pool.size(), 1.0 / pool.size());
    }
    const int pick = sample_index(w, rng);
    out.push_back(pool[pick]);
    pool.erase(pool.begin() + pick);
  }
  return out;
}

struct Candidate {
  int latent = 0;
  int utterance = -1;
  std::string text;
};

struct TurnRecord {
  int game = 0;
  PlayerId speaker = 0;
  Role role = Role::kVillager;
  InfosetKey infoset;
  std::string prompt;
  std::vector<Candidate> candidates;
  int executed = 0;  // index into candidates
};

struct TrajectorySet {
  int iteration = 1;
  std::vector<TurnRecord> turns;
  std::vector<std::string> warnings;
};

inline constexpr int kDefaultCandidates = 3;
inline constexpr int kDefaultGames = 1000;

// Self-play games where every discussion turn offers `candidates_per_turn`
// distinct latent actions drawn from the policy and executes one of them
// uniformly at random. A catalog smaller than N clips N to its size.
inline TrajectorySet collect_trajectories(const Agent& agent, int candidates_per_turn, int games, std::uint64_t seed,
                                          int workers = 1) {
  if (candidates_per_turn < 2) fail(Errc::kParseError, "need at least 2 candidates per turn");
  if (games < 1) fail(Errc::kParseError, "games must be >= 1");
  TrajectorySet out{.iteration = agent.iteration};
  for (Role r : werewolf::roles_in(agent.config)) {
    const int k = agent.config.latent_count(r);
    if (k < candidates_per_turn) {
      out.warnings.push_back("CatalogSmallerThanN: " + std::string(werewolf::role_name(r)) + " catalog has " +
                             std::to_string(k) + " latent actions, using N=" + std::to_string(k) + " instead of " +
                             std::to_string(candidates_per_turn));
    }
  }
  const Game game(agent.config);
  const werewolf::CatalogUtteranceSource texts(agent.catalogs);
  std::vector<std::vector<TurnRecord>> per_game(games);
  eval::parallel_for(games, workers, [&](int gi) {
    std::mt19937_64 rng(eval::game_seed(seed, gi));
    GameState s = game.initial_state();
    while (!game.node_kind(s).is_terminal()) {
      if (game.node_kind(s).is_chance()) {
        s = game.apply(s, sample_chance(game.chance_outcomes(s), rng));
        continue;
      }
      const InfosetKey key = game.infoset_key(s);
      const int n = game.num_actions(s);
      const auto sigma = agent.policy.probs(key, n);
      if (s.phase != Phase::kDayDiscussion) {
        s = game.apply(s, sample_index(sigma, rng));
        continue;
      }
      const Role role = s.roles[s.actor];
      const auto& cat = agent.catalogs.at(role);
      TurnRecord t{.game = gi, .speaker = s.actor, .role = role, .infoset = key,
                   .prompt = werewolf::render_text_observation(game, s, s.actor, texts)};
      for (int latent : sample_distinct(sigma, std::min(candidates_per_turn, n), rng)) {
        Candidate c{.latent = latent, .utterance = werewolf::pick_utterance(cat, latent, rng)};
        c.text = c.utterance >= 0 ? cat.exemplar_texts[latent][c.utterance]
                                  : "[latent strategy " + std::to_string(latent) + "]";
        t.candidates.push_back(std::move(c));
      }
      t.executed = std::uniform_int_distribution<int>(0, static_cast<int>(t.candidates.size()) - 1)(rng);
      const Candidate& chosen = t.candidates[t.executed];
      s = game.with_utterance(game.apply(s, chosen.latent), chosen.utterance);
      per_game[gi].push_back(std::move(t));
    }
  });
  for (auto& g : per_game) {
    for (auto& t : g) out.turns.push_back(std::move(t));
  }
  return out;
}

// Regret exported for a latent action: the negated cumulative counterfactual
// regret, so smaller is better. Empty when the infoset was never updated.
inline std::optional<double> export_regret(const RegretTable& regrets, const InfosetKey& key, int latent) {
  const auto* row = regrets.find(key);
  if (row == nullptr || latent < 0 || latent >= static_cast<int>(row->size())) return std::nullopt;
  return -(*row)[latent];
}

// (chosen, rejected) index pairs with strictly lower regret chosen, ordered
// by the chosen candidate's rank. best_vs_rest keeps only pairs whose chosen
// side attains the minimum.
inline std::vector<std::pair<int, int>> preference_pairs(std::span<const double> regrets, bool best_vs_rest = false) {
  std::vector<int> order(regrets.size());
  for (int i = 0; i < static_cast<int>(order.size()); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return regrets[a] < regrets[b]; });
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (best_vs_rest && regrets[order[i]] > regrets[order[0]]) break;
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (regrets[order[i]] < regrets[order[j]]) out.emplace_back(order[i], order[j]);
    }
  }
  return out;
}

struct PreferenceRow {
  std::string prompt;
  Role role = Role::kVillager;
  Candidate chosen, rejected;
  double chosen_regret = 0.0, rejected_regret = 0.0;
  std::string infoset_digest;
  int iteration = 1;
};

inline constexpr double kDpoBeta = 0.1;

struct DpoOptions {
  bool best_vs_rest = false;
  double beta = kDpoBeta;  // recorded for the downstream trainer
};

struct DpoDataset {
  int iteration = 1;
  DpoOptions options;
  std::vector<PreferenceRow> rows;
  int turns = 0;
  int skipped_turns = 0;  // no regrets at the recorded infoset
};

inline DpoDataset build_dpo(const TrajectorySet& traj, const RegretTable& regrets, const DpoOptions& opts = {}) {
  DpoDataset ds{.iteration = traj.iteration, .options = opts, .turns = static_cast<int>(traj.turns.size())};
  for (const auto& t : traj.turns) {
    std::vector<double> r;
    for (const auto& c : t.candidates) {
      const auto v = export_regret(regrets, t.infoset, c.latent);
      if (!v) break;
      r.push_back(*v);
    }
    if (r.size() != t.candidates.size()) {
      ++ds.skipped_turns;
      continue;
    }
    const std::string digest = sha256_hex(t.infoset).substr(0, 16);
    for (const auto& [a, b] : preference_pairs(r, opts.best_vs_rest)) {
      ds.rows.push_back({.prompt = t.prompt, .role = t.role, .chosen = t.candidates[a], .rejected = t.candidates[b],
                         .chosen_regret = r[a], .rejected_regret = r[b], .infoset_digest = digest,
                         .iteration = traj.iteration});
    }
  }
  if (ds.rows.empty()) {
    fail(Errc::kEmptyDataset, "no preference pairs survived (" + std::to_string(ds.skipped_turns) + " of " +
                                  std::to_string(ds.turns) + " turns lacked regrets)");
  }
  return ds;
}

inline nlohmann::json row_to_json(const PreferenceRow& r) {
  return {{"prompt", r.prompt},
          {"role", std::string(werewolf::role_name(r.role))},
          {"chosen_text", r.chosen.text},
          {"rejected_text", r.rejected.text},
          {"chosen_latent", r.chosen.latent},
          {"rejected_latent", r.rejected.latent},
          {"chosen_regret", r.chosen_regret},
          {"rejected_regret", r.rejected_regret},
          {"infoset_digest", r.infoset_digest},
          {"iteration", r.iteration}};
}

inline nlohmann::json dataset_meta(const DpoDataset& ds, const std::string& digest) {
  return {{"iteration", ds.iteration},
          {"rows", ds.rows.size()},
          {"turns", ds.turns},
          {"skipped_turns", ds.skipped_turns},
          {"pairing", ds.options.best_vs_rest ? "best_vs_rest" : "all_pairs"},
          {"preference", "lower regret preferred"},
          {"dpo_beta", ds.options.beta},
          {"sha256", digest}};
}

// Writes the rows as JSONL plus a sidecar metadata file; returns the digest
// of the rows file.
inline std::string export_dpo(const DpoDataset& ds, const std::string& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::kIo, "cannot write " + path);
    for (const auto& r : ds.rows) out << row_to_json(r).dump() << '\n';
  }
  const std::string digest = file_digest(path);
  const std::string meta_path = std::filesystem::path(path).replace_extension().string() + "_meta.json";
  std::ofstream meta(meta_path);
  if (!meta) fail(Errc::kIo, "cannot write " + meta_path);
  meta << dataset_meta(ds, digest).dump(2) << '\n';
  return digest;
}

// Source of utterance records for an iteration.
class StrategyProvider {
 public:
  virtual ~StrategyProvider() = default;
  virtual std::vector<latent::UtteranceRecord> corpus(int iteration) const = 0;
};

// One JSONL file holding every iteration's records.
class FileProvider : public StrategyProvider {
 public:
  explicit FileProvider(std::string path) : path_(std::move(path)) {}
  std::vector<latent::UtteranceRecord> corpus(int) const override { return latent::ingest_corpus(path_); }

 private:
  std::string path_;
};

class SynthProvider : public StrategyProvider {
 public:
  explicit SynthProvider(latent::SynthSpec spec) : spec_(std::move(spec)) {}
  std::vector<latent::UtteranceRecord> corpus(int iteration) const override {
    auto spec = spec_;
    spec.iterations = std::max(spec.iterations, iteration);
    return latent::synth_corpus(spec);
  }

 private:
  latent::SynthSpec spec_;
};

struct LoopConfig {
  werewolf::GameConfig base = werewolf::GameConfig::four_player();
  latent::ClusterSchedule schedule;
  SolverConfig solver{.iterations = 2000};
  int candidates = kDefaultCandidates;
  int games = kDefaultGames;
  std::uint64_t seed = 0;
  DpoOptions dpo;
  bool exploitability = true;  // exact values and best responses; small configs only
  int eval_games = 200;        // head-to-head against the previous iteration
  int workers = 1;
};

struct IterationArtifacts {
  int iteration = 1;
  std::string dir, checkpoint_path, dataset_path;
  std::string dataset_digest;
  nlohmann::json metrics;
  std::shared_ptr<const Agent> agent;
};

inline std::string iteration_dir(const std::string& root, int iteration) {
  return (std::filesystem::path(root) / ("iter_" + std::to_string(iteration))).string();
}

// Catalogs, solve and checkpoint for one iteration, without the dataset.
inline std::pair<std::shared_ptr<Agent>, SolverTables> train_agent(const LoopConfig& cfg,
                                                                   const StrategyProvider& provider, int iteration) {
  const auto records = provider.corpus(iteration);
  auto agent = std::make_shared<Agent>();
  agent->iteration = iteration;
  agent->catalogs = latent::build_catalogs(records, cfg.schedule, iteration, cfg.seed + iteration,
                                           werewolf::roles_in(cfg.base));
  agent->config = werewolf::config_for(cfg.base, agent->catalogs);
  SolverConfig sc = cfg.solver;
  sc.seed = cfg.solver.seed + 1000003ULL * iteration;
  CfrSolver solver(Game(agent->config), sc);
  solver.solve();
  agent->policy = solver.tables().average;
  return {agent, solver.tables()};
}

inline IterationArtifacts run_iteration(const LoopConfig& cfg, const StrategyProvider& provider, int iteration,
                                        const std::string& root, const IterationArtifacts* prior = nullptr) {
  namespace fs = std::filesystem;
  if (prior && prior->iteration + 1 != iteration) fail(Errc::kParseError, "iterations must chain consecutively");
  IterationArtifacts art{.iteration = iteration, .dir = iteration_dir(root, iteration)};
  fs::create_directories(art.dir);

  auto [agent, tables] = train_agent(cfg, provider, iteration);
  agent->id = (fs::path(art.dir) / "checkpoint.json").string();
  art.checkpoint_path = agent->id;
  {
    std::ofstream out(fs::path(art.dir) / "catalogs.json");
    if (!out) fail(Errc::kIo, "cannot write catalogs under " + art.dir);
    out << latent::catalogs_to_json(agent->catalogs).dump() << '\n';
  }
  SolverConfig sc = cfg.solver;
  sc.seed = cfg.solver.seed + 1000003ULL * iteration;
  save_checkpoint(werewolf::agent_checkpoint(*agent, sc, sc.iterations, tables), art.checkpoint_path);

  const auto traj = collect_trajectories(*agent, cfg.candidates, cfg.games, cfg.seed ^ (0x5151ULL * iteration),
                                         cfg.workers);
  for (const auto& w : traj.warnings) std::cerr << "warning: " << w << '\n';
  const auto ds = build_dpo(traj, tables.regrets, cfg.dpo);
  art.dataset_path = (fs::path(art.dir) / "dataset.jsonl").string();
  art.dataset_digest = export_dpo(ds, art.dataset_path);

  nlohmann::json m;
  m["iteration"] = iteration;
  m["latent_counts"] = agent->config.latent_counts;
  m["infosets"] = tables.regrets.size();
  m["dataset"] = {{"rows", ds.rows.size()}, {"skipped_turns", ds.skipped_turns}, {"sha256", art.dataset_digest}};
  m["warnings"] = traj.warnings;
  if (cfg.exploitability) {
    const Game game(agent->config);
    m["self_play_values"] = expected_values(game, agent->policy);
    const auto e = exploitability_profile(game, agent->policy);
    m["exploitability"] = {{"gains", e.gains}, {"aggregate", e.aggregate}};
  }
  if (prior && cfg.eval_games > 0) {
    const auto c = eval::compare(agent, prior->agent, cfg.eval_games, cfg.seed + iteration);
    m["vs_previous"] = {{"games", c.games},       {"wins", c.a_wins},          {"losses", c.b_wins},
                        {"draws", c.draws},       {"win_ci", {c.a_ci.lo, c.a_ci.hi}},
                        {"loss_ci", {c.b_ci.lo, c.b_ci.hi}}};
  }
  art.metrics = m;
  std::ofstream out(fs::path(art.dir) / "metrics.json");
  if (!out) fail(Errc::kIo, "cannot write metrics under " + art.dir);
  out << m.dump(2) << '\n';
  art.agent = agent;
  return art;
}

inline std::vector<IterationArtifacts> run_loop(const LoopConfig& cfg, const StrategyProvider& provider,
                                                int iterations, const std::string& root) {
  std::vector<IterationArtifacts> out;
  for (int it = 1; it <= iterations; ++it) {
    out.push_back(run_iteration(cfg, provider, it, root, out.empty() ? nullptr : &out.back()));
  }
  return out;
}

// Restricted RPSSL: each iteration solves the game on the current throw set,
// then adds the throw outside the set that best answers the solution in the
// full game (lowest index on ties).

struct RpsslIteration {
  std::vector<rpssl::Throw> subset;
  rpssl::MixedStrategy strategy{};  // over all five throws
  double exploitability = 0.0;      // against the full game
  double restricted_gap = 0.0;      // against the current throw set
  std::optional<rpssl::Throw> added;
};

struct RpsslExpansionConfig {
  std::vector<rpssl::Throw> initial = {rpssl::Throw::kRock, rpssl::Throw::kPaper, rpssl::Throw::kScissors};
  int iterations = 3;
  SolverConfig solver{.iterations = 10000, .traversal = Traversal::kFull, .plus_variant = true,
                      .linear_averaging = true};
};

inline std::vector<RpsslIteration> rpssl_expansion(const RpsslExpansionConfig& cfg) {
  std::vector<RpsslIteration> out;
  std::vector<rpssl::Throw> subset = cfg.initial;
  for (int it = 0; it < cfg.iterations; ++it) {
    const auto game = rpssl::Game::restrict(subset);
    CfrSolver solver(game, cfg.solver);
    solver.solve();
    RpsslIteration r{.subset = game.subset()};
    const auto p = solver.tables().average.probs("p0", static_cast<int>(game.subset().size()));
    for (std::size_t i = 0; i < p.size(); ++i) r.strategy[static_cast<int>(game.subset()[i])] = p[i];
    r.exploitability = rpssl::exploitability(r.strategy);
    r.restricted_gap = rpssl::exploitability(r.strategy, game.subset());
    double best = -1e300;
    for (rpssl::Throw t : rpssl::kAllThrows) {
      double v = 0.0;
      for (int a = 0; a < rpssl::kNumThrows; ++a) v += r.strategy[a] * rpssl::payoff(t, rpssl::kAllThrows[a]);
      const bool allowed = std::find(subset.begin(), subset.end(), t) != subset.end();
      if (!allowed && v > best + 1e-12) {
        best = v;
        r.added = t;
      }
    }
    if (r.added) subset.push_back(*r.added);
    out.push_back(r);
  }
  return out;
}

}  // namespace lspo::loop
