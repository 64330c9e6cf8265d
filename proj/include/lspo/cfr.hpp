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

// Tabular counterfactual regret minimization over any ExtensiveGame.
//
// Regrets follow the counterfactual-value form R(I,a) += v(I,a) - v(I);
// the current strategy is regret matching over the positive part of R and
// the convergent object is the reach-weighted average strategy.
//
// Two traversals are provided:
//   * kFull: vanilla CFR, chance and all players enumerated. Regret updates
//     made during one traversal are buffered and applied afterwards so every
//     history in an information set sees the same strategy.
//   * kExternalSampling: chance and non-traversers sampled, traverser actions
//     enumerated. The average strategy is accumulated at sampled opponent
//     nodes (the opponent's reach is accounted for by the sampling itself).
//
// With a depth limit D, traversal stops after D plies and the remainder of
// the game is played out once under the average policy (uniform where the
// table is empty), which is how the tree is cut for large games.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "lspo/efg.hpp"

namespace lspo {

inline std::vector<double> regret_matching(std::span<const double> regrets) {
  if (regrets.empty()) fail(Errc::kNoActions, "regret matching over zero actions");
  std::vector<double> sigma(regrets.size(), 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < regrets.size(); ++a) {
    sigma[a] = std::max(regrets[a], 0.0);
    total += sigma[a];
  }
  if (total > 0.0) {
    for (double& p : sigma) p /= total;
  } else {
    std::fill(sigma.begin(), sigma.end(), 1.0 / static_cast<double>(regrets.size()));
  }
  return sigma;
}

inline std::vector<double> uniform_probs(int n) {
  if (n <= 0) fail(Errc::kNoActions, "uniform over zero actions");
  return std::vector<double>(n, 1.0 / n);
}

// Anything that maps an information set to a distribution over its actions.
template <class P>
concept Policy = requires(const P& p, const InfosetKey& k, int n) {
  { p.probs(k, n) } -> std::same_as<std::vector<double>>;
};

struct UniformPolicy {
  std::vector<double> probs(const InfosetKey&, int n) const { return uniform_probs(n); }
};

// Explicit rows; infosets without a row fall back to uniform.
struct TabularPolicy {
  std::unordered_map<InfosetKey, std::vector<double>> rows;

  std::vector<double> probs(const InfosetKey& key, int n) const {
    auto it = rows.find(key);
    if (it == rows.end()) return uniform_probs(n);
    return it->second;
  }
};

// Per-infoset rows of cumulative values. Rows are created lazily on first
// touch so entries exist only for visited information sets.
class InfosetTable {
 public:
  using Map = std::unordered_map<InfosetKey, std::vector<double>>;

  std::vector<double>& row(const InfosetKey& key, int n) {
    auto [it, inserted] = rows_.try_emplace(key);
    if (inserted) it->second.assign(n, 0.0);
    return it->second;
  }

  const std::vector<double>* find(const InfosetKey& key) const {
    auto it = rows_.find(key);
    return it == rows_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return rows_.size(); }
  const Map& rows() const { return rows_; }
  Map& rows() { return rows_; }

  friend bool operator==(const InfosetTable&, const InfosetTable&) = default;

 private:
  Map rows_;
};

class RegretTable : public InfosetTable {
 public:
  // Current regret-matching strategy; uniform for unseen infosets.
  std::vector<double> probs(const InfosetKey& key, int n) const {
    const auto* r = find(key);
    if (r == nullptr) return uniform_probs(n);
    return regret_matching(*r);
  }
};

class AveragePolicy : public InfosetTable {
 public:
  // Normalized cumulative strategy weight; uniform where nothing accumulated.
  std::vector<double> probs(const InfosetKey& key, int n) const {
    const auto* w = find(key);
    if (w == nullptr) return uniform_probs(n);
    double total = 0.0;
    for (double x : *w) total += x;
    if (!(total > 0.0)) return uniform_probs(n);
    std::vector<double> p(w->size());
    for (std::size_t a = 0; a < p.size(); ++a) p[a] = (*w)[a] / total;
    return p;
  }
};

enum class Traversal { kFull, kExternalSampling };

inline std::string traversal_name(Traversal t) {
  return t == Traversal::kFull ? "full" : "external_sampling";
}

inline Traversal parse_traversal(const std::string& s) {
  if (s == "full") return Traversal::kFull;
  if (s == "external_sampling" || s == "es") return Traversal::kExternalSampling;
  fail(Errc::kParseError, "unknown traversal '" + s + "'");
}

struct SolverConfig {
  int iterations = 1000;
  std::uint64_t seed = 0;
  std::optional<int> depth_limit;
  Traversal traversal = Traversal::kExternalSampling;
  bool plus_variant = false;      // floor cumulative regrets at zero
  bool linear_averaging = false;  // weight iteration t's strategy by t

  void validate() const {
    if (iterations < 1) fail(Errc::kParseError, "iterations must be >= 1");
    if (depth_limit && *depth_limit < 1) fail(Errc::kParseError, "depth limit must be >= 1");
  }
};

struct SolverTables {
  RegretTable regrets;
  AveragePolicy average;
};

// Plays `state` out to a terminal under `policy`, sampling chance.
template <ExtensiveGame G, Policy P>
std::vector<double> rollout(const G& game, typename G::State state, const P& policy,
                            std::mt19937_64& rng) {
  while (true) {
    const NodeKind kind = game.node_kind(state);
    if (kind.is_terminal()) return game.utilities(state);
    if (kind.is_chance()) {
      state = game.apply(state, sample_chance(game.chance_outcomes(state), rng));
      continue;
    }
    const int n = game.num_actions(state);
    const auto p = policy.probs(game.infoset_key(state), n);
    state = game.apply(state, sample_index(p, rng));
  }
}

template <ExtensiveGame G>
class CfrSolver {
 public:
  using State = typename G::State;

  CfrSolver(G game, SolverConfig config)
      : game_(std::move(game)), config_(config), rng_(config.seed) {
    config_.validate();
  }

  const G& game() const { return game_; }
  const SolverConfig& config() const { return config_; }
  const SolverTables& tables() const { return tables_; }
  SolverTables& tables() { return tables_; }
  int iterations_done() const { return iteration_; }

  // One traversal for `traverser`, regrets and average strategy updated.
  void cfr_iteration(PlayerId traverser) {
    pending_.clear();
    const double weight = config_.linear_averaging ? static_cast<double>(iteration_ + 1) : 1.0;
    if (config_.traversal == Traversal::kFull) {
      traverse_full(game_.initial_state(), traverser, 1.0, 1.0, 0, weight);
    } else {
      traverse_sampled(game_.initial_state(), traverser, 0, weight);
    }
    flush_pending();
  }

  // Alternates the traverser over all players for each iteration.
  void run(int iterations,
           const std::function<void(int, const SolverTables&)>& on_iteration = {}) {
    for (int t = 0; t < iterations; ++t) {
      for (PlayerId p = 0; p < game_.num_players(); ++p) cfr_iteration(p);
      ++iteration_;
      if (on_iteration) on_iteration(iteration_, tables_);
    }
  }

  void solve(const std::function<void(int, const SolverTables&)>& on_iteration = {}) {
    run(config_.iterations - iteration_, on_iteration);
  }

  void restore(SolverTables tables, int iterations_done) {
    tables_ = std::move(tables);
    iteration_ = iterations_done;
  }

 private:
  double traverse_full(const State& s, PlayerId traverser, double reach_self,
                       double reach_others, int depth, double weight) {
    const NodeKind kind = game_.node_kind(s);
    if (kind.is_terminal()) return game_.utilities(s)[traverser];
    if (config_.depth_limit && depth >= *config_.depth_limit) {
      return rollout(game_, s, tables_.average, rng_)[traverser];
    }
    if (kind.is_chance()) {
      double v = 0.0;
      for (const auto& o : game_.chance_outcomes(s)) {
        v += o.probability * traverse_full(game_.apply(s, o.action), traverser, reach_self,
                                           reach_others * o.probability, depth + 1, weight);
      }
      return v;
    }
    const int n = game_.num_actions(s);
    const InfosetKey key = game_.infoset_key(s);
    const std::vector<double> sigma = tables_.regrets.probs(key, n);
    if (kind.player != traverser) {
      double v = 0.0;
      for (ActionId a = 0; a < n; ++a) {
        if (sigma[a] <= 0.0) continue;
        v += sigma[a] * traverse_full(game_.apply(s, a), traverser, reach_self,
                                      reach_others * sigma[a], depth + 1, weight);
      }
      return v;
    }
    std::vector<double> child(n, 0.0);
    double v = 0.0;
    for (ActionId a = 0; a < n; ++a) {
      child[a] = traverse_full(game_.apply(s, a), traverser, reach_self * sigma[a],
                               reach_others, depth + 1, weight);
      v += sigma[a] * child[a];
    }
    auto& delta = pending_row(key, n);
    for (ActionId a = 0; a < n; ++a) delta[a] += reach_others * (child[a] - v);
    auto& avg = tables_.average.row(key, n);
    for (ActionId a = 0; a < n; ++a) avg[a] += weight * reach_self * sigma[a];
    return v;
  }

  double traverse_sampled(const State& s, PlayerId traverser, int depth, double weight) {
    const NodeKind kind = game_.node_kind(s);
    if (kind.is_terminal()) return game_.utilities(s)[traverser];
    if (config_.depth_limit && depth >= *config_.depth_limit) {
      return rollout(game_, s, tables_.average, rng_)[traverser];
    }
    if (kind.is_chance()) {
      const ActionId a = sample_chance(game_.chance_outcomes(s), rng_);
      return traverse_sampled(game_.apply(s, a), traverser, depth + 1, weight);
    }
    const int n = game_.num_actions(s);
    const InfosetKey key = game_.infoset_key(s);
    const std::vector<double> sigma = tables_.regrets.probs(key, n);
    if (kind.player != traverser) {
      auto& avg = tables_.average.row(key, n);
      for (ActionId a = 0; a < n; ++a) avg[a] += weight * sigma[a];
      const ActionId a = sample_index(sigma, rng_);
      return traverse_sampled(game_.apply(s, a), traverser, depth + 1, weight);
    }
    std::vector<double> child(n, 0.0);
    double v = 0.0;
    for (ActionId a = 0; a < n; ++a) {
      child[a] = traverse_sampled(game_.apply(s, a), traverser, depth + 1, weight);
      v += sigma[a] * child[a];
    }
    auto& delta = pending_row(key, n);
    for (ActionId a = 0; a < n; ++a) delta[a] += child[a] - v;
    return v;
  }

  std::vector<double>& pending_row(const InfosetKey& key, int n) {
    auto [it, inserted] = pending_.try_emplace(key);
    if (inserted) {
      it->second.assign(n, 0.0);
      pending_order_.push_back(key);
    }
    return it->second;
  }

  void flush_pending() {
    for (const auto& key : pending_order_) {
      const auto& delta = pending_.at(key);
      auto& r = tables_.regrets.row(key, static_cast<int>(delta.size()));
      for (std::size_t a = 0; a < delta.size(); ++a) {
        r[a] += delta[a];
        if (config_.plus_variant && r[a] < 0.0) r[a] = 0.0;
      }
    }
    pending_.clear();
    pending_order_.clear();
  }

  G game_;
  SolverConfig config_;
  std::mt19937_64 rng_;
  SolverTables tables_;
  int iteration_ = 0;
  std::unordered_map<InfosetKey, std::vector<double>> pending_;
  std::vector<InfosetKey> pending_order_;
};

// Expected value per player at `state`: exact expectation over chance and the
// current regret-matching strategy for the first `depth` plies, then the mean
// of `rollouts` sampled playouts under `rollout_policy` at each frontier node.
template <ExtensiveGame G, Policy P>
std::vector<double> depth_limited_value(const G& game, const typename G::State& state,
                                        const RegretTable& regrets, int depth,
                                        const P& rollout_policy, std::mt19937_64& rng,
                                        int rollouts = 1) {
  const NodeKind kind = game.node_kind(state);
  if (kind.is_terminal()) return game.utilities(state);
  const int np = game.num_players();
  std::vector<double> v(np, 0.0);
  if (depth <= 0) {
    for (int r = 0; r < rollouts; ++r) {
      const auto u = rollout(game, state, rollout_policy, rng);
      for (int p = 0; p < np; ++p) v[p] += u[p];
    }
    for (double& x : v) x /= rollouts;
    return v;
  }
  auto accumulate = [&](const typename G::State& child, double w) {
    const auto cv = depth_limited_value(game, child, regrets, depth - 1, rollout_policy, rng, rollouts);
    for (int p = 0; p < np; ++p) v[p] += w * cv[p];
  };
  if (kind.is_chance()) {
    for (const auto& o : game.chance_outcomes(state)) accumulate(game.apply(state, o.action), o.probability);
    return v;
  }
  const int n = game.num_actions(state);
  const auto sigma = regrets.probs(game.infoset_key(state), n);
  for (ActionId a = 0; a < n; ++a) {
    if (sigma[a] > 0.0) accumulate(game.apply(state, a), sigma[a]);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Checkpoints: raw cumulative tables plus config so a run can resume exactly.

inline constexpr int kCheckpointVersion = 1;

inline std::string to_hex(const std::string& bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 0xf]);
  }
  return out;
}

inline std::string from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) fail(Errc::kParseError, "odd-length hex key");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    fail(Errc::kParseError, "bad hex digit");
  };
  std::string out(hex.size() / 2, '\0');
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<char>(nibble(hex[2 * i]) * 16 + nibble(hex[2 * i + 1]));
  }
  return out;
}

inline nlohmann::json table_to_json(const InfosetTable& table) {
  // Sorted so the file content is independent of hash-map iteration order.
  std::map<std::string, const std::vector<double>*> sorted;
  for (const auto& [k, row] : table.rows()) sorted.emplace(to_hex(k), &row);
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [hex, row] : sorted) j[hex] = *row;
  return j;
}

inline void table_from_json(const nlohmann::json& j, InfosetTable& table) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    table.rows()[from_hex(it.key())] = it.value().get<std::vector<double>>();
  }
}

struct Checkpoint {
  std::string game;  // "rpssl", "kuhn", "werewolf4", "werewolf7", ...
  nlohmann::json game_params = nlohmann::json::object();
  SolverConfig config;
  int iterations_done = 0;
  SolverTables tables;
  nlohmann::json extra = nlohmann::json::object();  // catalogs, provenance
};

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["game"] = c.game;
  j["game_params"] = c.game_params;
  j["config"] = {
      {"iterations", c.config.iterations},
      {"seed", c.config.seed},
      {"depth_limit", c.config.depth_limit ? nlohmann::json(*c.config.depth_limit) : nlohmann::json()},
      {"traversal", traversal_name(c.config.traversal)},
      {"plus_variant", c.config.plus_variant},
      {"linear_averaging", c.config.linear_averaging},
  };
  j["iterations_done"] = c.iterations_done;
  j["regrets"] = table_to_json(c.tables.regrets);
  j["average"] = table_to_json(c.tables.average);
  j["extra"] = c.extra;
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (!j.contains("version") || j["version"] != kCheckpointVersion) {
    fail(Errc::kSchemaMismatch, "unsupported checkpoint version");
  }
  Checkpoint c;
  try {
    c.game = j.at("game").get<std::string>();
    c.game_params = j.value("game_params", nlohmann::json::object());
    const auto& cfg = j.at("config");
    c.config.iterations = cfg.at("iterations").get<int>();
    c.config.seed = cfg.at("seed").get<std::uint64_t>();
    if (!cfg.at("depth_limit").is_null()) c.config.depth_limit = cfg.at("depth_limit").get<int>();
    c.config.traversal = parse_traversal(cfg.at("traversal").get<std::string>());
    c.config.plus_variant = cfg.at("plus_variant").get<bool>();
    c.config.linear_averaging = cfg.value("linear_averaging", false);
    c.iterations_done = j.at("iterations_done").get<int>();
    table_from_json(j.at("regrets"), c.tables.regrets);
    table_from_json(j.at("average"), c.tables.average);
    c.extra = j.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kSchemaMismatch, std::string("malformed checkpoint: ") + e.what());
  }
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::kIo, "cannot write " + path);
  out << checkpoint_to_json(c).dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIo, "cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kSchemaMismatch, path + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace lspo
