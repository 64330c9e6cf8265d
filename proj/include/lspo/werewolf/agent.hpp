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

// A trained Werewolf agent (catalogs plus average policy) and the plumbing to
// seat two different agents on opposite sides of one game.

#pragma once

#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lspo/cfr.hpp"
#include "lspo/latent.hpp"
#include "lspo/werewolf/game.hpp"
#include "lspo/werewolf/observation.hpp"

namespace lspo::werewolf {

inline nlohmann::json config_to_json(const GameConfig& c) {
  return {{"num_players", c.num_players},
          {"role_counts", c.role_counts},
          {"max_rounds", c.max_rounds},
          {"latent_counts", c.latent_counts}};
}

inline GameConfig config_from_json(const nlohmann::json& j) {
  GameConfig c;
  try {
    c.num_players = j.at("num_players").get<int>();
    c.role_counts = j.at("role_counts").get<std::array<int, kNumRoles>>();
    c.max_rounds = j.at("max_rounds").get<int>();
    c.latent_counts = j.at("latent_counts").get<std::array<int, kNumRoles>>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kSchemaMismatch, std::string("game config: ") + e.what());
  }
  c.validate();
  return c;
}

// Same table, same rules; catalogs may differ.
inline bool same_rules(const GameConfig& a, const GameConfig& b) {
  return a.num_players == b.num_players && a.role_counts == b.role_counts && a.max_rounds == b.max_rounds;
}

inline std::vector<Role> roles_in(const GameConfig& c) {
  std::vector<Role> out;
  for (Role r : kAllRoles) {
    if (c.role_counts[role_index(r)] > 0) out.push_back(r);
  }
  return out;
}

struct Agent {
  std::string id;
  int iteration = 1;
  GameConfig config;
  latent::CatalogSet catalogs;
  AveragePolicy policy;
};

// Config whose latent counts are the catalog sizes.
inline GameConfig config_for(GameConfig base, const latent::CatalogSet& catalogs) {
  for (const auto& [role, cat] : catalogs) base.latent_counts[role_index(role)] = cat.k;
  return base;
}

inline Checkpoint agent_checkpoint(const Agent& a, const SolverConfig& solver, int iterations_done,
                                   const SolverTables& tables) {
  Checkpoint c;
  c.game = a.config.name();
  c.game_params = config_to_json(a.config);
  c.config = solver;
  c.iterations_done = iterations_done;
  c.tables = tables;
  c.extra = {{"agent_id", a.id}, {"iteration", a.iteration}, {"catalogs", latent::catalogs_to_json(a.catalogs)}};
  return c;
}

inline Agent agent_from_checkpoint(const Checkpoint& c) {
  Agent a;
  a.config = config_from_json(c.game_params);
  if (c.game != a.config.name()) fail(Errc::kIncompatibleCheckpoints, "checkpoint is for " + c.game);
  if (!c.extra.contains("catalogs")) fail(Errc::kIncompatibleCheckpoints, "checkpoint carries no catalogs");
  a.catalogs = latent::catalogs_from_json(c.extra.at("catalogs"));
  a.id = c.extra.value("agent_id", std::string("checkpoint"));
  a.iteration = c.extra.value("iteration", 1);
  a.policy = c.tables.average;
  for (Role r : roles_in(a.config)) {
    auto it = a.catalogs.find(r);
    if (it == a.catalogs.end() || it->second.k != a.config.latent_count(r)) {
      fail(Errc::kIncompatibleCheckpoints, std::string("catalog for ") + std::string(role_name(r)) +
                                               " does not match the policy's action count");
    }
  }
  return a;
}

inline Agent load_agent(const std::string& path) { return agent_from_checkpoint(load_checkpoint(path)); }

// Embedding that a discussion entry put on the table: the shown exemplar, or
// the cluster centroid when none was chosen.
inline const latent::Vec& spoken_embedding(const latent::LatentCatalog& cat, const DiscussionEntry& e) {
  if (e.utterance >= 0 && e.utterance < static_cast<int>(cat.exemplar_embeddings.at(e.latent).size())) {
    return cat.exemplar_embeddings[e.latent][e.utterance];
  }
  return cat.centroids.at(e.latent);
}

// Listener on one side of a cross-agent game. Same-side speech is read by
// index; the other side's speech is re-clustered into the listener's own
// catalog for the speaker's role.
class CrossLens : public DiscussionLens {
 public:
  CrossLens(Side listener, std::shared_ptr<const Agent> wolf, std::shared_ptr<const Agent> village)
      : listener_(listener), wolf_(std::move(wolf)), village_(std::move(village)) {}

  int interpret(Role speaker_role, const DiscussionEntry& e) const override {
    const Side speaker = side_of(speaker_role);
    if (speaker == listener_) return e.latent;
    const Agent& own = listener_ == Side::kWerewolves ? *wolf_ : *village_;
    const Agent& other = speaker == Side::kWerewolves ? *wolf_ : *village_;
    return latent::assign(spoken_embedding(other.catalogs.at(speaker_role), e), own.catalogs.at(speaker_role));
  }

 private:
  Side listener_;
  std::shared_ptr<const Agent> wolf_, village_;
};

// The table for `wolf` against `village`. Wolves speak from the wolf agent's
// catalog, everyone else from the village agent's.
struct Matchup {
  std::shared_ptr<const Agent> wolf, village;
  Game game;

  Matchup(std::shared_ptr<const Agent> w, std::shared_ptr<const Agent> v)
      : wolf(std::move(w)), village(std::move(v)), game(table_config(*wolf, *village)) {
    if (wolf != village) {
      game.set_lens(Side::kWerewolves, std::make_shared<CrossLens>(Side::kWerewolves, wolf, village));
      game.set_lens(Side::kVillage, std::make_shared<CrossLens>(Side::kVillage, wolf, village));
    }
  }

  const Agent& agent_for(Role r) const { return is_wolf(r) ? *wolf : *village; }

  const latent::LatentCatalog& speaker_catalog(Role r) const { return agent_for(r).catalogs.at(r); }

  // Keys open with the mover's seat and role, which picks the agent.
  std::vector<double> probs(const InfosetKey& key, int n) const {
    if (key.size() < 3 || key[0] != tag::kHeader) fail(Errc::kParseError, "infoset key lacks a header");
    return agent_for(kAllRoles.at(static_cast<unsigned char>(key[2]))).policy.probs(key, n);
  }

  std::vector<double> probs(const GameState& s) const { return probs(game.infoset_key(s), game.num_actions(s)); }

 private:
  static GameConfig table_config(const Agent& w, const Agent& v) {
    if (!same_rules(w.config, v.config)) {
      fail(Errc::kIncompatibleCheckpoints, w.config.name() + " agent cannot sit with " + v.config.name() + " agent");
    }
    GameConfig c = v.config;
    c.latent_counts[role_index(Role::kWerewolf)] = w.config.latent_count(Role::kWerewolf);
    return c;
  }
};

// Exemplar text for each discussion entry, from the speaker's own catalog.
class CatalogUtteranceSource : public UtteranceSource {
 public:
  CatalogUtteranceSource(const latent::CatalogSet& wolf, const latent::CatalogSet& village)
      : wolf_(wolf), village_(village) {}
  explicit CatalogUtteranceSource(const latent::CatalogSet& both) : wolf_(both), village_(both) {}

  std::string text(Role role, const DiscussionEntry& e) const override {
    const auto& set = is_wolf(role) ? wolf_ : village_;
    auto it = set.find(role);
    if (it == set.end() || e.utterance < 0 || e.latent >= static_cast<int>(it->second.exemplar_texts.size()) ||
        e.utterance >= static_cast<int>(it->second.exemplar_texts[e.latent].size())) {
      return LatentLabelSource{}.text(role, e);
    }
    return it->second.exemplar_texts[e.latent][e.utterance];
  }

 private:
  const latent::CatalogSet& wolf_;
  const latent::CatalogSet& village_;
};

// Uniform exemplar index for a latent action, -1 when the cluster has none.
inline int pick_utterance(const latent::LatentCatalog& cat, int latent, std::mt19937_64& rng) {
  const int n = static_cast<int>(cat.exemplar_texts.at(latent).size());
  if (n == 0) return -1;
  return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

}  // namespace lspo::werewolf
