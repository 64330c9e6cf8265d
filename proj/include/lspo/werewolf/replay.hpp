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

// Game replays as line-delimited JSON. The first line is a header carrying
// the schema version and the game count; each following line is one game.

#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "lspo/werewolf/agent.hpp"

namespace lspo::werewolf {

inline constexpr int kReplayVersion = 1;
inline constexpr const char* kReplaySchema = "lspo.replay";

struct Move {
  PlayerId player = kChancePlayer;
  Phase phase = Phase::kDeal;
  ActionId action = 0;
  int utterance = -1;  // exemplar shown, discussion moves only
  std::string label;

  friend bool operator==(const Move&, const Move&) = default;
};

struct Replay {
  GameConfig config;
  std::uint64_t seed = 0;
  std::vector<Role> assignment;  // empty when private info was withheld
  std::vector<Move> moves;
  RewardLedger ledger = RewardLedger(0);
  std::vector<double> utilities;
  Outcome outcome = Outcome::kOngoing;
  std::string wolf_checkpoint, village_checkpoint;

  friend bool operator==(const Replay&, const Replay&) = default;
};

inline std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kOngoing: return "ongoing";
    case Outcome::kWerewolvesWin: return "werewolves";
    case Outcome::kVillageWins: return "village";
    case Outcome::kDraw: return "draw";
  }
  return "?";
}

inline Outcome parse_outcome(const std::string& s) {
  for (Outcome o : {Outcome::kOngoing, Outcome::kWerewolvesWin, Outcome::kVillageWins, Outcome::kDraw}) {
    if (outcome_name(o) == s) return o;
  }
  fail(Errc::kSchemaMismatch, "unknown outcome '" + s + "'");
}

inline Phase parse_phase(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(Phase::kGameOver); ++i) {
    if (phase_name(static_cast<Phase>(i)) == s) return static_cast<Phase>(i);
  }
  fail(Errc::kSchemaMismatch, "unknown phase '" + s + "'");
}

// Applies `a` at `s` and records the move.
inline GameState record_move(const Game& game, const GameState& s, ActionId a, int utterance, Replay& r) {
  Move m{.player = game.node_kind(s).is_decision() ? s.actor : kChancePlayer, .phase = s.phase, .action = a};
  if (m.player != kChancePlayer) m.label = game.legal_actions(s).at(a).text();
  GameState next = game.apply(s, a);
  if (s.phase == Phase::kDeal) r.assignment = next.roles;
  if (s.phase == Phase::kDayDiscussion && utterance >= 0) {
    next = game.with_utterance(next, utterance);
    m.utterance = utterance;
  }
  r.moves.push_back(std::move(m));
  return next;
}

inline void finish_replay(const GameState& end, Replay& r) {
  r.ledger = end.ledger;
  r.utilities = end.ledger.totals();
  r.outcome = end.outcome;
}

// Every state along the replay, starting at the root. The replayed final
// ledger must match the recorded one.
inline std::vector<GameState> replay_states(const Game& game, const Replay& r) {
  if (!same_rules(game.config(), r.config)) {
    fail(Errc::kIncompatibleCheckpoints, "replay is for " + r.config.name() + ", game is " + game.config().name());
  }
  std::vector<GameState> out{game.initial_state()};
  for (const Move& m : r.moves) {
    if (out.back().phase != m.phase) fail(Errc::kSchemaMismatch, "replay move does not fit the game state");
    GameState next = game.apply(out.back(), m.action);
    if (m.utterance >= 0) next = game.with_utterance(next, m.utterance);
    out.push_back(std::move(next));
  }
  if (!r.assignment.empty() && out.size() > 1 && out[1].roles != r.assignment) {
    fail(Errc::kSchemaMismatch, "replay deal does not match its assignment");
  }
  if (out.back().phase == Phase::kGameOver && !(out.back().ledger == r.ledger)) {
    fail(Errc::kSchemaMismatch, "replayed rewards differ from the recorded ledger");
  }
  return out;
}

inline nlohmann::json replay_to_json(const Replay& r) {
  nlohmann::json moves = nlohmann::json::array();
  for (const Move& m : r.moves) {
    nlohmann::json j = {{"player", m.player}, {"phase", std::string(phase_name(m.phase))}, {"action", m.action}};
    if (!m.label.empty()) j["label"] = m.label;
    if (m.utterance >= 0) j["utterance"] = m.utterance;
    moves.push_back(std::move(j));
  }
  nlohmann::json assignment = nullptr;
  if (!r.assignment.empty()) {
    assignment = nlohmann::json::array();
    for (Role role : r.assignment) assignment.push_back(std::string(role_name(role)));
  }
  return {{"config", config_to_json(r.config)},
          {"seed", r.seed},
          {"assignment", assignment},
          {"moves", moves},
          {"ledger",
           {{"surviving", r.ledger.surviving},
            {"voting", r.ledger.voting},
            {"voting_result", r.ledger.voting_result},
            {"terminal", r.ledger.terminal}}},
          {"utilities", r.utilities},
          {"outcome", outcome_name(r.outcome)},
          {"checkpoints", {{"wolf", r.wolf_checkpoint}, {"village", r.village_checkpoint}}}};
}

inline Replay replay_from_json(const nlohmann::json& j) {
  Replay r;
  try {
    r.config = config_from_json(j.at("config"));
    r.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("assignment").is_null()) {
      for (const auto& name : j.at("assignment")) r.assignment.push_back(parse_role(name.get<std::string>()));
    }
    for (const auto& mj : j.at("moves")) {
      Move m;
      m.player = mj.at("player").get<int>();
      m.phase = parse_phase(mj.at("phase").get<std::string>());
      m.action = mj.at("action").get<int>();
      m.label = mj.value("label", std::string());
      m.utterance = mj.value("utterance", -1);
      r.moves.push_back(std::move(m));
    }
    const auto& l = j.at("ledger");
    r.ledger.surviving = l.at("surviving").get<std::vector<double>>();
    r.ledger.voting = l.at("voting").get<std::vector<double>>();
    r.ledger.voting_result = l.at("voting_result").get<std::vector<double>>();
    r.ledger.terminal = l.at("terminal").get<std::vector<double>>();
    r.utilities = j.at("utilities").get<std::vector<double>>();
    r.outcome = parse_outcome(j.at("outcome").get<std::string>());
    r.wolf_checkpoint = j.at("checkpoints").at("wolf").get<std::string>();
    r.village_checkpoint = j.at("checkpoints").at("village").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kSchemaMismatch, std::string("replay: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::kSchemaMismatch) throw;
    fail(Errc::kSchemaMismatch, std::string("replay: ") + e.what());
  }
  return r;
}

inline void write_replays(const std::string& path, const std::vector<Replay>& replays) {
  std::ofstream out(path);
  if (!out) fail(Errc::kIo, "cannot write " + path);
  out << nlohmann::json{{"schema", kReplaySchema}, {"version", kReplayVersion}, {"games", replays.size()}}.dump()
      << '\n';
  for (const auto& r : replays) out << replay_to_json(r).dump() << '\n';
}

// Reads a replay file. With `expected` set, every game must use those rules.
inline std::vector<Replay> read_replays(const std::string& path, const std::optional<GameConfig>& expected = {}) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIo, "cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::kSchemaMismatch, path + ": missing header");
  std::size_t games = 0;
  try {
    const auto h = nlohmann::json::parse(line);
    if (h.at("schema") != kReplaySchema || h.at("version") != kReplayVersion) {
      fail(Errc::kSchemaMismatch, path + ": unsupported replay schema");
    }
    games = h.at("games").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kSchemaMismatch, path + ": bad header: " + e.what());
  }
  std::vector<Replay> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::kSchemaMismatch, path + ": game " + std::to_string(out.size() + 1) + ": " + e.what());
    }
    Replay r = replay_from_json(j);
    if (expected && !same_rules(*expected, r.config)) {
      fail(Errc::kIncompatibleCheckpoints,
           path + " holds " + r.config.name() + " games, expected " + expected->name());
    }
    out.push_back(std::move(r));
  }
  if (out.size() != games) {
    fail(Errc::kSchemaMismatch, path + ": header promises " + std::to_string(games) + " games, found " +
                                    std::to_string(out.size()));
  }
  return out;
}

}  // namespace lspo::werewolf
