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

// Viewer-specific observations of a Werewolf state: a fixed-length vector
// and the textual game log used as prompt and transcript.

#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "lspo/werewolf/game.hpp"

namespace lspo::werewolf {

// Vector layout (n seats, R = max rounds):
//   seat one-hot [n] | role one-hot [4] | round [1] |
//   phase one-hot (night, discussion, voting) [3] | alive flags [n] |
//   per round: own secret target [n], night victim [n], ballots [n*n]
// Empty groups stay all-zero.
inline int observation_size(const GameConfig& c) {
  const int n = c.num_players;
  return n + kNumRoles + 1 + 3 + n + c.max_rounds * (n + n + n * n);
}

struct WolfActors {
  PlayerId proposer = kNone;
  PlayerId decider = kNone;
};

// Wolves only leave the game by vote, so the pack alive at night `r` is every
// wolf not eliminated in an earlier round.
inline WolfActors wolf_actors(const GameState& s, int r) {
  std::vector<PlayerId> pack;
  for (PlayerId p = 0; p < s.num_players(); ++p) {
    if (!is_wolf(s.roles[p])) continue;
    bool gone = false;
    for (int j = 0; j < r; ++j) gone = gone || s.rounds[j].eliminated == p;
    if (!gone) pack.push_back(p);
  }
  if (pack.empty()) return {};
  return {pack.size() >= 2 ? pack.front() : kNone, pack.back()};
}

inline int own_secret_target(const GameState& s, PlayerId viewer, int r) {
  const NightRecord& n = s.rounds[r].night;
  switch (s.roles[viewer]) {
    case Role::kWerewolf: {
      const WolfActors w = wolf_actors(s, r);
      if (viewer == w.proposer) return n.proposal;
      if (viewer == w.decider) return n.kill;
      return kNone;
    }
    case Role::kSeer: return n.seer_target;
    case Role::kDoctor: return n.save;
    case Role::kVillager: return kNone;
  }
  return kNone;
}

inline std::vector<double> encode_observation(const Game& game, const GameState& s, PlayerId viewer) {
  const GameConfig& c = game.config();
  const int n = c.num_players;
  if (viewer < 0 || viewer >= n || s.roles.empty()) fail(Errc::kUnknownViewer, "viewer not dealt in");
  std::vector<double> v(observation_size(c), 0.0);
  int off = 0;
  v[off + viewer] = 1.0;
  off += n;
  v[off + role_index(s.roles[viewer])] = 1.0;
  off += kNumRoles;
  v[off] = static_cast<double>(s.round);
  off += 1;
  switch (s.phase) {
    case Phase::kNightWolfPropose:
    case Phase::kNightWolfDecide:
    case Phase::kNightSeer:
    case Phase::kNightDoctor: v[off + 0] = 1.0; break;
    case Phase::kDayDiscussion: v[off + 1] = 1.0; break;
    case Phase::kDayVoting:
    case Phase::kTieBreak: v[off + 2] = 1.0; break;
    default: break;
  }
  off += 3;
  for (PlayerId p = 0; p < n; ++p) v[off + p] = s.is_alive(p) ? 1.0 : 0.0;
  off += n;
  for (int r = 0; r < c.max_rounds; ++r) {
    const int block = off + r * (n + n + n * n);
    if (r >= static_cast<int>(s.rounds.size())) continue;
    const RoundRecord& rec = s.rounds[r];
    if (const int t = own_secret_target(s, viewer, r); t != kNone) v[block + t] = 1.0;
    if (rec.night.resolved && rec.night.killed != kNone) v[block + n + rec.night.killed] = 1.0;
    if (rec.tallied) {
      for (PlayerId voter = 0; voter < n; ++voter) {
        const int b = rec.ballots[voter];
        if (b >= 0) v[block + 2 * n + voter * n + b] = 1.0;
      }
    }
  }
  return v;
}

// Text shown for one discussion entry.
class UtteranceSource {
 public:
  virtual ~UtteranceSource() = default;
  virtual std::string text(Role speaker_role, const DiscussionEntry& entry) const = 0;
};

class LatentLabelSource : public UtteranceSource {
 public:
  std::string text(Role, const DiscussionEntry& e) const override {
    return "[latent strategy " + std::to_string(e.latent) + "]";
  }
};

inline std::string seat(PlayerId p) { return "player_" + std::to_string(p); }

inline std::string join_seats(const std::vector<PlayerId>& ps) {
  std::string out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) out += ", ";
    out += seat(ps[i]);
  }
  return out;
}

inline std::string phase_phrase(const GameState& s) {
  const std::string r = std::to_string(s.round);
  switch (s.phase) {
    case Phase::kNightWolfPropose:
    case Phase::kNightWolfDecide:
    case Phase::kNightSeer:
    case Phase::kNightDoctor: return "night " + r;
    case Phase::kDayDiscussion: return "day " + r + " discussion";
    case Phase::kDayVoting:
    case Phase::kTieBreak: return "day " + r + " voting";
    case Phase::kGameOver: return "game over";
    case Phase::kDeal: return "setup";
  }
  return "?";
}

// Game log from `viewer`'s seat in the layout of a transcript: basic
// information, then per round the viewer's own night action, the
// announcement, the discussion and the voting result. When the viewer is to
// move, a closing line lists the available actions.
inline std::string render_text_observation(const Game& game, const GameState& s, PlayerId viewer,
                                           const UtteranceSource& utterances = LatentLabelSource{}) {
  const int n = game.num_players();
  if (viewer < 0 || viewer >= n || s.roles.empty()) fail(Errc::kUnknownViewer, "viewer not dealt in");
  const Role me = s.roles[viewer];
  std::ostringstream out;
  out << "Basic Information:\n";
  out << "- you are " << seat(viewer) << ", your role is " << role_name(me) << ".\n";
  std::vector<PlayerId> mates;
  if (is_wolf(me)) {
    for (PlayerId p = 0; p < n; ++p) {
      if (p != viewer && is_wolf(s.roles[p])) mates.push_back(p);
    }
    if (!mates.empty()) out << "- your teammate is " << join_seats(mates) << ".\n";
  }
  out << "- current round and phase: " << phase_phrase(s) << ".\n";
  std::vector<PlayerId> remaining;
  for (PlayerId p = 0; p < n; ++p) {
    if (s.is_alive(p)) remaining.push_back(p);
  }
  out << "- remaining players: " << join_seats(remaining) << ".\n";

  for (int r = 0; r < static_cast<int>(s.rounds.size()); ++r) {
    const RoundRecord& rec = s.rounds[r];
    const NightRecord& night = rec.night;
    const std::string day = std::to_string(r + 1);
    out << "Round " << day << ":\n";
    switch (me) {
      case Role::kWerewolf: {
        const WolfActors w = wolf_actors(s, r);
        auto who = [&](PlayerId p) { return p == viewer ? std::string("you") : seat(p); };
        if (night.proposal != kNone) {
          out << "- night " << day << ": " << who(w.proposer) << " proposed to kill " << seat(night.proposal) << ".\n";
        }
        if (night.kill != kNone) {
          out << "- night " << day << ": " << who(w.decider) << " chose to kill " << seat(night.kill) << ".\n";
        }
        break;
      }
      case Role::kSeer:
        if (night.seer_target != kNone) {
          out << "- night " << day << ": you saw " << seat(night.seer_target) << " is "
              << (night.seer_saw_wolf ? "a Werewolf" : "not a Werewolf") << ".\n";
        }
        break;
      case Role::kDoctor:
        if (night.save != kNone) out << "- night " << day << ": you chose to save " << seat(night.save) << ".\n";
        break;
      case Role::kVillager: break;
    }
    if (!night.resolved) continue;
    out << "- day " << day << " announcement: "
        << (night.killed == kNone ? std::string("no player was killed last night")
                                  : seat(night.killed) + " was killed last night")
        << ".\n";
    if (!rec.discussion.empty()) {
      out << "- day " << day << " discussion:\n";
      for (const auto& e : rec.discussion) {
        out << "  - " << (e.speaker == viewer ? std::string("you") : seat(e.speaker))
            << " said: " << utterances.text(s.roles[e.speaker], e) << "\n";
      }
    }
    if (!rec.tallied) continue;
    out << "- day " << day << " voting result: ";
    if (!rec.voting_resolved) {
      out << "a tie is being broken at random.\n";
    } else if (rec.eliminated == kNone) {
      out << "no player was eliminated.\n";
    } else {
      out << seat(rec.eliminated) << (rec.tied.size() > 1 ? " was chosen among the tied players" : " had the most votes")
          << " and was eliminated.\n";
    }
    std::vector<std::vector<PlayerId>> voted_for(n);
    std::vector<PlayerId> abstained;
    for (PlayerId v = 0; v < n; ++v) {
      const int b = rec.ballots[v];
      if (b >= 0) voted_for[b].push_back(v);
      if (b == kAbstain) abstained.push_back(v);
    }
    for (PlayerId t = 0; t < n; ++t) {
      if (!voted_for[t].empty()) out << "  - voted for " << seat(t) << ": " << join_seats(voted_for[t]) << ".\n";
    }
    if (!abstained.empty()) out << "  - choose not to vote: " << join_seats(abstained) << ".\n";
  }

  if (s.phase == Phase::kGameOver) {
    switch (s.outcome) {
      case Outcome::kWerewolvesWin: out << "The Werewolves win the game.\n"; break;
      case Outcome::kVillageWins: out << "The Villagers win the game.\n"; break;
      case Outcome::kDraw: out << "The game ends in a draw.\n"; break;
      case Outcome::kOngoing: break;
    }
  } else if (game.node_kind(s).is_decision() && s.actor == viewer) {
    std::string actions;
    for (const auto& a : game.legal_actions(s)) {
      if (!actions.empty()) actions += ", ";
      actions += a.text();
    }
    out << "Now it is " << phase_phrase(s) << " and you should choose from the following actions: " << actions
        << ".\n";
  }
  return out.str();
}

}  // namespace lspo::werewolf
