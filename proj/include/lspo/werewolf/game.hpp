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

// Werewolf rules engine with abstracted (latent) discussion actions.
//
// Round structure, skipping any seat that is dead:
//
//   night: wolf proposal (only with two wolves alive; the smaller ID
//          proposes) -> wolf decision -> seer check -> doctor save
//          -> resolution and announcement
//   day:   discussion in ascending player ID, one latent action each
//          -> simultaneous vote (modeled as sequential decisions whose
//          ballots stay hidden until the tally) -> tie-break chance node
//
// Win checks run after every elimination. A game still undecided when the
// last allowed round ends is a draw with no win/lose reward.
//
// Rewards per seat are kept in a ledger as they happen:
//   +300 / -300 to winners / losers at the end (0 on a draw),
//   +5 to every seat alive when a round ends (including a round the game
//      ends in),
//   +20 / -20 for a Village-side ballot cast against a Werewolf / anyone
//      else (judged on the true role at ballot time, abstaining scores 0),
//   on a vote elimination: -10 to the eliminated seat, +5 to each surviving
//      opponent and -5 to each surviving teammate of that seat.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lspo/efg.hpp"

namespace lspo::werewolf {

enum class Role : std::int8_t { kWerewolf = 0, kSeer = 1, kDoctor = 2, kVillager = 3 };
inline constexpr int kNumRoles = 4;
inline constexpr std::array<Role, kNumRoles> kAllRoles = {Role::kWerewolf, Role::kSeer,
                                                         Role::kDoctor, Role::kVillager};

constexpr std::string_view role_name(Role r) {
  switch (r) {
    case Role::kWerewolf: return "Werewolf";
    case Role::kSeer: return "Seer";
    case Role::kDoctor: return "Doctor";
    case Role::kVillager: return "Villager";
  }
  return "?";
}

inline Role parse_role(std::string_view s) {
  for (Role r : kAllRoles) {
    if (role_name(r) == s) return r;
  }
  fail(Errc::kParseError, "unknown role '" + std::string(s) + "'");
}

constexpr int role_index(Role r) { return static_cast<int>(r); }
constexpr bool is_wolf(Role r) { return r == Role::kWerewolf; }

enum class Side : std::int8_t { kWerewolves = 0, kVillage = 1 };
constexpr Side side_of(Role r) { return is_wolf(r) ? Side::kWerewolves : Side::kVillage; }

enum class Phase : std::int8_t {
  kDeal,
  kNightWolfPropose,
  kNightWolfDecide,
  kNightSeer,
  kNightDoctor,
  kDayDiscussion,
  kDayVoting,
  kTieBreak,
  kGameOver,
};

constexpr std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::kDeal: return "deal";
    case Phase::kNightWolfPropose: return "night_wolf_propose";
    case Phase::kNightWolfDecide: return "night_wolf_decide";
    case Phase::kNightSeer: return "night_seer";
    case Phase::kNightDoctor: return "night_doctor";
    case Phase::kDayDiscussion: return "day_discussion";
    case Phase::kDayVoting: return "day_voting";
    case Phase::kTieBreak: return "tie_break";
    case Phase::kGameOver: return "game_over";
  }
  return "?";
}

enum class Outcome : std::int8_t { kOngoing, kWerewolvesWin, kVillageWins, kDraw };

inline constexpr double kWinReward = 300.0;
inline constexpr double kSurviveReward = 5.0;
inline constexpr double kCorrectVoteReward = 20.0;
inline constexpr double kEliminatedPenalty = -10.0;
inline constexpr double kOpponentOutReward = 5.0;
inline constexpr double kTeammateOutPenalty = -5.0;

struct GameConfig {
  int num_players = 7;
  std::array<int, kNumRoles> role_counts = {2, 1, 1, 3};
  int max_rounds = 3;
  // Size of each role's discussion catalog, i.e. latent actions per turn.
  std::array<int, kNumRoles> latent_counts = {3, 2, 2, 2};

  static GameConfig seven_player() { return {}; }
  static GameConfig four_player() {
    return {.num_players = 4, .role_counts = {1, 1, 0, 2}, .max_rounds = 3,
            .latent_counts = {2, 2, 2, 2}};
  }

  std::string name() const { return "werewolf" + std::to_string(num_players); }

  int latent_count(Role r) const { return latent_counts[role_index(r)]; }

  void validate() const {
    int total = 0;
    for (int c : role_counts) {
      if (c < 0) fail(Errc::kInvalidAssignment, "negative role count");
      total += c;
    }
    if (total != num_players) fail(Errc::kInvalidAssignment, "role counts do not sum to player count");
    if (role_counts[role_index(Role::kWerewolf)] < 1 || role_counts[role_index(Role::kWerewolf)] > 2) {
      fail(Errc::kInvalidAssignment, "supported configs have one or two werewolves");
    }
    if (max_rounds < 1) fail(Errc::kInvalidAssignment, "max_rounds must be >= 1");
    for (int k : latent_counts) {
      if (k < 1) fail(Errc::kInvalidAssignment, "latent catalogs need >= 1 action");
    }
  }

  friend bool operator==(const GameConfig&, const GameConfig&) = default;
};

inline constexpr int kNone = -1;
inline constexpr int kAbstain = -1;
inline constexpr int kNoBallot = -2;  // dead, or not yet cast

struct NightRecord {
  int proposal = kNone;
  int kill = kNone;
  int seer_target = kNone;
  bool seer_saw_wolf = false;
  int save = kNone;
  int killed = kNone;  // resolved victim, kNone when saved
  bool resolved = false;

  friend bool operator==(const NightRecord&, const NightRecord&) = default;
};

struct DiscussionEntry {
  PlayerId speaker = kNone;
  int latent = 0;      // index into the speaker's role catalog
  int utterance = -1;  // exemplar chosen for rendering, -1 if none

  friend bool operator==(const DiscussionEntry&, const DiscussionEntry&) = default;
};

struct RoundRecord {
  NightRecord night;
  std::vector<DiscussionEntry> discussion;
  std::vector<int> ballots;  // per seat, filled at tally: target, kAbstain or kNoBallot
  bool tallied = false;
  std::vector<PlayerId> tied;
  int eliminated = kNone;
  bool voting_resolved = false;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct RewardLedger {
  std::vector<double> surviving, voting, voting_result, terminal;

  explicit RewardLedger(int n = 0) : surviving(n, 0.0), voting(n, 0.0), voting_result(n, 0.0), terminal(n, 0.0) {}

  std::vector<double> totals() const {
    std::vector<double> t(surviving.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = surviving[i] + voting[i] + voting_result[i] + terminal[i];
    return t;
  }

  friend bool operator==(const RewardLedger&, const RewardLedger&) = default;
};

struct GameState {
  std::vector<Role> roles;  // empty until the deal resolves
  std::vector<std::uint8_t> alive;
  int round = 0;
  Phase phase = Phase::kDeal;
  PlayerId actor = kNone;  // seat to move at decision phases
  std::vector<RoundRecord> rounds;
  std::vector<int> pending_ballots;
  Outcome outcome = Outcome::kOngoing;
  RewardLedger ledger;
  std::vector<std::int16_t> trail;  // every action taken, chance included

  const RoundRecord& current() const { return rounds.back(); }
  RoundRecord& current() { return rounds.back(); }
  bool is_alive(PlayerId p) const { return alive[p] != 0; }
  int num_players() const { return static_cast<int>(alive.size()); }

  friend bool operator==(const GameState&, const GameState&) = default;
};

// Interprets a discussion entry for a listener. Training self-play reads the
// speaker's catalog index directly; cross-checkpoint play projects the spoken
// utterance into the listener's own catalog instead.
class DiscussionLens {
 public:
  virtual ~DiscussionLens() = default;
  virtual int interpret(Role speaker_role, const DiscussionEntry& entry) const = 0;
};

// Semantic description of one legal action.
struct ActionLabel {
  enum class Kind { kPropose, kKill, kSee, kSave, kSpeak, kVote, kAbstain };
  Kind kind;
  int target = kNone;  // player, or latent index for kSpeak

  friend bool operator==(const ActionLabel&, const ActionLabel&) = default;

  std::string text() const {
    const std::string p = "player_" + std::to_string(target);
    switch (kind) {
      case Kind::kPropose: return "propose to kill " + p;
      case Kind::kKill: return "kill " + p;
      case Kind::kSee: return "see " + p;
      case Kind::kSave: return "save " + p;
      case Kind::kSpeak: return "latent strategy " + std::to_string(target);
      case Kind::kVote: return "vote for " + p;
      case Kind::kAbstain: return "choose not to vote";
    }
    return "?";
  }
};

// Event tags of the per-viewer observation log. Each event is one tag byte
// followed by fixed argument bytes; the log only ever grows along a play
// path, so it doubles as a perfect-recall information-set key.
namespace tag {
inline constexpr char kHeader = 'H';
inline constexpr char kTeammate = 'T';
inline constexpr char kNight = 'N';
inline constexpr char kProposal = 'P';
inline constexpr char kKill = 'K';
inline constexpr char kSeen = 'S';
inline constexpr char kSaved = 'D';
inline constexpr char kAnnounce = 'A';
inline constexpr char kSpeech = 'C';
inline constexpr char kOwnBallot = 'V';
inline constexpr char kTally = 'Y';
inline constexpr char kEliminated = 'E';
}  // namespace tag

struct LogEvent {
  char tag;
  std::vector<int> args;

  friend bool operator==(const LogEvent&, const LogEvent&) = default;
};

// Splits a viewer log into events. Byte 0x7f decodes to kNone, 0x7e to
// kNoBallot.
inline std::vector<LogEvent> parse_viewer_log(std::string_view log, int num_players) {
  std::vector<LogEvent> out;
  std::size_t i = 0;
  while (i < log.size()) {
    const char t = log[i++];
    int arity = 1;
    switch (t) {
      case tag::kHeader:
      case tag::kSeen:
      case tag::kSpeech: arity = 2; break;
      case tag::kTally: arity = num_players; break;
      case tag::kTeammate:
      case tag::kNight:
      case tag::kProposal:
      case tag::kKill:
      case tag::kSaved:
      case tag::kAnnounce:
      case tag::kOwnBallot:
      case tag::kEliminated: break;
      default: fail(Errc::kParseError, std::string("unknown log tag '") + t + "'");
    }
    if (i + arity > log.size()) fail(Errc::kParseError, "truncated log event");
    LogEvent e{t, {}};
    for (int a = 0; a < arity; ++a) {
      const int b = static_cast<unsigned char>(log[i++]);
      e.args.push_back(b == 0x7f ? kNone : (b == 0x7e ? kNoBallot : b));
    }
    out.push_back(std::move(e));
  }
  return out;
}

class Game {
 public:
  using State = GameState;

  explicit Game(GameConfig config = GameConfig::seven_player()) : config_(config) {
    config_.validate();
    std::vector<Role> multiset;
    for (Role r : kAllRoles) multiset.insert(multiset.end(), config_.role_counts[role_index(r)], r);
    std::sort(multiset.begin(), multiset.end());
    do {
      assignments_.push_back(multiset);
    } while (std::next_permutation(multiset.begin(), multiset.end()));
  }

  const GameConfig& config() const { return config_; }
  int num_players() const { return config_.num_players; }
  const std::vector<std::vector<Role>>& assignments() const { return assignments_; }

  // Per-side listeners' interpretation of discussion; null means identity.
  void set_lens(Side side, std::shared_ptr<const DiscussionLens> lens) {
    lenses_[static_cast<int>(side)] = std::move(lens);
  }

  int assignment_index(const std::vector<Role>& roles) const {
    auto it = std::find(assignments_.begin(), assignments_.end(), roles);
    if (it == assignments_.end()) fail(Errc::kInvalidAssignment, "role assignment does not match config counts");
    return static_cast<int>(it - assignments_.begin());
  }

  State initial_state() const {
    State s;
    s.alive.assign(num_players(), 1);
    s.ledger = RewardLedger(num_players());
    s.pending_ballots.assign(num_players(), kNoBallot);
    return s;
  }

  State new_game(const std::vector<Role>& assignment) const {
    if (static_cast<int>(assignment.size()) != num_players()) {
      fail(Errc::kInvalidAssignment, "assignment has wrong number of seats");
    }
    return apply(initial_state(), assignment_index(assignment));
  }

  NodeKind node_kind(const State& s) const {
    switch (s.phase) {
      case Phase::kDeal:
      case Phase::kTieBreak: return NodeKind::chance();
      case Phase::kGameOver: return NodeKind::terminal();
      default: return NodeKind::decision(s.actor);
    }
  }

  std::vector<ChanceOutcome> chance_outcomes(const State& s) const {
    if (s.phase == Phase::kDeal) {
      std::vector<ChanceOutcome> out;
      const double p = 1.0 / static_cast<double>(assignments_.size());
      for (int i = 0; i < static_cast<int>(assignments_.size()); ++i) out.push_back({i, p});
      return out;
    }
    if (s.phase == Phase::kTieBreak) {
      std::vector<ChanceOutcome> out;
      const auto& tied = s.current().tied;
      for (int i = 0; i < static_cast<int>(tied.size()); ++i) out.push_back({i, 1.0 / tied.size()});
      return out;
    }
    fail(Errc::kNotChanceNode, std::string("phase ") + std::string(phase_name(s.phase)));
  }

  std::vector<ActionLabel> legal_actions(const State& s) const {
    using K = ActionLabel::Kind;
    if (!node_kind(s).is_decision()) fail(Errc::kNotDecisionNode, std::string("phase ") + std::string(phase_name(s.phase)));
    std::vector<ActionLabel> out;
    const PlayerId me = s.actor;
    switch (s.phase) {
      case Phase::kNightWolfPropose:
      case Phase::kNightWolfDecide: {
        const K k = s.phase == Phase::kNightWolfPropose ? K::kPropose : K::kKill;
        for (PlayerId p = 0; p < num_players(); ++p) {
          if (s.is_alive(p) && !is_wolf(s.roles[p])) out.push_back({k, p});
        }
        break;
      }
      case Phase::kNightSeer:
        for (PlayerId p = 0; p < num_players(); ++p) {
          if (s.is_alive(p) && p != me) out.push_back({K::kSee, p});
        }
        break;
      case Phase::kNightDoctor:
        for (PlayerId p = 0; p < num_players(); ++p) {
          if (s.is_alive(p)) out.push_back({K::kSave, p});
        }
        break;
      case Phase::kDayDiscussion:
        for (int k = 0; k < config_.latent_count(s.roles[me]); ++k) out.push_back({K::kSpeak, k});
        break;
      case Phase::kDayVoting:
        out.push_back({K::kAbstain, kNone});
        for (PlayerId p = 0; p < num_players(); ++p) {
          if (s.is_alive(p) && p != me) out.push_back({K::kVote, p});
        }
        break;
      default: break;
    }
    return out;
  }

  int num_actions(const State& s) const { return static_cast<int>(legal_actions(s).size()); }

  // Index of the legal action with this label, or kNone.
  ActionId find_action(const State& s, ActionLabel::Kind kind, int target) const {
    const auto legal = legal_actions(s);
    for (int i = 0; i < static_cast<int>(legal.size()); ++i) {
      if (legal[i].kind == kind && legal[i].target == target) return i;
    }
    return kNone;
  }

  State apply(const State& s, ActionId a) const {
    State next = s;
    next.trail.push_back(static_cast<std::int16_t>(a));
    if (s.phase == Phase::kDeal) {
      if (a < 0 || a >= static_cast<int>(assignments_.size())) fail(Errc::kIllegalAction, "deal index out of range");
      next.roles = assignments_[a];
      start_round(next);
      return next;
    }
    if (s.phase == Phase::kTieBreak) {
      const auto& tied = s.current().tied;
      if (a < 0 || a >= static_cast<int>(tied.size())) fail(Errc::kIllegalAction, "tie-break index out of range");
      eliminate_by_vote(next, tied[a]);
      return next;
    }
    if (s.phase == Phase::kGameOver) fail(Errc::kIllegalAction, "game is over");
    const auto legal = legal_actions(s);
    if (a < 0 || a >= static_cast<int>(legal.size())) {
      fail(Errc::kIllegalAction, "action " + std::to_string(a) + " outside " + std::to_string(legal.size()) +
                                     " legal actions in " + std::string(phase_name(s.phase)));
    }
    const ActionLabel label = legal[a];
    const PlayerId me = s.actor;
    auto& night = next.current().night;
    switch (s.phase) {
      case Phase::kNightWolfPropose:
        night.proposal = label.target;
        advance_night(next, Phase::kNightWolfDecide);
        break;
      case Phase::kNightWolfDecide:
        night.kill = label.target;
        advance_night(next, Phase::kNightSeer);
        break;
      case Phase::kNightSeer:
        night.seer_target = label.target;
        night.seer_saw_wolf = is_wolf(s.roles[label.target]);
        advance_night(next, Phase::kNightDoctor);
        break;
      case Phase::kNightDoctor:
        night.save = label.target;
        advance_night(next, Phase::kDayDiscussion);
        break;
      case Phase::kDayDiscussion: {
        next.current().discussion.push_back({me, label.target, -1});
        const PlayerId nxt = next_alive_after(next, me);
        if (nxt == kNone) {
          begin_voting(next);
        } else {
          next.actor = nxt;
        }
        break;
      }
      case Phase::kDayVoting: {
        const int ballot = label.kind == ActionLabel::Kind::kAbstain ? kAbstain : label.target;
        next.pending_ballots[me] = ballot;
        if (ballot != kAbstain && side_of(s.roles[me]) == Side::kVillage) {
          next.ledger.voting[me] += is_wolf(s.roles[ballot]) ? kCorrectVoteReward : -kCorrectVoteReward;
        }
        const PlayerId nxt = next_alive_after(next, me);
        if (nxt == kNone) {
          tally(next);
        } else {
          next.actor = nxt;
        }
        break;
      }
      default: break;
    }
    return next;
  }

  // Records the exemplar shown for the most recent discussion entry. Purely
  // cosmetic: interpretation and keys never read it.
  State with_utterance(const State& s, int utterance) const {
    State next = s;
    for (auto it = next.rounds.rbegin(); it != next.rounds.rend(); ++it) {
      if (!it->discussion.empty()) {
        it->discussion.back().utterance = utterance;
        break;
      }
    }
    return next;
  }

  std::vector<double> utilities(const State& s) const {
    if (s.phase != Phase::kGameOver) fail(Errc::kNotTerminal, std::string("phase ") + std::string(phase_name(s.phase)));
    return s.ledger.totals();
  }

  InfosetKey infoset_key(const State& s) const {
    if (!node_kind(s).is_decision()) fail(Errc::kNotDecisionNode, "infoset key requested off a decision node");
    return viewer_log(s, s.actor);
  }

  std::string history_key(const State& s) const {
    return std::string(reinterpret_cast<const char*>(s.trail.data()), s.trail.size() * sizeof(std::int16_t));
  }

  // Everything `viewer` has observed so far, as an append-only byte string:
  // own identity and role, wolf teammates, own night actions (and the wolf
  // channel for wolves), announcements, discussion as interpreted by the
  // viewer's lens, own ballot, and each public tally/elimination.
  std::string viewer_log(const State& s, PlayerId viewer) const {
    if (viewer < 0 || viewer >= num_players()) fail(Errc::kUnknownViewer, "no seat " + std::to_string(viewer));
    std::string out;
    if (s.roles.empty()) return out;
    auto put = [&](char t, std::initializer_list<int> args) {
      out.push_back(t);
      for (int x : args) out.push_back(static_cast<char>(x));
    };
    const Role my_role = s.roles[viewer];
    put(tag::kHeader, {viewer, role_index(my_role)});
    if (is_wolf(my_role)) {
      for (PlayerId p = 0; p < num_players(); ++p) {
        if (p != viewer && is_wolf(s.roles[p])) put(tag::kTeammate, {p});
      }
    }
    const DiscussionLens* lens = lenses_[static_cast<int>(side_of(my_role))].get();
    for (int r = 0; r < static_cast<int>(s.rounds.size()); ++r) {
      const RoundRecord& rec = s.rounds[r];
      put(tag::kNight, {r + 1});
      const NightRecord& n = rec.night;
      if (is_wolf(my_role)) {
        if (n.proposal != kNone) put(tag::kProposal, {n.proposal});
        if (n.kill != kNone) put(tag::kKill, {n.kill});
      }
      if (my_role == Role::kSeer && n.seer_target != kNone) {
        put(tag::kSeen, {n.seer_target, n.seer_saw_wolf ? 1 : 0});
      }
      if (my_role == Role::kDoctor && n.save != kNone) put(tag::kSaved, {n.save});
      if (!n.resolved) continue;
      put(tag::kAnnounce, {n.killed == kNone ? 0x7f : n.killed});
      for (const auto& e : rec.discussion) {
        const int latent = lens != nullptr ? lens->interpret(s.roles[e.speaker], e) : e.latent;
        put(tag::kSpeech, {e.speaker, latent});
      }
      const bool voting_now = r + 1 == s.round && s.phase == Phase::kDayVoting;
      if (rec.tallied || voting_now) {
        const int own = rec.tallied ? rec.ballots[viewer] : s.pending_ballots[viewer];
        if (own != kNoBallot) put(tag::kOwnBallot, {own == kAbstain ? 0x7f : own});
      }
      if (rec.tallied) {
        out.push_back(tag::kTally);
        for (int b : rec.ballots) out.push_back(static_cast<char>(b == kAbstain ? 0x7f : (b == kNoBallot ? 0x7e : b)));
      }
      if (rec.voting_resolved) put(tag::kEliminated, {rec.eliminated == kNone ? 0x7f : rec.eliminated});
    }
    return out;
  }

  static int count_alive(const State& s, Side side) {
    int n = 0;
    for (PlayerId p = 0; p < s.num_players(); ++p) {
      if (s.is_alive(p) && side_of(s.roles[p]) == side) ++n;
    }
    return n;
  }

 private:
  PlayerId first_alive(const State& s, Role role) const {
    for (PlayerId p = 0; p < num_players(); ++p) {
      if (s.is_alive(p) && s.roles[p] == role) return p;
    }
    return kNone;
  }

  PlayerId last_alive(const State& s, Role role) const {
    for (PlayerId p = num_players() - 1; p >= 0; --p) {
      if (s.is_alive(p) && s.roles[p] == role) return p;
    }
    return kNone;
  }

  PlayerId next_alive_after(const State& s, PlayerId p) const {
    for (PlayerId q = p + 1; q < num_players(); ++q) {
      if (s.is_alive(q)) return q;
    }
    return kNone;
  }

  void start_round(State& s) const {
    ++s.round;
    s.rounds.emplace_back();
    const int wolves = count_alive(s, Side::kWerewolves);
    advance_night(s, wolves >= 2 ? Phase::kNightWolfPropose : Phase::kNightWolfDecide);
  }

  // Moves to the first night phase at or after `from` whose actor is alive;
  // past the doctor it resolves the night.
  void advance_night(State& s, Phase from) const {
    switch (from) {
      case Phase::kNightWolfPropose:
        s.phase = Phase::kNightWolfPropose;
        s.actor = first_alive(s, Role::kWerewolf);
        return;
      case Phase::kNightWolfDecide:
        s.phase = Phase::kNightWolfDecide;
        s.actor = last_alive(s, Role::kWerewolf);
        return;
      case Phase::kNightSeer:
        if (PlayerId seer = first_alive(s, Role::kSeer); seer != kNone) {
          s.phase = Phase::kNightSeer;
          s.actor = seer;
          return;
        }
        [[fallthrough]];
      case Phase::kNightDoctor:
        if (PlayerId doc = first_alive(s, Role::kDoctor); doc != kNone) {
          s.phase = Phase::kNightDoctor;
          s.actor = doc;
          return;
        }
        [[fallthrough]];
      default:
        resolve_night(s);
    }
  }

  void resolve_night(State& s) const {
    auto& n = s.current().night;
    n.resolved = true;
    n.killed = (n.kill != kNone && n.kill != n.save) ? n.kill : kNone;
    if (n.killed != kNone) {
      s.alive[n.killed] = 0;
      if (check_winner(s)) return;
    }
    s.phase = Phase::kDayDiscussion;
    s.actor = next_alive_after(s, -1);
  }

  void begin_voting(State& s) const {
    s.phase = Phase::kDayVoting;
    s.pending_ballots.assign(num_players(), kNoBallot);
    s.actor = next_alive_after(s, -1);
  }

  void tally(State& s) const {
    auto& rec = s.current();
    rec.ballots = s.pending_ballots;
    rec.tallied = true;
    s.pending_ballots.assign(num_players(), kNoBallot);
    std::vector<int> counts(num_players(), 0);
    for (int b : rec.ballots) {
      if (b >= 0) ++counts[b];
    }
    const int top = *std::max_element(counts.begin(), counts.end());
    if (top == 0) {
      rec.voting_resolved = true;
      end_round(s);
      return;
    }
    for (PlayerId p = 0; p < num_players(); ++p) {
      if (counts[p] == top) rec.tied.push_back(p);
    }
    if (rec.tied.size() == 1) {
      eliminate_by_vote(s, rec.tied.front());
    } else {
      s.phase = Phase::kTieBreak;
      s.actor = kNone;
    }
  }

  void eliminate_by_vote(State& s, PlayerId out) const {
    auto& rec = s.current();
    rec.eliminated = out;
    rec.voting_resolved = true;
    s.alive[out] = 0;
    s.ledger.voting_result[out] += kEliminatedPenalty;
    const Side out_side = side_of(s.roles[out]);
    for (PlayerId p = 0; p < num_players(); ++p) {
      if (!s.is_alive(p)) continue;
      s.ledger.voting_result[p] += side_of(s.roles[p]) == out_side ? kTeammateOutPenalty : kOpponentOutReward;
    }
    if (check_winner(s)) return;
    end_round(s);
  }

  void end_round(State& s) const {
    if (s.round >= config_.max_rounds) {
      finish(s, Outcome::kDraw);
      return;
    }
    credit_survivors(s);
    start_round(s);
  }

  void credit_survivors(State& s) const {
    for (PlayerId p = 0; p < num_players(); ++p) {
      if (s.is_alive(p)) s.ledger.surviving[p] += kSurviveReward;
    }
  }

  bool check_winner(State& s) const {
    const int wolves = count_alive(s, Side::kWerewolves);
    const int others = count_alive(s, Side::kVillage);
    if (wolves == 0) {
      finish(s, Outcome::kVillageWins);
      return true;
    }
    if (wolves >= others) {
      finish(s, Outcome::kWerewolvesWin);
      return true;
    }
    return false;
  }

  void finish(State& s, Outcome outcome) const {
    credit_survivors(s);
    s.outcome = outcome;
    s.phase = Phase::kGameOver;
    s.actor = kNone;
    if (outcome == Outcome::kDraw) return;
    const Side winner = outcome == Outcome::kWerewolvesWin ? Side::kWerewolves : Side::kVillage;
    for (PlayerId p = 0; p < num_players(); ++p) {
      s.ledger.terminal[p] = side_of(s.roles[p]) == winner ? kWinReward : -kWinReward;
    }
  }

  GameConfig config_;
  std::vector<std::vector<Role>> assignments_;
  std::array<std::shared_ptr<const DiscussionLens>, 2> lenses_;
};

}  // namespace lspo::werewolf
