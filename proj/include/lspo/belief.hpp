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

// Posterior over hidden role assignments from one seat's point of view.
//
// The tracker keeps every hidden history compatible with the viewer's log as
// a weighted hypothesis. Advancing to a longer log walks forward from each
// hypothesis through unobserved moves: chance at its probabilities, other
// seats at their policy probabilities, the viewer's own moves at weight 1.
// A branch survives while its log is a prefix of the target and stops where
// the log first equals it.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lspo/cfr.hpp"
#include "lspo/werewolf/game.hpp"

namespace lspo::belief {

using werewolf::Game;
using werewolf::GameState;
using werewolf::kNumRoles;
using werewolf::Role;

struct PrivateInfo {
  PlayerId viewer = 0;
  Role role = Role::kVillager;
  std::vector<PlayerId> teammates;                   // other wolves, for a wolf
  std::vector<std::pair<PlayerId, bool>> seer_checks;  // (target, is wolf)
};

inline PrivateInfo private_info(const GameState& s, PlayerId viewer) {
  if (s.roles.empty() || viewer < 0 || viewer >= s.num_players()) {
    fail(Errc::kInconsistentPrivateInfo, "viewer has no private information yet");
  }
  PrivateInfo info{.viewer = viewer, .role = s.roles[viewer]};
  if (werewolf::is_wolf(info.role)) {
    for (PlayerId p = 0; p < s.num_players(); ++p) {
      if (p != viewer && werewolf::is_wolf(s.roles[p])) info.teammates.push_back(p);
    }
  }
  if (info.role == Role::kSeer) {
    for (const auto& rec : s.rounds) {
      if (rec.night.seer_target != werewolf::kNone) {
        info.seer_checks.emplace_back(rec.night.seer_target, rec.night.seer_saw_wolf);
      }
    }
  }
  return info;
}

struct Belief {
  PlayerId viewer = 0;
  std::vector<std::vector<Role>> support;
  std::vector<double> weights;
  bool fallback = false;   // an update fell back to rules-only likelihoods
  bool truncated = false;  // hypotheses were pruned to the beam width
};

inline bool consistent(const std::vector<Role>& roles, const PrivateInfo& info) {
  if (roles[info.viewer] != info.role) return false;
  if (werewolf::is_wolf(info.role)) {
    for (PlayerId p = 0; p < static_cast<int>(roles.size()); ++p) {
      const bool mate = std::find(info.teammates.begin(), info.teammates.end(), p) != info.teammates.end();
      if (p != info.viewer && werewolf::is_wolf(roles[p]) != mate) return false;
    }
  }
  for (const auto& [target, wolf] : info.seer_checks) {
    if (werewolf::is_wolf(roles[target]) != wolf) return false;
  }
  return true;
}

// Uniform prior over the deals consistent with the viewer's private info.
inline Belief init_belief(const Game& game, const PrivateInfo& info) {
  if (info.viewer < 0 || info.viewer >= game.num_players()) {
    fail(Errc::kInconsistentPrivateInfo, "viewer seat out of range");
  }
  Belief b{.viewer = info.viewer};
  for (const auto& roles : game.assignments()) {
    if (consistent(roles, info)) b.support.push_back(roles);
  }
  if (b.support.empty()) fail(Errc::kInconsistentPrivateInfo, "no deal matches the private information");
  b.weights.assign(b.support.size(), 1.0 / static_cast<double>(b.support.size()));
  return b;
}

struct Prediction {
  std::vector<std::array<double, kNumRoles>> marginals;  // [player][role]
  std::vector<Role> argmax;
};

// Argmax ties within this margin go to the lowest role index.
inline constexpr double kArgmaxTie = 1e-12;

inline Prediction predict(const Belief& b) {
  Prediction p;
  if (b.support.empty()) return p;
  const int n = static_cast<int>(b.support.front().size());
  p.marginals.assign(n, {});
  for (std::size_t i = 0; i < b.support.size(); ++i) {
    for (int q = 0; q < n; ++q) p.marginals[q][werewolf::role_index(b.support[i][q])] += b.weights[i];
  }
  for (int q = 0; q < n; ++q) {
    int best = 0;
    for (int r = 1; r < kNumRoles; ++r) {
      if (p.marginals[q][r] > p.marginals[q][best] + kArgmaxTie) best = r;
    }
    p.argmax.push_back(werewolf::kAllRoles[best]);
  }
  return p;
}

inline constexpr std::size_t kDefaultBeam = 4096;

template <Policy P>
class BeliefTracker {
 public:
  struct Hypothesis {
    GameState state;
    double weight;
  };

  BeliefTracker(const Game& game, const P& policy, PlayerId viewer, std::size_t beam = kDefaultBeam)
      : game_(game), policy_(policy), viewer_(viewer), beam_(beam) {
    if (viewer < 0 || viewer >= game.num_players()) fail(Errc::kUnknownViewer, "no seat " + std::to_string(viewer));
    hypotheses_.push_back({game_.initial_state(), 1.0});
  }

  PlayerId viewer() const { return viewer_; }
  const std::string& log() const { return log_; }
  const std::vector<Hypothesis>& hypotheses() const { return hypotheses_; }

  // Conditions on the viewer's log having grown to `target`.
  void observe(const std::string& target) {
    if (target == log_) return;
    if (target.compare(0, log_.size(), log_) != 0) {
      fail(Errc::kInconsistentPrivateInfo, "observed log does not extend the previous one");
    }
    std::vector<Hypothesis> next;
    const auto tallies = tallies_of(target);
    for (const auto& h : hypotheses_) expand(h.state, h.weight, target, tallies, false, next);
    if (total(next) <= 0.0) {
      // Off-model play: restart from the deal with rules-only likelihoods.
      next.clear();
      expand(game_.initial_state(), 1.0, target, tallies, true, next);
      if (total(next) <= 0.0) fail(Errc::kZeroPosterior, "log is impossible under the rules");
      fallback_ = true;
    }
    if (next.size() > beam_) {
      std::stable_sort(next.begin(), next.end(),
                       [](const Hypothesis& a, const Hypothesis& b) { return a.weight > b.weight; });
      next.resize(beam_);
      truncated_ = true;
    }
    const double z = total(next);
    for (auto& h : next) h.weight /= z;
    hypotheses_ = std::move(next);
    log_ = target;
  }

  Belief belief() const {
    std::map<int, double> by_deal;
    for (const auto& h : hypotheses_) {
      if (h.state.roles.empty()) continue;
      by_deal[game_.assignment_index(h.state.roles)] += h.weight;
    }
    Belief b{.viewer = viewer_, .fallback = fallback_, .truncated = truncated_};
    double z = 0.0;
    for (const auto& [idx, w] : by_deal) z += w;
    for (const auto& [idx, w] : by_deal) {
      b.support.push_back(game_.assignments()[idx]);
      b.weights.push_back(w / z);
    }
    return b;
  }

 private:
  static double total(const std::vector<Hypothesis>& hs) {
    double z = 0.0;
    for (const auto& h : hs) z += h.weight;
    return z;
  }

  // Ballots of each tallied round in the target log, keyed by round.
  std::map<int, std::vector<int>> tallies_of(const std::string& log) const {
    std::map<int, std::vector<int>> out;
    int round = 0;
    for (const auto& e : werewolf::parse_viewer_log(log, game_.num_players())) {
      if (e.tag == werewolf::tag::kNight) round = e.args[0];
      if (e.tag == werewolf::tag::kTally) out[round] = e.args;
    }
    return out;
  }

  void expand(const GameState& s, double w, const std::string& target, const std::map<int, std::vector<int>>& tallies,
              bool uniform, std::vector<Hypothesis>& out) const {
    auto visit = [&](const GameState& child, double cw) {
      if (cw <= 0.0) return;
      const std::string log = game_.viewer_log(child, viewer_);
      if (log == target) {
        out.push_back({child, cw});
      } else if (log.size() < target.size() && target.compare(0, log.size(), log) == 0 &&
                 !game_.node_kind(child).is_terminal()) {
        expand(child, cw, target, tallies, uniform, out);
      }
    };
    const NodeKind kind = game_.node_kind(s);
    if (kind.is_terminal()) return;
    if (kind.is_chance()) {
      for (const auto& o : game_.chance_outcomes(s)) visit(game_.apply(s, o.action), w * o.probability);
      return;
    }
    const int n = game_.num_actions(s);
    if (kind.player == viewer_) {
      for (ActionId a = 0; a < n; ++a) visit(game_.apply(s, a), w);
      return;
    }
    const auto sigma = uniform ? uniform_probs(n) : policy_.probs(game_.infoset_key(s), n);
    if (s.phase == werewolf::Phase::kDayVoting) {
      if (auto it = tallies.find(s.round); it != tallies.end()) {
        const int ballot = it->second[s.actor];
        const ActionId a = ballot == werewolf::kAbstain
                               ? game_.find_action(s, werewolf::ActionLabel::Kind::kAbstain, werewolf::kNone)
                               : game_.find_action(s, werewolf::ActionLabel::Kind::kVote, ballot);
        if (a != werewolf::kNone) visit(game_.apply(s, a), w * sigma[a]);
        return;
      }
    }
    for (ActionId a = 0; a < n; ++a) visit(game_.apply(s, a), w * sigma[a]);
  }

  const Game& game_;
  const P& policy_;
  PlayerId viewer_;
  std::size_t beam_;
  std::string log_;
  std::vector<Hypothesis> hypotheses_;
  bool fallback_ = false;
  bool truncated_ = false;
};

}  // namespace lspo::belief
