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

// Rock-Paper-Scissors-Spock-Lizard as a two-level extensive-form game.
//
// Player 0 moves, then player 1 moves from a single information set that
// covers every player-0 choice, which makes the one-shot simultaneous game
// solvable by the same CFR code as the sequential games. A restricted game
// limits both players to a subset of the five throws.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "lspo/efg.hpp"

namespace lspo::rpssl {

enum class Throw : int { kRock = 0, kPaper, kScissors, kSpock, kLizard };

inline constexpr int kNumThrows = 5;
inline constexpr std::array<Throw, kNumThrows> kAllThrows = {
    Throw::kRock, Throw::kPaper, Throw::kScissors, Throw::kSpock,
    Throw::kLizard};

constexpr std::string_view throw_name(Throw t) {
  switch (t) {
    case Throw::kRock: return "rock";
    case Throw::kPaper: return "paper";
    case Throw::kScissors: return "scissors";
    case Throw::kSpock: return "spock";
    case Throw::kLizard: return "lizard";
  }
  return "?";
}

// Rock crushes Scissors and Lizard; Paper covers Rock and disproves Spock;
// Scissors cut Paper and decapitate Lizard; Spock smashes Scissors and
// vaporizes Rock; Lizard eats Paper and poisons Spock.
constexpr bool beats(Throw a, Throw b) {
  constexpr bool table[kNumThrows][kNumThrows] = {
      // R      P      S      K      L
      {false, false, true, false, true},   // Rock
      {true, false, false, true, false},   // Paper
      {false, true, false, false, true},   // Scissors
      {true, false, true, false, false},   // Spock
      {false, true, false, true, false},   // Lizard
  };
  return table[static_cast<int>(a)][static_cast<int>(b)];
}

constexpr int payoff(Throw a, Throw b) {
  if (beats(a, b)) return 1;
  if (beats(b, a)) return -1;
  return 0;
}

// Probabilities indexed by Throw over all five throws; a strategy for a
// restricted game keeps zero mass outside the subset.
using MixedStrategy = std::array<double, kNumThrows>;

inline MixedStrategy uniform_over(const std::vector<Throw>& subset) {
  MixedStrategy s{};
  for (Throw t : subset) s[static_cast<int>(t)] = 1.0 / subset.size();
  return s;
}

class Game {
 public:
  struct State {
    std::vector<int> choices;  // indices into the subset, one per mover
  };

  Game() : subset_(kAllThrows.begin(), kAllThrows.end()) {}

  static Game restrict(std::vector<Throw> subset) {
    if (subset.empty()) fail(Errc::kEmptySubset, "restricted RPSSL needs >= 1 throw");
    std::sort(subset.begin(), subset.end());
    subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
    Game g;
    g.subset_ = std::move(subset);
    return g;
  }

  const std::vector<Throw>& subset() const { return subset_; }
  bool is_full() const { return subset_.size() == kNumThrows; }

  int num_players() const { return 2; }
  State initial_state() const { return {}; }

  NodeKind node_kind(const State& s) const {
    if (s.choices.size() >= 2) return NodeKind::terminal();
    return NodeKind::decision(static_cast<PlayerId>(s.choices.size()));
  }

  std::vector<ChanceOutcome> chance_outcomes(const State&) const {
    fail(Errc::kNotChanceNode, "RPSSL has no chance nodes");
  }

  int num_actions(const State& s) const {
    if (!node_kind(s).is_decision()) fail(Errc::kNotDecisionNode, "RPSSL state is terminal");
    return static_cast<int>(subset_.size());
  }

  Throw throw_of(ActionId a) const { return subset_.at(a); }

  State apply(const State& s, ActionId a) const {
    if (a < 0 || a >= num_actions(s)) fail(Errc::kIllegalAction, "throw index out of range");
    State next = s;
    next.choices.push_back(a);
    return next;
  }

  std::vector<double> utilities(const State& s) const {
    if (!node_kind(s).is_terminal()) fail(Errc::kNotTerminal, "both throws not yet made");
    const int u = payoff(throw_of(s.choices[0]), throw_of(s.choices[1]));
    return {static_cast<double>(u), static_cast<double>(-u)};
  }

  InfosetKey infoset_key(const State& s) const {
    return s.choices.empty() ? "p0" : "p1";
  }

  std::string history_key(const State& s) const {
    std::string k;
    for (int c : s.choices) k.push_back(static_cast<char>('0' + c));
    return k;
  }

 private:
  std::vector<Throw> subset_;
};

inline void validate_strategy(const MixedStrategy& s, const std::vector<Throw>& subset) {
  double total = 0.0;
  for (int i = 0; i < kNumThrows; ++i) {
    if (!(s[i] >= 0.0) || !std::isfinite(s[i])) fail(Errc::kInvalidStrategy, "negative or non-finite probability");
    const bool in_subset = std::find(subset.begin(), subset.end(), kAllThrows[i]) != subset.end();
    if (!in_subset && s[i] > 0.0) fail(Errc::kInvalidStrategy, "mass outside the restricted throws");
    total += s[i];
  }
  if (std::abs(total - 1.0) > 1e-9) fail(Errc::kInvalidStrategy, "probabilities do not sum to 1");
}

// Best-response gain against `s` in the game restricted to `subset`: the
// largest expected payoff any allowed pure throw earns against it. The game
// is symmetric and zero-sum with value 0, so this is 0 exactly at equilibrium.
inline double exploitability(const MixedStrategy& s, const std::vector<Throw>& subset) {
  validate_strategy(s, subset);
  double best = -2.0;
  for (Throw b : subset) {
    double v = 0.0;
    for (Throw a : kAllThrows) v += s[static_cast<int>(a)] * payoff(b, a);
    best = std::max(best, v);
  }
  return best;
}

inline double exploitability(const MixedStrategy& s) {
  return exploitability(s, std::vector<Throw>(kAllThrows.begin(), kAllThrows.end()));
}

}  // namespace lspo::rpssl
