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

// Two-player Kuhn poker, bundled as a solver self-test. Its equilibrium value
// for the first player is -1/18, which makes it the standard smoke test for
// any CFR implementation.

#pragma once

#include <string>
#include <vector>

#include "lspo/efg.hpp"

namespace lspo::kuhn {

class Game {
 public:
  // Actions: 0 = pass/check/fold, 1 = bet/call.
  struct State {
    int deal = -1;  // index into kDeals, -1 before the chance node resolves
    std::string moves;
  };

  int num_players() const { return 2; }
  State initial_state() const { return {}; }

  NodeKind node_kind(const State& s) const {
    if (s.deal < 0) return NodeKind::chance();
    if (is_terminal(s.moves)) return NodeKind::terminal();
    return NodeKind::decision(static_cast<PlayerId>(s.moves.size() % 2));
  }

  std::vector<ChanceOutcome> chance_outcomes(const State& s) const {
    if (!node_kind(s).is_chance()) fail(Errc::kNotChanceNode, "cards already dealt");
    std::vector<ChanceOutcome> out;
    for (int i = 0; i < 6; ++i) out.push_back({i, 1.0 / 6.0});
    return out;
  }

  int num_actions(const State& s) const {
    if (!node_kind(s).is_decision()) fail(Errc::kNotDecisionNode, "kuhn node is not a decision");
    return 2;
  }

  State apply(const State& s, ActionId a) const {
    State next = s;
    if (s.deal < 0) {
      if (a < 0 || a >= 6) fail(Errc::kIllegalAction, "deal index out of range");
      next.deal = a;
      return next;
    }
    if (a < 0 || a > 1) fail(Errc::kIllegalAction, "kuhn action must be 0 or 1");
    next.moves.push_back(a == 0 ? 'p' : 'b');
    return next;
  }

  std::vector<double> utilities(const State& s) const {
    if (!node_kind(s).is_terminal()) fail(Errc::kNotTerminal, "kuhn hand not finished");
    const int c0 = kDeals[s.deal][0];
    const int c1 = kDeals[s.deal][1];
    const double showdown = c0 > c1 ? 1.0 : -1.0;
    double u0 = 0.0;
    if (s.moves == "pp") u0 = showdown;
    else if (s.moves == "bb" || s.moves == "pbb") u0 = 2.0 * showdown;
    else if (s.moves == "bp") u0 = 1.0;
    else if (s.moves == "pbp") u0 = -1.0;
    return {u0, -u0};
  }

  InfosetKey infoset_key(const State& s) const {
    const int player = static_cast<int>(s.moves.size() % 2);
    return std::string(1, static_cast<char>('0' + kDeals[s.deal][player])) + s.moves;
  }

  std::string history_key(const State& s) const {
    return std::to_string(s.deal) + s.moves;
  }

 private:
  static bool is_terminal(const std::string& m) {
    return m == "pp" || m == "bb" || m == "bp" || m == "pbp" || m == "pbb";
  }

  static constexpr int kDeals[6][2] = {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}};
};

}  // namespace lspo::kuhn
