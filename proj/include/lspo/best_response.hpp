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

// Exact best responses and exploitability for games small enough to walk.

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lspo/cfr.hpp"
#include "lspo/efg.hpp"

namespace lspo {

inline constexpr std::int64_t kDefaultNodeCap = 20'000'000;

// Expected utility of every player when all of them follow `policy`.
template <ExtensiveGame G, Policy P>
std::vector<double> expected_values(const G& game, const typename G::State& s, const P& policy) {
  const NodeKind kind = game.node_kind(s);
  if (kind.is_terminal()) return game.utilities(s);
  std::vector<double> v(game.num_players(), 0.0);
  auto add = [&](const typename G::State& child, double w) {
    const auto cv = expected_values(game, child, policy);
    for (std::size_t p = 0; p < v.size(); ++p) v[p] += w * cv[p];
  };
  if (kind.is_chance()) {
    for (const auto& o : game.chance_outcomes(s)) add(game.apply(s, o.action), o.probability);
    return v;
  }
  const int n = game.num_actions(s);
  const auto sigma = policy.probs(game.infoset_key(s), n);
  for (ActionId a = 0; a < n; ++a) {
    if (sigma[a] > 0.0) add(game.apply(s, a), sigma[a]);
  }
  return v;
}

template <ExtensiveGame G, Policy P>
std::vector<double> expected_values(const G& game, const P& policy) {
  return expected_values(game, game.initial_state(), policy);
}

struct BestResponseResult {
  double value = 0.0;
  std::unordered_map<InfosetKey, ActionId> actions;  // responder's pure policy
};

// Best response of `responder` with every other seat fixed to `policy`.
//
// First pass records, for each responder information set, its histories with
// the reach probability contributed by chance and the other players. The
// response at an information set is then the action maximizing the
// reach-weighted sum of child values, where child values themselves use the
// response at deeper information sets (well-defined under perfect recall).
template <ExtensiveGame G, Policy P>
class BestResponse {
 public:
  using State = typename G::State;

  BestResponse(const G& game, const P& policy, PlayerId responder,
               std::int64_t node_cap = kDefaultNodeCap)
      : game_(game), policy_(policy), responder_(responder), node_cap_(node_cap) {
    collect(game_.initial_state(), 1.0);
  }

  BestResponseResult compute() {
    BestResponseResult r;
    r.value = value(game_.initial_state());
    for (const auto& [key, hist] : infosets_) r.actions[key] = best_action(key);
    return r;
  }

 private:
  void collect(const State& s, double reach) {
    if (++nodes_ > node_cap_) {
      fail(Errc::kGameTooLarge, "best response exceeds node cap of " + std::to_string(node_cap_));
    }
    const NodeKind kind = game_.node_kind(s);
    if (kind.is_terminal()) return;
    if (kind.is_chance()) {
      for (const auto& o : game_.chance_outcomes(s)) collect(game_.apply(s, o.action), reach * o.probability);
      return;
    }
    const int n = game_.num_actions(s);
    const InfosetKey key = game_.infoset_key(s);
    if (kind.player == responder_) {
      infosets_[key].push_back({s, reach});
      for (ActionId a = 0; a < n; ++a) collect(game_.apply(s, a), reach);
      return;
    }
    const auto sigma = policy_.probs(key, n);
    for (ActionId a = 0; a < n; ++a) {
      if (sigma[a] > 0.0) collect(game_.apply(s, a), reach * sigma[a]);
    }
  }

  ActionId best_action(const InfosetKey& key) {
    if (auto it = chosen_.find(key); it != chosen_.end()) return it->second;
    auto hit = infosets_.find(key);
    ActionId best = 0;
    if (hit != infosets_.end() && !hit->second.empty()) {
      const int n = game_.num_actions(hit->second.front().first);
      std::vector<double> q(n, 0.0);
      for (const auto& [s, w] : hit->second) {
        for (ActionId a = 0; a < n; ++a) q[a] += w * value(game_.apply(s, a));
      }
      for (ActionId a = 1; a < n; ++a) {
        if (q[a] > q[best] + 1e-12) best = a;
      }
    }
    chosen_[key] = best;
    return best;
  }

  double value(const State& s) {
    const std::string hk = game_.history_key(s);
    if (auto it = values_.find(hk); it != values_.end()) return it->second;
    double v = 0.0;
    const NodeKind kind = game_.node_kind(s);
    if (kind.is_terminal()) {
      v = game_.utilities(s)[responder_];
    } else if (kind.is_chance()) {
      for (const auto& o : game_.chance_outcomes(s)) v += o.probability * value(game_.apply(s, o.action));
    } else if (kind.player == responder_) {
      v = value(game_.apply(s, best_action(game_.infoset_key(s))));
    } else {
      const int n = game_.num_actions(s);
      const auto sigma = policy_.probs(game_.infoset_key(s), n);
      for (ActionId a = 0; a < n; ++a) {
        if (sigma[a] > 0.0) v += sigma[a] * value(game_.apply(s, a));
      }
    }
    values_.emplace(hk, v);
    return v;
  }

  const G& game_;
  const P& policy_;
  PlayerId responder_;
  std::int64_t node_cap_;
  std::int64_t nodes_ = 0;
  std::unordered_map<InfosetKey, std::vector<std::pair<State, double>>> infosets_;
  std::unordered_map<InfosetKey, ActionId> chosen_;
  std::unordered_map<std::string, double> values_;
};

template <ExtensiveGame G, Policy P>
BestResponseResult best_response(const G& game, const P& policy, PlayerId responder,
                                 std::int64_t node_cap = kDefaultNodeCap) {
  return BestResponse<G, P>(game, policy, responder, node_cap).compute();
}

struct ExploitabilityProfile {
  std::vector<double> policy_values;  // value of each seat under the profile
  std::vector<double> br_values;      // best-response value of each seat
  std::vector<double> gains;          // br_values - policy_values
  double aggregate = 0.0;             // mean gain
};

template <ExtensiveGame G, Policy P>
ExploitabilityProfile exploitability_profile(const G& game, const P& policy,
                                             std::int64_t node_cap = kDefaultNodeCap) {
  ExploitabilityProfile e;
  e.policy_values = expected_values(game, policy);
  const int n = game.num_players();
  for (PlayerId p = 0; p < n; ++p) {
    e.br_values.push_back(best_response(game, policy, p, node_cap).value);
    e.gains.push_back(e.br_values.back() - e.policy_values[p]);
    e.aggregate += e.gains.back();
  }
  e.aggregate /= n;
  return e;
}

}  // namespace lspo
