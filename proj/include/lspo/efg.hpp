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

// Extensive-form game interface shared by every game in the project.
//
// A game is a stateless rules object; states are immutable values and
// `apply` returns a fresh successor. Chance is explicit: chance nodes list
// their outcomes with probabilities rather than drawing randomness inside a
// transition, so solvers can either enumerate or sample them.

#pragma once

#include <concepts>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lspo/error.hpp"

namespace lspo {

using PlayerId = int;
using ActionId = int;

inline constexpr PlayerId kChancePlayer = -1;

struct NodeKind {
  enum class Tag { kChance, kDecision, kTerminal };
  Tag tag = Tag::kTerminal;
  PlayerId player = kChancePlayer;  // meaningful for kDecision only

  static NodeKind chance() { return {Tag::kChance, kChancePlayer}; }
  static NodeKind decision(PlayerId p) { return {Tag::kDecision, p}; }
  static NodeKind terminal() { return {Tag::kTerminal, kChancePlayer}; }

  bool is_chance() const { return tag == Tag::kChance; }
  bool is_decision() const { return tag == Tag::kDecision; }
  bool is_terminal() const { return tag == Tag::kTerminal; }

  friend bool operator==(const NodeKind&, const NodeKind&) = default;
};

struct ChanceOutcome {
  ActionId action;
  double probability;
};

// Opaque byte string naming one information set of the acting player.
using InfosetKey = std::string;

template <class G>
concept ExtensiveGame = requires(const G& g, const typename G::State& s,
                                 ActionId a) {
  { g.num_players() } -> std::convertible_to<int>;
  { g.initial_state() } -> std::same_as<typename G::State>;
  { g.node_kind(s) } -> std::same_as<NodeKind>;
  { g.chance_outcomes(s) } -> std::same_as<std::vector<ChanceOutcome>>;
  { g.num_actions(s) } -> std::convertible_to<int>;
  { g.apply(s, a) } -> std::same_as<typename G::State>;
  { g.utilities(s) } -> std::same_as<std::vector<double>>;
  { g.infoset_key(s) } -> std::same_as<InfosetKey>;
  { g.history_key(s) } -> std::same_as<std::string>;
};

// Portable [0,1) double from a 64-bit engine; std::uniform_real_distribution
// is not reproducible across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Index drawn from a discrete distribution; the last positive entry absorbs
// rounding slack.
inline int sample_index(std::span<const double> probs, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  int last = -1;
  for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  if (last < 0) fail(Errc::kInvalidStrategy, "no positive mass to sample");
  return last;
}

inline ActionId sample_chance(std::span<const ChanceOutcome> outcomes,
                              std::mt19937_64& rng) {
  std::vector<double> p;
  p.reserve(outcomes.size());
  for (const auto& o : outcomes) p.push_back(o.probability);
  return outcomes[sample_index(p, rng)].action;
}

// Counts every node of the tree below `s`, stopping once `cap` is exceeded.
template <ExtensiveGame G>
std::int64_t count_nodes(const G& game, const typename G::State& s,
                         std::int64_t cap) {
  std::int64_t n = 1;
  const NodeKind kind = game.node_kind(s);
  if (kind.is_terminal()) return n;
  if (kind.is_chance()) {
    for (const auto& o : game.chance_outcomes(s)) {
      n += count_nodes(game, game.apply(s, o.action), cap - n);
      if (n > cap) return n;
    }
    return n;
  }
  const int na = game.num_actions(s);
  for (ActionId a = 0; a < na; ++a) {
    n += count_nodes(game, game.apply(s, a), cap - n);
    if (n > cap) return n;
  }
  return n;
}

}  // namespace lspo
