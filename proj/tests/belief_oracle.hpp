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

// Brute-force posterior oracle: one walk over the whole game tree, pruned to
// histories whose viewer log is a prefix of the final observed log. Every
// node where the log first takes the value logs[t] adds its reach to bucket
// t of its deal.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "lspo/cfr.hpp"
#include "lspo/werewolf/game.hpp"

namespace lspo::testing_oracle {

template <Policy P>
class PosteriorEnumerator {
 public:
  PosteriorEnumerator(const werewolf::Game& g, const P& policy, PlayerId viewer, const std::vector<std::string>& logs)
      : g_(g), policy_(policy), viewer_(viewer), logs_(logs), mass_(logs.size()) {
    for (std::size_t t = 0; t < logs.size(); ++t) index_[logs[t]] = static_cast<int>(t);
  }

  std::vector<std::map<int, double>> run() {
    walk(g_.initial_state(), 1.0, "");
    for (auto& bucket : mass_) {
      double z = 0.0;
      for (const auto& [deal, m] : bucket) z += m;
      for (auto& [deal, m] : bucket) m /= z;
    }
    return mass_;
  }

 private:
  void walk(const werewolf::GameState& s, double reach, const std::string& parent_log) {
    const std::string log = g_.viewer_log(s, viewer_);
    const std::string& last = logs_.back();
    if (log.size() > last.size() || last.compare(0, log.size(), log) != 0) return;
    if (log != parent_log) {
      if (auto it = index_.find(log); it != index_.end()) {
        mass_[it->second][g_.assignment_index(s.roles)] += reach;
      }
    }
    const NodeKind kind = g_.node_kind(s);
    if (kind.is_terminal()) return;
    if (kind.is_chance()) {
      for (const auto& o : g_.chance_outcomes(s)) walk(g_.apply(s, o.action), reach * o.probability, log);
      return;
    }
    const int n = g_.num_actions(s);
    if (kind.player == viewer_) {
      for (ActionId a = 0; a < n; ++a) walk(g_.apply(s, a), reach, log);
      return;
    }
    const auto sigma = policy_.probs(g_.infoset_key(s), n);
    for (ActionId a = 0; a < n; ++a) {
      if (sigma[a] > 0.0) walk(g_.apply(s, a), reach * sigma[a], log);
    }
  }

  const werewolf::Game& g_;
  const P& policy_;
  PlayerId viewer_;
  const std::vector<std::string>& logs_;
  std::map<std::string, int> index_;
  std::vector<std::map<int, double>> mass_;
};

template <Policy P>
std::vector<std::map<int, double>> enumerate_posteriors(const werewolf::Game& g, const P& policy, PlayerId viewer,
                                                        const std::vector<std::string>& logs) {
  return PosteriorEnumerator<P>(g, policy, viewer, logs).run();
}

}  // namespace lspo::testing_oracle
