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

#include "lspo/kuhn.hpp"

#include <cstdio>
#include <filesystem>
#include <map>

#include "gtest/gtest.h"
#include "lspo/best_response.hpp"
#include "lspo/cfr.hpp"

namespace lspo {
namespace {

TEST(RegretMatching, Examples) {
  const std::vector<double> a = {2, -1, 3};
  auto s = regret_matching(a);
  EXPECT_DOUBLE_EQ(s[0], 0.4);
  EXPECT_DOUBLE_EQ(s[1], 0.0);
  EXPECT_DOUBLE_EQ(s[2], 0.6);
  const std::vector<double> b = {-5, -2};
  EXPECT_EQ(regret_matching(b), (std::vector<double>{0.5, 0.5}));
  const std::vector<double> c = {1, 1, 1, 1};
  EXPECT_EQ(regret_matching(c), (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  EXPECT_THROW(regret_matching(std::vector<double>{}), Error);
}

TEST(RegretMatching, AlwaysADistribution) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> r(1 + rng() % 8);
    for (double& x : r) x = (uniform01(rng) - 0.5) * 100.0;
    const auto s = regret_matching(r);
    double total = 0.0;
    for (double p : s) {
      EXPECT_GE(p, 0.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(KuhnGame, ChanceSumsToOne) {
  kuhn::Game g;
  double total = 0.0;
  for (const auto& o : g.chance_outcomes(g.initial_state())) total += o.probability;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_THROW(g.utilities(g.initial_state()), Error);
}

// Oracle: enumerate every pure strategy of the responder (one action per
// infoset, 2^6 of them) and evaluate each exactly against the fixed opponent.
double brute_force_br_value(const kuhn::Game& g, PlayerId responder) {
  // Collect responder infosets.
  std::vector<InfosetKey> keys;
  std::function<void(const kuhn::Game::State&)> walk = [&](const kuhn::Game::State& s) {
    const auto kind = g.node_kind(s);
    if (kind.is_terminal()) return;
    if (kind.is_chance()) {
      for (const auto& o : g.chance_outcomes(s)) walk(g.apply(s, o.action));
      return;
    }
    if (kind.player == responder) {
      const auto k = g.infoset_key(s);
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
    for (int a = 0; a < 2; ++a) walk(g.apply(s, a));
  };
  walk(g.initial_state());
  double best = -1e9;
  for (unsigned mask = 0; mask < (1u << keys.size()); ++mask) {
    TabularPolicy pol;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      pol.rows[keys[i]] = (mask >> i) & 1 ? std::vector<double>{0, 1} : std::vector<double>{1, 0};
    }
    best = std::max(best, expected_values(g, pol)[responder]);
  }
  return best;
}

TEST(KuhnBestResponse, MatchesEnumerationAgainstUniform) {
  kuhn::Game g;
  for (PlayerId p = 0; p < 2; ++p) {
    EXPECT_NEAR(best_response(g, UniformPolicy{}, p).value, brute_force_br_value(g, p), 1e-12);
  }
}

TEST(KuhnBestResponse, GuardsNodeCap) {
  kuhn::Game g;
  try {
    best_response(g, UniformPolicy{}, 0, 10);
    FAIL() << "expected GameTooLarge";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kGameTooLarge);
  }
}

TEST(KuhnCfr, FullCfrReachesGameValue) {
  CfrSolver solver(kuhn::Game{}, {.iterations = 2000, .traversal = Traversal::kFull});
  solver.solve();
  const auto v = expected_values(kuhn::Game{}, solver.tables().average);
  EXPECT_NEAR(v[0], -1.0 / 18.0, 5e-3);
  EXPECT_LT(exploitability_profile(kuhn::Game{}, solver.tables().average).aggregate, 5e-3);
}

TEST(KuhnCfr, DeterministicGivenSeed) {
  SolverConfig cfg{.iterations = 300, .seed = 42, .traversal = Traversal::kExternalSampling};
  CfrSolver a(kuhn::Game{}, cfg);
  CfrSolver b(kuhn::Game{}, cfg);
  a.solve();
  b.solve();
  EXPECT_EQ(a.tables().regrets, b.tables().regrets);
  EXPECT_EQ(a.tables().average, b.tables().average);
}

TEST(KuhnCfr, PlusVariantNeverStoresNegativeRegret) {
  CfrSolver solver(kuhn::Game{}, {.iterations = 500, .seed = 1,
                                  .traversal = Traversal::kExternalSampling,
                                  .plus_variant = true});
  solver.solve();
  for (const auto& [k, row] : solver.tables().regrets.rows()) {
    for (double r : row) EXPECT_GE(r, 0.0);
  }
}

TEST(KuhnCfr, SingleIterationReadsUniformWhereUnvisited) {
  CfrSolver solver(kuhn::Game{}, {.iterations = 1, .seed = 5});
  solver.solve();
  EXPECT_EQ(solver.iterations_done(), 1);
  EXPECT_EQ(solver.tables().average.probs("never-seen", 2), (std::vector<double>{0.5, 0.5}));
  for (const auto& [k, row] : solver.tables().average.rows()) {
    const auto p = solver.tables().average.probs(k, 2);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-9);
  }
}

TEST(KuhnCheckpoint, RoundTripResumesExactly) {
  SolverConfig cfg{.iterations = 200, .seed = 9};
  CfrSolver straight(kuhn::Game{}, cfg);
  straight.solve();

  // Identical RNG stream is needed for resumption to be bit-exact, so compare
  // serialization fidelity rather than resumed sampling.
  Checkpoint c{.game = "kuhn", .config = cfg, .iterations_done = straight.iterations_done(),
               .tables = straight.tables()};
  const auto path = (std::filesystem::temp_directory_path() / "kuhn_ckpt.json").string();
  save_checkpoint(c, path);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.iterations_done, 200);
  EXPECT_EQ(back.tables.regrets, straight.tables().regrets);
  EXPECT_EQ(back.tables.average, straight.tables().average);
  EXPECT_EQ(back.config.seed, 9u);
  std::filesystem::remove(path);
}

TEST(DepthLimitedValue, InactiveLimitEqualsExactValue) {
  kuhn::Game g;
  CfrSolver solver(g, {.iterations = 50, .traversal = Traversal::kFull});
  solver.solve();
  std::mt19937_64 rng(1);
  const auto dlv = depth_limited_value(g, g.initial_state(), solver.tables().regrets, 10,
                                       solver.tables().average, rng);
  const auto exact = expected_values(g, solver.tables().regrets);
  EXPECT_NEAR(dlv[0], exact[0], 1e-12);
  EXPECT_NEAR(dlv[1], exact[1], 1e-12);
}

TEST(DepthLimitedValue, TerminalAtDepthZero) {
  kuhn::Game g;
  auto s = g.apply(g.initial_state(), 1);
  s = g.apply(g.apply(s, 0), 0);
  std::mt19937_64 rng(1);
  EXPECT_EQ(depth_limited_value(g, s, RegretTable{}, 0, UniformPolicy{}, rng), g.utilities(s));
}

}  // namespace
}  // namespace lspo
