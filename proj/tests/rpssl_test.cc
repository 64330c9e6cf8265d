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

#include "lspo/rpssl.hpp"

#include <random>

#include "gtest/gtest.h"
#include "lspo/best_response.hpp"
#include "lspo/cfr.hpp"

namespace lspo::rpssl {
namespace {

using enum Throw;

const std::vector<Throw> kFull(kAllThrows.begin(), kAllThrows.end());

// Independent check: best pure reply by scanning the payoff table.
double brute_force_br(const MixedStrategy& s, const std::vector<Throw>& allowed) {
  double best = -1e9;
  for (Throw b : allowed) {
    double v = 0.0;
    for (int a = 0; a < kNumThrows; ++a) v += s[a] * payoff(b, kAllThrows[a]);
    best = std::max(best, v);
  }
  return best;
}

MixedStrategy random_strategy(std::mt19937_64& rng) {
  MixedStrategy s{};
  double total = 0.0;
  for (double& p : s) {
    p = uniform01(rng) + 1e-3;
    total += p;
  }
  for (double& p : s) p /= total;
  return s;
}

TEST(RpsslPayoff, Examples) {
  EXPECT_EQ(payoff(kRock, kRock), 0);
  EXPECT_EQ(payoff(kSpock, kRock), 1);
  EXPECT_EQ(payoff(kLizard, kRock), -1);
}

TEST(RpsslPayoff, ZeroSumAndTournament) {
  for (Throw a : kAllThrows) {
    int wins = 0, losses = 0;
    for (Throw b : kAllThrows) {
      EXPECT_EQ(payoff(a, b) + payoff(b, a), 0);
      wins += payoff(a, b) == 1;
      losses += payoff(a, b) == -1;
    }
    EXPECT_EQ(wins, 2) << throw_name(a);
    EXPECT_EQ(losses, 2) << throw_name(a);
  }
}

TEST(RpsslGame, NodeKinds) {
  Game g;
  auto s = g.initial_state();
  EXPECT_EQ(g.node_kind(s), NodeKind::decision(0));
  s = g.apply(s, 0);
  EXPECT_EQ(g.node_kind(s), NodeKind::decision(1));
  EXPECT_EQ(g.infoset_key(s), "p1");
  s = g.apply(s, 2);
  EXPECT_TRUE(g.node_kind(s).is_terminal());
  EXPECT_EQ(g.utilities(s), (std::vector<double>{1.0, -1.0}));
  EXPECT_THROW(g.chance_outcomes(s), Error);
}

TEST(RpsslGame, PlayerOneCannotSeePlayerZero) {
  Game g;
  const auto root = g.initial_state();
  for (int a = 0; a < kNumThrows; ++a) {
    EXPECT_EQ(g.infoset_key(g.apply(root, a)), "p1");
  }
}

TEST(RpsslRestrict, Subsets) {
  const Game rps = Game::restrict({kRock, kPaper, kScissors});
  EXPECT_EQ(rps.num_actions(rps.initial_state()), 3);
  EXPECT_FALSE(rps.is_full());
  EXPECT_TRUE(Game::restrict(kFull).is_full());
  const Game rock = Game::restrict({kRock});
  EXPECT_EQ(rock.num_actions(rock.initial_state()), 1);
  EXPECT_DOUBLE_EQ(exploitability(uniform_over({kRock}), {kRock}), 0.0);
  try {
    Game::restrict({});
    FAIL() << "expected EmptySubset";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmptySubset);
  }
}

TEST(RpsslExploitability, Examples) {
  EXPECT_NEAR(exploitability(uniform_over(kFull)), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(exploitability(MixedStrategy{1, 0, 0, 0, 0}), 1.0);
  const std::vector<Throw> rps = {kRock, kPaper, kScissors};
  EXPECT_NEAR(exploitability(uniform_over(rps), rps), 0.0, 1e-12);
  // The RPS equilibrium leaks a third of a point once Spock is available.
  EXPECT_NEAR(exploitability(uniform_over(rps)), 1.0 / 3.0, 1e-12);
}

TEST(RpsslExploitability, RejectsInvalid) {
  EXPECT_THROW(exploitability(MixedStrategy{0.5, 0.5, 0.5, 0, 0}), Error);
  EXPECT_THROW(exploitability(MixedStrategy{-0.2, 0.6, 0.6, 0, 0}), Error);
  EXPECT_THROW(exploitability(MixedStrategy{0, 0, 0, 0.5, 0.5}, {kRock, kPaper}), Error);
}

TEST(RpsslExploitability, MatchesBruteForceAndIsNonNegative) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = random_strategy(rng);
    const double e = exploitability(s);
    EXPECT_NEAR(e, brute_force_br(s, kFull), 1e-12);
    EXPECT_GE(e, -1e-12);
  }
}

TEST(RpsslExploitability, AgreesWithTreeBestResponse) {
  std::mt19937_64 rng(11);
  const Game g;
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_strategy(rng);
    TabularPolicy pol;
    pol.rows["p0"] = std::vector<double>(s.begin(), s.end());
    pol.rows["p1"] = std::vector<double>(s.begin(), s.end());
    const auto br1 = best_response(g, pol, 1);
    EXPECT_NEAR(br1.value, exploitability(s), 1e-12);
  }
}

TEST(RpsslBestResponse, VersusPureRock) {
  const Game g;
  TabularPolicy pol;
  pol.rows["p0"] = {1, 0, 0, 0, 0};
  pol.rows["p1"] = {1, 0, 0, 0, 0};
  const auto br = best_response(g, pol, 1);
  EXPECT_DOUBLE_EQ(br.value, 1.0);
  const Throw reply = g.throw_of(br.actions.at("p1"));
  EXPECT_TRUE(reply == kPaper || reply == kSpock);

  const auto profile = exploitability_profile(g, pol);
  EXPECT_DOUBLE_EQ(profile.aggregate, 1.0);
}

TEST(RpsslBestResponse, VersusUniform) {
  const Game g;
  const auto profile = exploitability_profile(g, UniformPolicy{});
  EXPECT_NEAR(profile.aggregate, 0.0, 1e-9);
  for (double gain : profile.gains) EXPECT_GE(gain, -1e-9);
  EXPECT_NEAR(best_response(g, UniformPolicy{}, 0).value, 0.0, 1e-12);
}

TEST(RpsslCfr, SymmetricStartStaysUniform) {
  CfrSolver solver(Game{}, {.iterations = 1, .traversal = Traversal::kFull});
  solver.solve();
  for (const auto* key : {"p0", "p1"}) {
    const auto sigma = solver.tables().regrets.probs(key, 5);
    for (double p : sigma) EXPECT_DOUBLE_EQ(p, 0.2);
    const auto* regrets = solver.tables().regrets.find(key);
    ASSERT_NE(regrets, nullptr);
    for (double r : *regrets) EXPECT_DOUBLE_EQ(r, 0.0);
  }
}

TEST(RpsslCfr, RestrictedRpsConvergesToThirds) {
  const Game g = Game::restrict({kRock, kPaper, kScissors});
  CfrSolver solver(g, {.iterations = 10000, .traversal = Traversal::kFull});
  solver.solve();
  const auto avg = solver.tables().average.probs("p0", 3);
  double l1 = 0.0;
  for (double p : avg) l1 += std::abs(p - 1.0 / 3.0);
  EXPECT_LE(l1, 0.02);
}

// A biased start exercises actual regret dynamics: seed the regrets of both
// seats toward Rock and check the average strategy still reaches equilibrium
// with sublinear positive regret.
TEST(RpsslCfr, BiasedStartConverges) {
  CfrSolver solver(Game{}, {.iterations = 10000, .traversal = Traversal::kFull});
  SolverTables init;
  init.regrets.row("p0", 5) = {5, 1, 1, 0, 0};
  init.regrets.row("p1", 5) = {5, 1, 1, 0, 0};
  solver.restore(init, 0);
  std::vector<double> ratio;
  solver.solve([&](int t, const SolverTables& tables) {
    if (t % 1000 == 0) {
      double max_pos = 0.0;
      for (const auto& [k, row] : tables.regrets.rows()) {
        for (double r : row) max_pos = std::max(max_pos, r);
      }
      ratio.push_back(max_pos / t);
    }
  });
  for (std::size_t i = 1; i < ratio.size(); ++i) EXPECT_LE(ratio[i], ratio[i - 1] + 1e-12);
  const auto profile = exploitability_profile(Game{}, solver.tables().average);
  EXPECT_LE(profile.aggregate, 0.01);
}

}  // namespace
}  // namespace lspo::rpssl
