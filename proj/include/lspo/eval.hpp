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

// Head-to-head evaluation between checkpoints and role-prediction scoring
// over replays.

#pragma once

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lspo/belief.hpp"
#include "lspo/werewolf/agent.hpp"
#include "lspo/werewolf/replay.hpp"

namespace lspo::eval {

using werewolf::Agent;
using werewolf::Game;
using werewolf::GameState;
using werewolf::Matchup;
using werewolf::Outcome;
using werewolf::Phase;
using werewolf::Replay;
using werewolf::Role;
using werewolf::Side;

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double lo = 0.0, hi = 0.0;
};

// Wilson score interval for `k` successes in `n` trials.
inline Interval wilson(int k, int n, double z = kZ95) {
  if (n <= 0) return {0.0, 1.0};
  const double p = static_cast<double>(k) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

inline bool disjoint(const Interval& a, const Interval& b) { return a.hi < b.lo || b.hi < a.lo; }

// Independent per-game stream from one run seed.
inline std::uint64_t game_seed(std::uint64_t seed, std::uint64_t game) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (game + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Runs fn(i) for i in [0, n) over `workers` threads.
template <class Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// One game with every seat sampling its agent's average policy.
inline Replay play_game(const Matchup& m, std::uint64_t seed) {
  const Game& g = m.game;
  std::mt19937_64 rng(seed);
  Replay r{.config = g.config(), .seed = seed, .wolf_checkpoint = m.wolf->id, .village_checkpoint = m.village->id};
  GameState s = g.initial_state();
  while (!g.node_kind(s).is_terminal()) {
    if (g.node_kind(s).is_chance()) {
      s = werewolf::record_move(g, s, sample_chance(g.chance_outcomes(s), rng), -1, r);
      continue;
    }
    const auto sigma = m.probs(s);
    const ActionId a = sample_index(sigma, rng);
    int utterance = -1;
    if (s.phase == Phase::kDayDiscussion) {
      utterance = werewolf::pick_utterance(m.speaker_catalog(s.roles[s.actor]), a, rng);
    }
    s = werewolf::record_move(g, s, a, utterance, r);
  }
  werewolf::finish_replay(s, r);
  return r;
}

struct MatchupSpec {
  std::shared_ptr<const Agent> wolf, village;
  int games = 100;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct HeadToHeadReport {
  std::string wolf_id, village_id;
  int games = 0;
  int wolf_wins = 0, village_wins = 0, draws = 0;
  Interval wolf_ci, village_ci, draw_ci;
  std::array<double, werewolf::kNumRoles> mean_utility{};  // per seat of that role
  std::vector<Replay> replays;

  double wolf_rate() const { return static_cast<double>(wolf_wins) / games; }
  double village_rate() const { return static_cast<double>(village_wins) / games; }
  double draw_rate() const { return static_cast<double>(draws) / games; }
};

inline HeadToHeadReport head_to_head(const MatchupSpec& spec) {
  if (spec.games < 1) fail(Errc::kParseError, "games must be >= 1");
  const Matchup m(spec.wolf, spec.village);
  HeadToHeadReport rep{.wolf_id = spec.wolf->id, .village_id = spec.village->id, .games = spec.games};
  rep.replays.resize(spec.games);
  parallel_for(spec.games, spec.workers, [&](int i) { rep.replays[i] = play_game(m, game_seed(spec.seed, i)); });
  std::array<double, werewolf::kNumRoles> util{};
  std::array<int, werewolf::kNumRoles> seats{};
  for (const auto& r : rep.replays) {
    switch (r.outcome) {
      case Outcome::kWerewolvesWin: ++rep.wolf_wins; break;
      case Outcome::kVillageWins: ++rep.village_wins; break;
      default: ++rep.draws; break;
    }
    for (std::size_t p = 0; p < r.assignment.size(); ++p) {
      util[werewolf::role_index(r.assignment[p])] += r.utilities[p];
      ++seats[werewolf::role_index(r.assignment[p])];
    }
  }
  for (int i = 0; i < werewolf::kNumRoles; ++i) rep.mean_utility[i] = seats[i] > 0 ? util[i] / seats[i] : 0.0;
  rep.wolf_ci = wilson(rep.wolf_wins, rep.games);
  rep.village_ci = wilson(rep.village_wins, rep.games);
  rep.draw_ci = wilson(rep.draws, rep.games);
  return rep;
}

inline std::string report_csv(const HeadToHeadReport& r) {
  std::ostringstream out;
  out << "wolf,village,games,outcome,count,rate,ci_lo,ci_hi\n";
  auto row = [&](const char* what, int k, const Interval& ci) {
    out << r.wolf_id << ',' << r.village_id << ',' << r.games << ',' << what << ',' << k << ','
        << static_cast<double>(k) / r.games << ',' << ci.lo << ',' << ci.hi << '\n';
  };
  row("werewolves_win", r.wolf_wins, r.wolf_ci);
  row("village_wins", r.village_wins, r.village_ci);
  row("draw", r.draws, r.draw_ci);
  return out.str();
}

inline std::string report_summary(const HeadToHeadReport& r) {
  std::ostringstream out;
  out.precision(3);
  out << "werewolves: " << r.wolf_id << "  village: " << r.village_id << "  games: " << r.games << '\n'
      << "  werewolves win " << r.wolf_rate() << " [" << r.wolf_ci.lo << ", " << r.wolf_ci.hi << "]\n"
      << "  village wins   " << r.village_rate() << " [" << r.village_ci.lo << ", " << r.village_ci.hi << "]\n"
      << "  draws          " << r.draw_rate() << " [" << r.draw_ci.lo << ", " << r.draw_ci.hi << "]\n"
      << "  mean utility:";
  for (Role role : werewolf::kAllRoles) out << ' ' << werewolf::role_name(role) << '=' << r.mean_utility[werewolf::role_index(role)];
  out << '\n';
  return out.str();
}

// Agent `a` against agent `b` in both seatings, `games` each. Both seatings
// use the same per-game seeds.
struct Comparison {
  HeadToHeadReport a_wolf, b_wolf;
  int games = 0, a_wins = 0, b_wins = 0, draws = 0;
  Interval a_ci, b_ci;

  bool a_better() const { return a_wins > b_wins && disjoint(a_ci, b_ci); }
};

inline Comparison compare(std::shared_ptr<const Agent> a, std::shared_ptr<const Agent> b, int games,
                          std::uint64_t seed, int workers = 1) {
  Comparison c;
  c.a_wolf = head_to_head({.wolf = a, .village = b, .games = games, .seed = seed, .workers = workers});
  c.b_wolf = head_to_head({.wolf = b, .village = a, .games = games, .seed = seed, .workers = workers});
  c.games = 2 * games;
  c.a_wins = c.a_wolf.wolf_wins + c.b_wolf.village_wins;
  c.b_wins = c.a_wolf.village_wins + c.b_wolf.wolf_wins;
  c.draws = c.a_wolf.draws + c.b_wolf.draws;
  c.a_ci = wilson(c.a_wins, c.games);
  c.b_ci = wilson(c.b_wins, c.games);
  return c;
}

// Role prediction scoring.

struct Tally {
  int correct = 0, total = 0;
  double accuracy() const { return total > 0 ? static_cast<double>(correct) / total : 0.0; }
  double std_error() const {
    if (total == 0) return 0.0;
    const double p = accuracy();
    return std::sqrt(p * (1.0 - p) / total);
  }
};

// Scores one prediction against the truth over the living seats other than
// the viewer, adding into `by_role[true role]`.
inline void score_prediction(const belief::Prediction& p, const std::vector<Role>& truth, PlayerId viewer,
                             const std::vector<std::uint8_t>& alive,
                             std::array<Tally, werewolf::kNumRoles>& by_role) {
  for (PlayerId q = 0; q < static_cast<PlayerId>(truth.size()); ++q) {
    if (q == viewer || !alive[q]) continue;
    auto& t = by_role[werewolf::role_index(truth[q])];
    ++t.total;
    if (p.argmax[q] == truth[q]) ++t.correct;
  }
}

struct PredictionCell {
  Tally pooled;                  // every (viewer, target) prediction counts once
  std::vector<double> per_game;  // mean accuracy within each game
  double game_mean() const {
    if (per_game.empty()) return 0.0;
    double s = 0.0;
    for (double x : per_game) s += x;
    return s / per_game.size();
  }
  double game_stderr() const {
    if (per_game.size() < 2) return 0.0;
    const double m = game_mean();
    double v = 0.0;
    for (double x : per_game) v += (x - m) * (x - m);
    return std::sqrt(v / (per_game.size() - 1) / per_game.size());
  }
};

struct PredictionReport {
  // [viewer side][target role]
  std::array<std::array<PredictionCell, werewolf::kNumRoles>, 2> cells;
  int predictions = 0;
  int fallbacks = 0;
};

// States at which each day's prediction is made: the first voting decision.
inline std::vector<std::size_t> pre_voting_points(const std::vector<GameState>& path) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i].phase == Phase::kDayVoting && path[i - 1].phase != Phase::kDayVoting) out.push_back(i);
  }
  return out;
}

template <Policy P>
PredictionReport prediction_report(const std::vector<Replay>& replays, const Game& game, const P& policy,
                                   std::size_t beam = belief::kDefaultBeam) {
  PredictionReport rep;
  for (const Replay& r : replays) {
    if (r.assignment.empty()) fail(Errc::kMissingPrivateInfo, "replay seed " + std::to_string(r.seed) + " has no deal");
    const auto path = werewolf::replay_states(game, r);
    const auto points = pre_voting_points(path);
    std::array<std::array<Tally, werewolf::kNumRoles>, 2> game_tally{};
    for (PlayerId viewer = 0; viewer < game.num_players(); ++viewer) {
      const int side = static_cast<int>(werewolf::side_of(r.assignment[viewer]));
      belief::BeliefTracker<P> tracker(game, policy, viewer, beam);
      for (std::size_t i : points) {
        const GameState& s = path[i];
        if (!s.is_alive(viewer)) break;
        tracker.observe(game.viewer_log(s, viewer));
        const auto b = tracker.belief();
        std::array<Tally, werewolf::kNumRoles> one{};
        score_prediction(belief::predict(b), r.assignment, viewer, s.alive, one);
        for (int role = 0; role < werewolf::kNumRoles; ++role) {
          rep.cells[side][role].pooled.correct += one[role].correct;
          rep.cells[side][role].pooled.total += one[role].total;
          game_tally[side][role].correct += one[role].correct;
          game_tally[side][role].total += one[role].total;
        }
        ++rep.predictions;
      }
      if (tracker.belief().fallback) ++rep.fallbacks;
    }
    for (int side = 0; side < 2; ++side) {
      for (int role = 0; role < werewolf::kNumRoles; ++role) {
        if (game_tally[side][role].total > 0) rep.cells[side][role].per_game.push_back(game_tally[side][role].accuracy());
      }
    }
  }
  return rep;
}

inline std::string prediction_csv(const PredictionReport& rep) {
  std::ostringstream out;
  out << "viewer_side,target_role,correct,total,accuracy,stderr,games,game_mean,game_stderr\n";
  for (int side = 0; side < 2; ++side) {
    for (Role role : werewolf::kAllRoles) {
      const auto& c = rep.cells[side][werewolf::role_index(role)];
      if (c.pooled.total == 0) continue;
      out << (side == 0 ? "werewolves" : "village") << ',' << werewolf::role_name(role) << ',' << c.pooled.correct
          << ',' << c.pooled.total << ',' << c.pooled.accuracy() << ',' << c.pooled.std_error() << ','
          << c.per_game.size() << ',' << c.game_mean() << ',' << c.game_stderr() << '\n';
    }
  }
  return out.str();
}

}  // namespace lspo::eval
