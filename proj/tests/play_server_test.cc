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

#include "lspo/play_server.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <random>
#include <regex>
#include <set>
#include <thread>

#include "gtest/gtest.h"
#include "test_agents.hpp"

namespace lspo::play {
namespace {

using werewolf::GameConfig;
using json = nlohmann::json;
namespace fs = std::filesystem;

std::shared_ptr<const Agent> seven_agent() {
  static const auto a = testing_agents::synth_agent(GameConfig::seven_player(), 1, 4);
  return a;
}

SessionManager make_manager(const std::string& store = "") {
  return SessionManager({{"default", "seven"}}, store, [](const std::string&) { return seven_agent(); });
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::kIo;
}

int token_counter = 0;
std::string fresh_token() { return "t" + std::to_string(++token_counter); }

// Plays random menu choices until the game ends; returns every view seen.
std::vector<json> play_out(SessionManager& m, json v, std::mt19937_64& rng) {
  std::vector<json> views{v};
  for (int steps = 0; v["status"] == "awaiting_human"; ++steps) {
    EXPECT_LT(steps, 200);
    const auto& menu = v["menu"];
    const int pick = std::uniform_int_distribution<int>(0, static_cast<int>(menu.size()) - 1)(rng);
    json body = {{"action", pick}, {"token", fresh_token()}};
    if (menu[pick]["kind"] == "speak" && !menu[pick]["exemplars"].empty()) {
      body["utterance"] = std::uniform_int_distribution<int>(0, static_cast<int>(menu[pick]["exemplars"].size()) - 1)(rng);
    }
    v = m.submit(v["session_id"], body);
    views.push_back(v);
  }
  EXPECT_EQ(v["status"], "finished");
  return views;
}

TEST(PlayServer, VillagerFirstActsByDay) {
  auto m = make_manager();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto v = m.create({.seat = 2, .role = Role::kVillager, .seed = seed});
    EXPECT_EQ(v["role"], "Villager");
    EXPECT_EQ(v["seat"], 2);
    if (v["status"] == "finished") continue;
    ASSERT_EQ(v["status"], "awaiting_human");
    EXPECT_EQ(v["round"], 1);
    EXPECT_TRUE(v["phase"] == "day_discussion" || v["phase"] == "day_voting") << v["phase"];
  }
}

TEST(PlayServer, SeerFirstActsAtNightOne) {
  auto m = make_manager();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto v = m.create({.seat = 5, .role = Role::kSeer, .seed = seed});
    ASSERT_EQ(v["status"], "awaiting_human");
    EXPECT_EQ(v["phase"], "night");
    EXPECT_EQ(v["round"], 1);
    for (const auto& item : v["menu"]) {
      EXPECT_EQ(item["kind"], "see");
      EXPECT_NE(item["target"], 5);
    }
    EXPECT_EQ(v["menu"].size(), 6u);
  }
}

TEST(PlayServer, CreateErrors) {
  auto m = make_manager();
  EXPECT_EQ(code_of([&] { m.create({.seat = 9}); }), Errc::kBadSeat);
  EXPECT_EQ(code_of([&] { m.create({.seat = -1}); }), Errc::kBadSeat);
  EXPECT_EQ(code_of([&] { m.create({.checkpoint = "nope"}); }), Errc::kIncompatibleCheckpoints);
  EXPECT_EQ(code_of([&] { m.view("0123456789abcdef0123456789abcdef"); }), Errc::kUnknownSession);
  EXPECT_EQ(code_of([&] { m.submit("zzz", {{"action", 0}, {"token", "x"}}); }), Errc::kUnknownSession);
}

TEST(PlayServer, SessionIdsAre128BitHex) {
  auto m = make_manager();
  std::set<std::string> ids;
  for (int i = 0; i < 50; ++i) {
    const std::string id = m.create({.seed = static_cast<std::uint64_t>(i)})["session_id"];
    EXPECT_TRUE(std::regex_match(id, std::regex("[0-9a-f]{32}"))) << id;
    ids.insert(id);
  }
  EXPECT_EQ(ids.size(), 50u);
}

TEST(PlayServer, AnnouncementNamesTheVictim) {
  auto m = make_manager();
  bool seen = false;
  for (std::uint64_t seed = 0; seed < 30 && !seen; ++seed) {
    const auto v = m.create({.seat = 0, .role = Role::kVillager, .seed = seed});
    for (const auto& e : v["log"]) {
      if (e["type"] != "announcement" || e["killed"].is_null()) continue;
      const std::string text = "player_" + std::to_string(e["killed"].get<int>()) + " was killed last night";
      EXPECT_EQ(e["text"], text);
      EXPECT_NE(v["observation"].get<std::string>().find(text), std::string::npos);
      EXPECT_EQ(std::count(v["alive"].begin(), v["alive"].end(), e["killed"]), 0);
      seen = true;
    }
  }
  EXPECT_TRUE(seen);
}

TEST(PlayServer, FinishedSessionRevealsRoles) {
  auto m = make_manager();
  std::mt19937_64 rng(3);
  const auto views = play_out(m, m.create({.seat = 1, .seed = 8}), rng);
  const auto& end = views.back();
  ASSERT_EQ(end["status"], "finished");
  EXPECT_EQ(end["phase"], "game_over");
  ASSERT_EQ(end["reveal"].size(), 7u);
  EXPECT_EQ(end["reveal"][1], end["role"]);
  EXPECT_EQ(std::count(end["reveal"].begin(), end["reveal"].end(), "Werewolf"), 2);
  EXPECT_EQ(end["utilities"].size(), 7u);
  EXPECT_TRUE(end["outcome"] == "werewolves" || end["outcome"] == "village" || end["outcome"] == "draw");
  EXPECT_FALSE(end.contains("menu"));
  for (std::size_t i = 0; i + 1 < views.size(); ++i) EXPECT_FALSE(views[i].contains("reveal"));
  // Finished sessions take no more actions.
  EXPECT_EQ(code_of([&] { m.submit(end["session_id"], {{"action", 0}, {"token", fresh_token()}}); }),
            Errc::kNotYourTurn);
}

TEST(PlayServer, StepPaceShowsAwaitingEngineWithoutMenu) {
  auto m = make_manager();
  auto v = m.create({.seat = 0, .role = Role::kVillager, .seed = 2, .step = true});
  EXPECT_EQ(v["status"], "awaiting_engine");
  EXPECT_FALSE(v.contains("menu"));
  EXPECT_EQ(code_of([&] { m.submit(v["session_id"], {{"action", 0}, {"token", fresh_token()}}); }),
            Errc::kNotYourTurn);
  int polls = 0;
  int version = v["state_version"];
  while (v["status"] == "awaiting_engine") {
    v = *m.view(v["session_id"]);
    EXPECT_EQ(v["state_version"], version + 1);
    version = v["state_version"];
    if (v["status"] == "awaiting_engine") {
      EXPECT_FALSE(v.contains("menu"));
    }
    ASSERT_LT(++polls, 100);
  }
  EXPECT_GT(polls, 1);
  if (v["status"] == "awaiting_human") {
    EXPECT_TRUE(v.contains("menu"));
  }
}

// Drives a session to the human's first vote.
json to_first_vote(SessionManager& m, std::uint64_t seed, std::mt19937_64& rng) {
  auto v = m.create({.seat = 3, .role = Role::kVillager, .seed = seed});
  while (v["status"] == "awaiting_human" && v["phase"] != "day_voting") {
    v = m.submit(v["session_id"], {{"action", static_cast<int>(rng() % v["menu"].size())}, {"token", fresh_token()}});
  }
  return v;
}

TEST(PlayServer, VoteForDeadPlayerIsIllegal) {
  auto m = make_manager();
  std::mt19937_64 rng(1);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto v = to_first_vote(m, seed, rng);
    if (v["status"] != "awaiting_human") continue;
    for (int p = 0; p < 7; ++p) {
      if (std::count(v["alive"].begin(), v["alive"].end(), p) > 0) continue;
      EXPECT_EQ(code_of([&] { m.submit(v["session_id"], {{"kind", "vote"}, {"target", p}, {"token", fresh_token()}}); }),
                Errc::kIllegalAction);
      ++checked;
    }
    EXPECT_EQ(code_of([&] { m.submit(v["session_id"], {{"action", 99}, {"token", fresh_token()}}); }),
              Errc::kIllegalAction);
    // Failed submissions leave the session unchanged.
    EXPECT_EQ(m.view(v["session_id"])->dump(), v.dump());
  }
  EXPECT_GT(checked, 0);
}

TEST(PlayServer, AbstainIsRecorded) {
  auto m = make_manager();
  std::mt19937_64 rng(2);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto v = to_first_vote(m, seed, rng);
    if (v["status"] != "awaiting_human") continue;
    const auto& menu = v["menu"];
    const auto it = std::find_if(menu.begin(), menu.end(), [](const json& e) { return e["kind"] == "abstain"; });
    ASSERT_NE(it, menu.end());
    EXPECT_EQ((*it)["label"], "choose not to vote");
    const auto after = m.submit(v["session_id"], {{"kind", "abstain"}, {"token", fresh_token()}});
    bool own = false, tallied = false;
    for (const auto& e : after["log"]) {
      if (e["type"] == "own_ballot" && e["target"] == "abstain") own = true;
      if (e["type"] == "votes" && e["round"] == 1) {
        EXPECT_EQ(e["ballots"][3], "abstain");
        tallied = true;
      }
    }
    EXPECT_TRUE(own);
    if (tallied) {
      EXPECT_NE(after["observation"].get<std::string>().find("choose not to vote: "), std::string::npos);
      EXPECT_TRUE(std::regex_search(after["observation"].get<std::string>(),
                                    std::regex("choose not to vote: [^\\n]*player_3")));
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(PlayServer, ResubmittedTokenIsIdempotent) {
  auto m = make_manager();
  auto v = m.create({.seat = 4, .role = Role::kSeer, .seed = 6});
  ASSERT_EQ(v["status"], "awaiting_human");
  const json body = {{"action", 1}, {"token", "same"}};
  const auto first = m.submit(v["session_id"], body);
  const auto again = m.submit(v["session_id"], body);
  EXPECT_EQ(first.dump(), again.dump());
  EXPECT_EQ(m.view(v["session_id"])->at("state_version"), first["state_version"]);
  EXPECT_EQ(code_of([&] { m.submit(v["session_id"], {{"action", 0}, {"token", "same"}}); }),
            Errc::kDuplicateSubmission);
}

TEST(PlayServer, RestartResumesIdenticalViews) {
  const auto store = (fs::temp_directory_path() / "lspo_play_store").string();
  fs::remove_all(store);
  std::mt19937_64 rng(4);
  std::vector<std::pair<std::string, std::string>> last;
  std::vector<bool> submitted;
  {
    auto m = make_manager(store);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto v = m.create({.seed = seed});
      submitted.push_back(v["status"] == "awaiting_human");
      for (int i = 0; i < 3 && v["status"] == "awaiting_human"; ++i) {
        v = m.submit(v["session_id"],
                     {{"action", static_cast<int>(rng() % v["menu"].size())}, {"token", "k" + std::to_string(i)}});
      }
      last.emplace_back(v["session_id"], v.dump());
    }
    auto step = m.create({.seed = 77, .step = true});
    step = *m.view(step["session_id"]);
    last.emplace_back(step["session_id"], step.dump());
  }
  auto fresh = make_manager(store);
  EXPECT_EQ(fresh.size(), 0u);
  for (std::size_t i = 0; i + 1 < last.size(); ++i) {
    EXPECT_EQ(fresh.view(last[i].first)->dump(), last[i].second);
    // Tokens survive the restart.
    const auto v = json::parse(last[i].second);
    if (submitted[i]) {
      EXPECT_EQ(code_of([&] { fresh.submit(v["session_id"], {{"action", 0}, {"token", "k0"}, {"x", 1}}); }),
                Errc::kDuplicateSubmission);
    }
  }
  // A step-paced session resumes at the same version; the next poll advances it.
  const auto again = json::parse(last.back().second);
  const auto polled = *fresh.view(last.back().first);
  EXPECT_EQ(polled["state_version"], again["state_version"].get<int>() +
                                         (again["status"] == "awaiting_engine" ? 1 : 0));
}

TEST(PlayServer, LongPollTimesOutWhenNothingChanges) {
  auto m = make_manager();
  const auto v = m.create({.seat = 0, .role = Role::kVillager, .seed = 1});
  const int version = v["state_version"];
  EXPECT_FALSE(m.view(v["session_id"], version, 20).has_value());
  EXPECT_TRUE(m.view(v["session_id"], version - 1, 20).has_value());
}

TEST(PlayServer, EveryMenuChoiceReturnsControl) {
  auto m = make_manager();
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    for (const auto& v : play_out(m, m.create({.seed = seed}), rng)) {
      EXPECT_TRUE(v["status"] == "awaiting_human" || v["status"] == "finished");
    }
  }
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Checks one pre-game-over view against what its seat may know.
void check_hygiene(const json& v) {
  const std::string role = v["role"];
  const bool wolf = role == "Werewolf", seer = role == "Seer", doctor = role == "Doctor";
  const std::set<std::string> allowed_private = [&] {
    std::set<std::string> s;
    if (wolf) s = {"teammate", "wolf_proposal", "wolf_kill"};
    if (seer) s = {"seer_check"};
    if (doctor) s = {"doctor_save"};
    return s;
  }();
  const std::set<std::string> public_events = {"night", "announcement", "speech", "own_ballot", "votes", "eliminated"};
  for (const auto& key : {"reveal", "utilities", "outcome", "roles", "assignment"}) ASSERT_FALSE(v.contains(key)) << key;
  json scrub = v;
  scrub.erase("role");
  json kept_log = json::array();
  for (const auto& e : v["log"]) {
    const std::string type = e["type"];
    if (allowed_private.count(type)) continue;
    ASSERT_TRUE(public_events.count(type)) << role << " saw " << e.dump();
    if (type == "speech") {
      ASSERT_EQ(e.size(), 3u) << e.dump();  // type, speaker, text
    }
    kept_log.push_back(e);
  }
  scrub["log"] = kept_log;
  std::string obs = v["observation"];
  obs = std::regex_replace(obs, std::regex("your role is [A-Za-z]+"), "");
  if (seer) obs = std::regex_replace(obs, std::regex("you saw player_[0-9]+ is (not )?a Werewolf"), "");
  if (!wolf) {
    ASSERT_EQ(obs.find("proposed to kill"), std::string::npos);
    ASSERT_EQ(obs.find("chose to kill"), std::string::npos);
    ASSERT_EQ(obs.find("teammate"), std::string::npos);
  }
  if (!seer) {
    ASSERT_EQ(obs.find("you saw"), std::string::npos);
  }
  if (!doctor) {
    ASSERT_EQ(obs.find("chose to save"), std::string::npos);
  }
  scrub["observation"] = obs;
  const std::string text = lower(scrub.dump());
  for (const char* word : {"werewol", "wolf", "seer", "doctor", "villager"}) {
    ASSERT_EQ(text.find(word), std::string::npos) << role << " view mentions " << word << ": " << scrub.dump();
  }
}

TEST(PlayServer, HygieneFuzzThousandSessions) {
  auto m = make_manager();
  std::mt19937_64 rng(2026);
  int views = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    for (const auto& v : play_out(m, m.create({.seed = seed + 1000}), rng)) {
      if (v["status"] == "finished") continue;
      check_hygiene(v);
      if (testing::Test::HasFatalFailure()) return;
      ++views;
    }
  }
  EXPECT_GT(views, 1000);
}

TEST(PlayServer, HttpRoundTrip) {
  auto m = make_manager();
  httplib::Server server;
  mount(server, m);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client c("127.0.0.1", port);

  auto r = c.Post("/sessions", R"({"seat": 5, "role": "Seer", "seed": 3})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 201);
  const auto v = json::parse(r->body);
  EXPECT_EQ(v["schema"], "lspo.play");
  EXPECT_EQ(v["version"], 1);
  const std::string id = v["session_id"];

  r = c.Get("/sessions/" + id);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body), v);

  r = c.Get("/sessions/" + id + "?since=" + std::to_string(v["state_version"].get<int>()) + "&wait_ms=10");
  ASSERT_TRUE(r);
  EXPECT_EQ(json::parse(r->body)["changed"], false);

  r = c.Post("/sessions/" + id + "/actions", R"({"action": 0, "token": "a"})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_GT(json::parse(r->body)["state_version"].get<int>(), v["state_version"].get<int>());

  r = c.Post("/sessions/" + id + "/actions", R"({"action": 1, "token": "a"})", "application/json");
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(json::parse(r->body)["error"], "DuplicateSubmission");

  r = c.Post("/sessions", R"({"seat": 9})", "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(json::parse(r->body)["error"], "BadSeat");

  r = c.Get("/sessions/ffffffffffffffffffffffffffffffff");
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(json::parse(r->body)["error"], "UnknownSession");

  r = c.Post("/sessions", "{not json", "application/json");
  EXPECT_EQ(r->status, 400);

  server.stop();
  t.join();
}

}  // namespace
}  // namespace lspo::play
