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

// Sessions in which one human seat plays against a checkpoint.
//
// HTTP API (JSON bodies, schema "lspo.play" version 1):
//
//   POST /sessions                 {checkpoint?, seat?, role?, seed?, pace?}
//   GET  /sessions/{id}            ?since=<version>&wait_ms=<ms> long-polls
//   POST /sessions/{id}/actions    {action, token, utterance?}
//
// Errors come back as {"error": <code>, "message": ...}.
//
// The human's view is built from the human's own observation log only, so it
// cannot carry another seat's role, night action or the wolf channel. Roles
// are revealed once the game is over.
//
// With pace "auto" the engine moves until the human is to act. With pace
// "step" it makes one move per view request, so pollers see AwaitingEngine.

#pragma once

#include <openssl/rand.h>

#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "httplib.h"
#include "lspo/eval.hpp"
#include "lspo/werewolf/agent.hpp"
#include "lspo/werewolf/observation.hpp"

namespace lspo::play {

using werewolf::Agent;
using werewolf::Game;
using werewolf::GameState;
using werewolf::Phase;
using werewolf::Role;

inline constexpr int kApiVersion = 1;
inline constexpr const char* kApiSchema = "lspo.play";
inline constexpr int kMaxWaitMs = 30000;

enum class Status { kAwaitingHuman, kAwaitingEngine, kFinished };

inline std::string status_name(Status s) {
  switch (s) {
    case Status::kAwaitingHuman: return "awaiting_human";
    case Status::kAwaitingEngine: return "awaiting_engine";
    case Status::kFinished: return "finished";
  }
  return "?";
}

// 128 random bits from the system CSPRNG, hex encoded.
inline std::string new_session_id() {
  unsigned char bytes[16];
  if (RAND_bytes(bytes, sizeof bytes) != 1) fail(Errc::kIo, "no system randomness");
  return to_hex(std::string(reinterpret_cast<const char*>(bytes), sizeof bytes));
}

// Phase as the table sees it; the night's internal order stays hidden.
inline std::string public_phase(Phase p) {
  switch (p) {
    case Phase::kNightWolfPropose:
    case Phase::kNightWolfDecide:
    case Phase::kNightSeer:
    case Phase::kNightDoctor: return "night";
    case Phase::kDayDiscussion: return "day_discussion";
    case Phase::kDayVoting:
    case Phase::kTieBreak: return "day_voting";
    case Phase::kGameOver: return "game_over";
    case Phase::kDeal: return "setup";
  }
  return "?";
}

inline std::string kind_name(werewolf::ActionLabel::Kind k) {
  using K = werewolf::ActionLabel::Kind;
  switch (k) {
    case K::kPropose: return "propose";
    case K::kKill: return "kill";
    case K::kSee: return "see";
    case K::kSave: return "save";
    case K::kSpeak: return "speak";
    case K::kVote: return "vote";
    case K::kAbstain: return "abstain";
  }
  return "?";
}

struct SessionRequest {
  std::string checkpoint = "default";
  std::optional<PlayerId> seat;  // random when empty
  std::optional<Role> role;      // deal restricted to this role at the seat
  std::optional<std::uint64_t> seed;
  bool step = false;
};

struct Session {
  std::string id;
  std::string checkpoint;
  std::shared_ptr<const Agent> agent;
  std::unique_ptr<Game> game;
  PlayerId human = 0;
  std::uint64_t seed = 0;
  bool step = false;
  std::vector<std::pair<ActionId, int>> moves;  // (action, utterance) along the trail
  GameState state;
  std::map<std::string, std::pair<nlohmann::json, nlohmann::json>> tokens;  // token -> (request, view)
  int version = 0;

  std::mutex mu;
  std::condition_variable changed;
};

class SessionManager {
 public:
  using Loader = std::function<std::shared_ptr<const Agent>(const std::string& path)>;

  // `checkpoints` maps names clients may ask for to checkpoint paths. With a
  // store directory, sessions persist across restarts.
  explicit SessionManager(std::map<std::string, std::string> checkpoints, std::string store_dir = "",
                          Loader loader = {})
      : checkpoints_(std::move(checkpoints)), store_(std::move(store_dir)), loader_(std::move(loader)) {
    if (!loader_) {
      loader_ = [](const std::string& path) { return std::make_shared<const Agent>(werewolf::load_agent(path)); };
    }
    if (!store_.empty()) std::filesystem::create_directories(store_);
  }

  nlohmann::json create(const SessionRequest& req) {
    auto it = checkpoints_.find(req.checkpoint);
    if (it == checkpoints_.end()) fail(Errc::kIncompatibleCheckpoints, "unknown checkpoint '" + req.checkpoint + "'");
    auto s = std::make_shared<Session>();
    s->id = new_session_id();
    s->checkpoint = req.checkpoint;
    s->agent = agent(it->second);
    s->game = std::make_unique<Game>(s->agent->config);
    const int n = s->game->num_players();
    std::uint64_t seed = req.seed.value_or(std::random_device{}());
    s->seed = seed;
    s->step = req.step;
    std::mt19937_64 rng(eval::game_seed(seed, 0xdea1));
    if (req.seat && (*req.seat < 0 || *req.seat >= n)) {
      fail(Errc::kBadSeat, "seat " + std::to_string(*req.seat) + " outside 0.." + std::to_string(n - 1));
    }
    s->human = req.seat ? *req.seat : std::uniform_int_distribution<int>(0, n - 1)(rng);
    std::vector<int> deals;
    const auto& all = s->game->assignments();
    for (int d = 0; d < static_cast<int>(all.size()); ++d) {
      if (!req.role || all[d][s->human] == *req.role) deals.push_back(d);
    }
    if (deals.empty()) fail(Errc::kBadSeat, "no deal gives that seat the requested role");
    const int deal = deals[std::uniform_int_distribution<std::size_t>(0, deals.size() - 1)(rng)];
    s->state = s->game->initial_state();
    push(*s, deal, -1);
    if (!s->step) advance(*s, -1);
    nlohmann::json v = view_of(*s);
    persist(*s);
    std::lock_guard lock(mu_);
    sessions_[s->id] = s;
    return v;
  }

  // The human's view. Returns nullopt when `since` is given and nothing
  // changed within `wait_ms`.
  std::optional<nlohmann::json> view(const std::string& id, std::optional<int> since = {}, int wait_ms = 0) {
    auto s = find(id);
    std::unique_lock lock(s->mu);
    if (s->step && status(*s) == Status::kAwaitingEngine) {
      advance(*s, 1);
      persist(*s);
    }
    if (since && s->version <= *since) {
      s->changed.wait_for(lock, std::chrono::milliseconds(std::min(wait_ms, kMaxWaitMs)),
                          [&] { return s->version > *since; });
      if (s->version <= *since) return std::nullopt;
    }
    return view_of(*s);
  }

  nlohmann::json submit(const std::string& id, const nlohmann::json& body) {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    const std::string token = body.value("token", std::string());
    if (token.empty()) fail(Errc::kParseError, "submission needs a token");
    if (auto t = s->tokens.find(token); t != s->tokens.end()) {
      if (t->second.first != body) fail(Errc::kDuplicateSubmission, "token already used for a different action");
      return t->second.second;
    }
    if (status(*s) != Status::kAwaitingHuman) fail(Errc::kNotYourTurn, "session is " + status_name(status(*s)));
    const auto legal = s->game->legal_actions(s->state);
    int a = -1;
    if (body.contains("action")) {
      if (!body["action"].is_number_integer()) fail(Errc::kParseError, "action must be a menu index");
      a = body["action"].get<int>();
      if (a < 0 || a >= static_cast<int>(legal.size())) {
        fail(Errc::kIllegalAction, "action " + std::to_string(a) + " is not on the menu");
      }
    } else if (body.contains("kind")) {
      // {kind, target} names the move instead of its menu index.
      const std::string kind = body["kind"].get<std::string>();
      const int target = body.value("target", werewolf::kNone);
      for (int i = 0; i < static_cast<int>(legal.size()); ++i) {
        if (kind_name(legal[i].kind) == kind && legal[i].target == target) a = i;
      }
      if (a < 0) fail(Errc::kIllegalAction, kind + " " + std::to_string(target) + " is not a legal move now");
    } else {
      fail(Errc::kParseError, "submission needs an action index or a kind");
    }
    int utterance = -1;
    if (s->state.phase == Phase::kDayDiscussion) {
      const auto& texts = s->agent->catalogs.at(s->state.roles[s->human]).exemplar_texts.at(legal[a].target);
      utterance = body.value("utterance", texts.empty() ? -1 : 0);
      if (utterance < -1 || utterance >= static_cast<int>(texts.size())) {
        fail(Errc::kIllegalAction, "no exemplar " + std::to_string(utterance) + " for that strategy");
      }
    }
    push(*s, a, utterance);
    if (!s->step) advance(*s, -1);
    nlohmann::json v = view_of(*s);
    s->tokens.emplace(token, std::make_pair(body, v));
    persist(*s);
    return v;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
  }

 private:
  std::shared_ptr<const Agent> agent(const std::string& path) {
    std::lock_guard lock(mu_);
    auto& a = agents_[path];
    if (!a) a = loader_(path);
    return a;
  }

  std::shared_ptr<Session> find(const std::string& id) {
    {
      std::lock_guard lock(mu_);
      if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
    }
    auto s = restore(id);
    if (!s) fail(Errc::kUnknownSession, "no session " + id);
    std::lock_guard lock(mu_);
    auto [it, inserted] = sessions_.emplace(id, s);
    return it->second;
  }

  Status status(const Session& s) const {
    const auto kind = s.game->node_kind(s.state);
    if (kind.is_terminal()) return Status::kFinished;
    if (kind.is_decision() && s.state.actor == s.human) return Status::kAwaitingHuman;
    return Status::kAwaitingEngine;
  }

  void push(Session& s, ActionId a, int utterance) {
    s.state = s.game->apply(s.state, a);
    if (utterance >= 0) s.state = s.game->with_utterance(s.state, utterance);
    s.moves.emplace_back(a, utterance);
    ++s.version;
    s.changed.notify_all();
  }

  // Engine moves until the human is to act or the game ends, at most
  // `limit` of them when limit >= 0. Each move draws from its own stream.
  void advance(Session& s, int limit) {
    const Game& g = *s.game;
    for (int done = 0; limit < 0 || done < limit; ++done) {
      if (status(s) != Status::kAwaitingEngine) return;
      std::mt19937_64 rng(eval::game_seed(s.seed, s.moves.size()));
      if (g.node_kind(s.state).is_chance()) {
        push(s, sample_chance(g.chance_outcomes(s.state), rng), -1);
        continue;
      }
      const auto sigma = s.agent->policy.probs(g.infoset_key(s.state), g.num_actions(s.state));
      const ActionId a = sample_index(sigma, rng);
      int utterance = -1;
      if (s.state.phase == Phase::kDayDiscussion) {
        utterance = werewolf::pick_utterance(s.agent->catalogs.at(s.state.roles[s.state.actor]), a, rng);
      }
      push(s, a, utterance);
    }
  }

  std::string speech_text(const Session& s, int round, int index) const {
    const auto& e = s.state.rounds.at(round - 1).discussion.at(index);
    return werewolf::CatalogUtteranceSource(s.agent->catalogs).text(s.state.roles[e.speaker], e);
  }

  nlohmann::json events_of(const Session& s) const {
    using namespace werewolf::tag;
    nlohmann::json out = nlohmann::json::array();
    const auto who = [](int p) { return p == werewolf::kNone ? nlohmann::json(nullptr) : nlohmann::json(p); };
    int round = 0, speech = 0;
    for (const auto& e : werewolf::parse_viewer_log(s.game->viewer_log(s.state, s.human), s.game->num_players())) {
      switch (e.tag) {
        case kHeader: break;
        case kTeammate: out.push_back({{"type", "teammate"}, {"player", e.args[0]}}); break;
        case kNight:
          round = e.args[0];
          speech = 0;
          out.push_back({{"type", "night"}, {"round", round}});
          break;
        case kProposal: out.push_back({{"type", "wolf_proposal"}, {"target", e.args[0]}}); break;
        case kKill: out.push_back({{"type", "wolf_kill"}, {"target", e.args[0]}}); break;
        case kSeen:
          out.push_back({{"type", "seer_check"}, {"target", e.args[0]}, {"is_werewolf", e.args[1] == 1}});
          break;
        case kSaved: out.push_back({{"type", "doctor_save"}, {"target", e.args[0]}}); break;
        case kAnnounce:
          out.push_back({{"type", "announcement"},
                         {"round", round},
                         {"killed", who(e.args[0])},
                         {"text", e.args[0] == werewolf::kNone
                                      ? std::string("no player was killed last night")
                                      : "player_" + std::to_string(e.args[0]) + " was killed last night"}});
          break;
        case kSpeech:
          out.push_back({{"type", "speech"}, {"speaker", e.args[0]}, {"text", speech_text(s, round, speech++)}});
          break;
        case kOwnBallot:
          out.push_back({{"type", "own_ballot"},
                         {"target", e.args[0] == werewolf::kAbstain ? nlohmann::json("abstain") : nlohmann::json(e.args[0])}});
          break;
        case kTally: {
          nlohmann::json ballots = nlohmann::json::array();
          for (int b : e.args) {
            ballots.push_back(b == werewolf::kAbstain ? nlohmann::json("abstain")
                                                      : (b == werewolf::kNoBallot ? nlohmann::json(nullptr) : nlohmann::json(b)));
          }
          out.push_back({{"type", "votes"}, {"round", round}, {"ballots", ballots}});
          break;
        }
        case kEliminated: out.push_back({{"type", "eliminated"}, {"round", round}, {"player", who(e.args[0])}}); break;
      }
    }
    return out;
  }

  nlohmann::json view_of(const Session& s) const {
    const Game& g = *s.game;
    const Status st = status(s);
    const Role me = s.state.roles[s.human];
    nlohmann::json v = {{"schema", kApiSchema},
                        {"version", kApiVersion},
                        {"session_id", s.id},
                        {"state_version", s.version},
                        {"status", status_name(st)},
                        {"seat", s.human},
                        {"role", std::string(werewolf::role_name(me))},
                        {"round", s.state.round},
                        {"phase", public_phase(s.state.phase)}};
    nlohmann::json alive = nlohmann::json::array();
    for (PlayerId p = 0; p < g.num_players(); ++p) {
      if (s.state.is_alive(p)) alive.push_back(p);
    }
    v["alive"] = alive;
    v["log"] = events_of(s);
    v["observation"] =
        werewolf::render_text_observation(g, s.state, s.human, werewolf::CatalogUtteranceSource(s.agent->catalogs));
    if (st == Status::kAwaitingHuman) {
      nlohmann::json menu = nlohmann::json::array();
      const auto legal = g.legal_actions(s.state);
      for (int i = 0; i < static_cast<int>(legal.size()); ++i) {
        nlohmann::json m = {{"index", i}, {"kind", kind_name(legal[i].kind)}, {"label", legal[i].text()}};
        if (legal[i].kind == werewolf::ActionLabel::Kind::kSpeak) {
          m["latent"] = legal[i].target;
          m["exemplars"] = s.agent->catalogs.at(me).exemplar_texts.at(legal[i].target);
        } else if (legal[i].target != werewolf::kNone) {
          m["target"] = legal[i].target;
        }
        menu.push_back(std::move(m));
      }
      v["menu"] = menu;
    }
    if (st == Status::kFinished) {
      nlohmann::json roles = nlohmann::json::array();
      for (Role r : s.state.roles) roles.push_back(std::string(werewolf::role_name(r)));
      v["reveal"] = roles;
      v["outcome"] = werewolf::outcome_name(s.state.outcome);
      v["utilities"] = s.state.ledger.totals();
    }
    return v;
  }

  std::string path_of(const std::string& id) const {
    return (std::filesystem::path(store_) / (id + ".json")).string();
  }

  void persist(const Session& s) const {
    if (store_.empty()) return;
    nlohmann::json moves = nlohmann::json::array();
    for (const auto& [a, u] : s.moves) moves.push_back({a, u});
    nlohmann::json tokens = nlohmann::json::object();
    for (const auto& [t, rv] : s.tokens) tokens[t] = {{"request", rv.first}, {"view", rv.second}};
    const nlohmann::json j = {{"schema", "lspo.session"}, {"version", kApiVersion}, {"id", s.id},
                              {"checkpoint", s.checkpoint}, {"human", s.human}, {"seed", s.seed},
                              {"step", s.step}, {"moves", moves}, {"tokens", tokens}};
    const std::string tmp = path_of(s.id) + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) fail(Errc::kIo, "cannot write " + tmp);
      out << j.dump() << '\n';
    }
    std::filesystem::rename(tmp, path_of(s.id));
  }

  std::shared_ptr<Session> restore(const std::string& id) {
    if (store_.empty() || id.size() != 32 || id.find_first_not_of("0123456789abcdef") != std::string::npos) {
      return nullptr;
    }
    std::ifstream in(path_of(id));
    if (!in) return nullptr;
    nlohmann::json j;
    try {
      in >> j;
      if (j.at("schema") != "lspo.session" || j.at("version") != kApiVersion) {
        fail(Errc::kSchemaMismatch, "session file " + id);
      }
      auto s = std::make_shared<Session>();
      s->id = j.at("id").get<std::string>();
      s->checkpoint = j.at("checkpoint").get<std::string>();
      auto cp = checkpoints_.find(s->checkpoint);
      if (cp == checkpoints_.end()) fail(Errc::kIncompatibleCheckpoints, "session uses unknown checkpoint");
      s->agent = agent(cp->second);
      s->game = std::make_unique<Game>(s->agent->config);
      s->human = j.at("human").get<int>();
      s->seed = j.at("seed").get<std::uint64_t>();
      s->step = j.at("step").get<bool>();
      s->state = s->game->initial_state();
      for (const auto& m : j.at("moves")) push(*s, m.at(0).get<int>(), m.at(1).get<int>());
      for (auto it = j.at("tokens").begin(); it != j.at("tokens").end(); ++it) {
        s->tokens.emplace(it.key(), std::make_pair(it.value().at("request"), it.value().at("view")));
      }
      return s;
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::kSchemaMismatch, "session file " + id + ": " + e.what());
    }
  }

  std::map<std::string, std::string> checkpoints_;
  std::string store_;
  Loader loader_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::shared_ptr<const Agent>> agents_;
};

inline int http_status(Errc c) {
  switch (c) {
    case Errc::kUnknownSession: return 404;
    case Errc::kNotYourTurn:
    case Errc::kDuplicateSubmission: return 409;
    case Errc::kIllegalAction: return 422;
    default: return 400;
  }
}

inline SessionRequest parse_session_request(const nlohmann::json& j) {
  SessionRequest r;
  try {
    r.checkpoint = j.value("checkpoint", r.checkpoint);
    if (j.contains("seat") && !j["seat"].is_null() && j["seat"] != "random") r.seat = j["seat"].get<int>();
    if (j.contains("role") && !j["role"].is_null()) {
      try {
        r.role = werewolf::parse_role(j["role"].get<std::string>());
      } catch (const Error& e) {
        fail(Errc::kBadSeat, e.what());
      }
    }
    if (j.contains("seed") && !j["seed"].is_null()) r.seed = j["seed"].get<std::uint64_t>();
    const std::string pace = j.value("pace", std::string("auto"));
    if (pace != "auto" && pace != "step") fail(Errc::kParseError, "pace must be auto or step");
    r.step = pace == "step";
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kParseError, std::string("session request: ") + e.what());
  }
  return r;
}

// Registers the three routes on `server`.
inline void mount(httplib::Server& server, SessionManager& sessions) {
  const auto reply = [](httplib::Response& res, int code, const nlohmann::json& body) {
    res.status = code;
    res.set_content(body.dump(), "application/json");
  };
  const auto guarded = [reply](auto&& fn) {
    return [fn, reply](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        reply(res, http_status(e.code()), {{"error", std::string(errc_name(e.code()))}, {"message", e.what()}});
      } catch (const nlohmann::json::exception& e) {
        reply(res, 400, {{"error", "ParseError"}, {"message", e.what()}});
      }
    };
  };
  server.Post("/sessions", guarded([&sessions, reply](const httplib::Request& req, httplib::Response& res) {
                const auto body = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
                reply(res, 201, sessions.create(parse_session_request(body)));
              }));
  server.Get(R"(/sessions/([0-9a-zA-Z]+))", guarded([&sessions, reply](const httplib::Request& req,
                                                                        httplib::Response& res) {
               std::optional<int> since;
               int wait_ms = 0;
               if (req.has_param("since")) since = std::stoi(req.get_param_value("since"));
               if (req.has_param("wait_ms")) wait_ms = std::stoi(req.get_param_value("wait_ms"));
               const auto v = sessions.view(req.matches[1], since, wait_ms);
               if (!v) {
                 reply(res, 200, {{"schema", kApiSchema}, {"version", kApiVersion}, {"changed", false}});
               } else {
                 reply(res, 200, *v);
               }
             }));
  server.Post(R"(/sessions/([0-9a-zA-Z]+)/actions)",
              guarded([&sessions, reply](const httplib::Request& req, httplib::Response& res) {
                reply(res, 200, sessions.submit(req.matches[1], nlohmann::json::parse(req.body)));
              }));
}

}  // namespace lspo::play
