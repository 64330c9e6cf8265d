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

// Latent strategy spaces: utterance corpora, k-means, per-role catalogs.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lspo/efg.hpp"
#include "lspo/error.hpp"
#include "lspo/werewolf/game.hpp"

namespace lspo::latent {

using werewolf::Role;
using Vec = std::vector<double>;
using LatentActionId = int;

struct UtteranceRecord {
  std::string id;
  Role role = Role::kVillager;
  int iteration = 1;
  std::string text;
  Vec embedding;
  std::optional<std::string> source_infoset;

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

inline nlohmann::json record_to_json(const UtteranceRecord& r) {
  nlohmann::json j = {{"id", r.id},
                      {"role", std::string(werewolf::role_name(r.role))},
                      {"iteration", r.iteration},
                      {"text", r.text},
                      {"embedding", r.embedding}};
  if (r.source_infoset) j["source_infoset"] = *r.source_infoset;
  return j;
}

inline UtteranceRecord record_from_json(const nlohmann::json& j) {
  UtteranceRecord r;
  r.id = j.at("id").get<std::string>();
  r.role = werewolf::parse_role(j.at("role").get<std::string>());
  r.iteration = j.at("iteration").get<int>();
  r.text = j.at("text").get<std::string>();
  r.embedding = j.at("embedding").get<Vec>();
  if (j.contains("source_infoset")) r.source_infoset = j.at("source_infoset").get<std::string>();
  if (r.id.empty()) throw std::invalid_argument("empty id");
  if (r.text.empty()) throw std::invalid_argument("empty text");
  if (r.iteration < 1) throw std::invalid_argument("iteration must be >= 1");
  if (r.embedding.empty()) throw std::invalid_argument("empty embedding");
  for (double x : r.embedding) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite embedding value");
  }
  return r;
}

// One JSON record per line; blank lines are skipped.
inline std::vector<UtteranceRecord> parse_corpus(std::istream& in) {
  std::vector<UtteranceRecord> out;
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    UtteranceRecord r;
    try {
      r = record_from_json(nlohmann::json::parse(line));
    } catch (const Error& e) {
      fail(Errc::kParseError, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::exception& e) {
      fail(Errc::kParseError, "line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!out.empty() && r.embedding.size() != out.front().embedding.size()) {
      fail(Errc::kDimensionMismatch, "line " + std::to_string(lineno) + ": embedding has " +
                                         std::to_string(r.embedding.size()) + " dims, corpus has " +
                                         std::to_string(out.front().embedding.size()));
    }
    if (!ids.insert(r.id).second) fail(Errc::kParseError, "line " + std::to_string(lineno) + ": duplicate id " + r.id);
    out.push_back(std::move(r));
  }
  if (out.empty()) fail(Errc::kEmptyCorpus, "corpus has no records");
  return out;
}

inline std::vector<UtteranceRecord> ingest_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIo, "cannot open corpus " + path);
  return parse_corpus(in);
}

inline void write_corpus(const std::string& path, const std::vector<UtteranceRecord>& records) {
  std::ofstream out(path);
  if (!out) fail(Errc::kIo, "cannot write corpus " + path);
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

inline double sq_dist(const Vec& a, const Vec& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

// Index of the nearest centroid; ties go to the lowest index.
inline int nearest(const Vec& x, const std::vector<Vec>& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < static_cast<int>(centroids.size()); ++c) {
    const double d = sq_dist(x, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

struct KMeansResult {
  std::vector<Vec> centroids;
  std::vector<int> assignments;
  double inertia = 0.0;
  int rounds = 0;
  std::vector<double> inertia_trace;  // after each assignment step
};

inline constexpr int kMaxLloydRounds = 300;

inline std::size_t count_distinct(const std::vector<Vec>& points) {
  return std::set<Vec>(points.begin(), points.end()).size();
}

// One k-means++ seeding followed by Lloyd iterations. An empty cluster is
// reseeded at the point farthest from its assigned centroid.
inline KMeansResult kmeans_single(const std::vector<Vec>& points, int k, std::mt19937_64& rng) {
  if (k < 1) fail(Errc::kTooFewPoints, "k must be >= 1");
  if (points.empty()) fail(Errc::kTooFewPoints, "no points");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) fail(Errc::kDimensionMismatch, "points have mixed dimensions");
  }
  if (count_distinct(points) < static_cast<std::size_t>(k)) {
    fail(Errc::kTooFewPoints, "k=" + std::to_string(k) + " exceeds " + std::to_string(count_distinct(points)) +
                                  " distinct points");
  }
  const int n = static_cast<int>(points.size());
  KMeansResult r;
  r.centroids.push_back(points[rng() % n]);
  std::vector<double> d2(n);
  while (static_cast<int>(r.centroids.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      d2[i] = sq_dist(points[i], r.centroids[nearest(points[i], r.centroids)]);
      total += d2[i];
    }
    for (double& d : d2) d /= total;
    r.centroids.push_back(points[sample_index(d2, rng)]);
  }

  r.assignments.assign(n, -1);
  auto assign_all = [&] {
    bool changed = false;
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      const int c = nearest(points[i], r.centroids);
      changed = changed || c != r.assignments[i];
      r.assignments[i] = c;
      inertia += sq_dist(points[i], r.centroids[c]);
    }
    r.inertia_trace.push_back(inertia);
    return changed;
  };

  bool changed = assign_all();
  while (changed && r.rounds < kMaxLloydRounds) {
    ++r.rounds;
    std::vector<Vec> sums(k, Vec(dim, 0.0));
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      ++counts[r.assignments[i]];
      for (std::size_t j = 0; j < dim; ++j) sums[r.assignments[i]][j] += points[i][j];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) r.centroids[c][j] = sums[c][j] / counts[c];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      int far = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const double d = sq_dist(points[i], r.centroids[r.assignments[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      r.centroids[c] = points[far];
      --counts[r.assignments[far]];
      r.assignments[far] = c;
      counts[c] = 1;
    }
    changed = assign_all();
  }
  r.inertia = r.inertia_trace.back();
  return r;
}

inline constexpr int kDefaultRestarts = 10;

// Best of `restarts` seeded runs by inertia (first wins ties).
inline KMeansResult kmeans(const std::vector<Vec>& points, int k, std::uint64_t seed,
                           int restarts = kDefaultRestarts) {
  std::mt19937_64 rng(seed);
  KMeansResult best = kmeans_single(points, k, rng);
  for (int i = 1; i < restarts; ++i) {
    KMeansResult r = kmeans_single(points, k, rng);
    if (r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

struct ClusterSchedule {
  std::array<int, werewolf::kNumRoles> k_initial = {3, 2, 2, 2};

  int k(Role role, int iteration) const { return k_initial[werewolf::role_index(role)] + iteration - 1; }

  static ClusterSchedule uniform(int k) { return {{k, k, k, k}}; }
};

inline constexpr int kDefaultExemplars = 5;

struct LatentCatalog {
  Role role = Role::kVillager;
  int iteration = 1;
  int k = 0;
  std::vector<Vec> centroids;
  std::vector<std::vector<std::string>> exemplars;  // record ids, nearest first
  std::vector<std::vector<std::string>> exemplar_texts;
  std::vector<std::vector<Vec>> exemplar_embeddings;

  friend bool operator==(const LatentCatalog&, const LatentCatalog&) = default;
};

using CatalogSet = std::map<Role, LatentCatalog>;

inline LatentActionId assign(const Vec& embedding, const LatentCatalog& catalog) {
  if (catalog.centroids.empty()) fail(Errc::kDimensionMismatch, "catalog has no centroids");
  if (embedding.size() != catalog.centroids.front().size()) {
    fail(Errc::kDimensionMismatch, "embedding has " + std::to_string(embedding.size()) + " dims, catalog has " +
                                       std::to_string(catalog.centroids.front().size()));
  }
  return nearest(embedding, catalog.centroids);
}

// Clusters each requested role's utterances from iterations <= `iteration`.
inline CatalogSet build_catalogs(const std::vector<UtteranceRecord>& records, const ClusterSchedule& schedule,
                                 int iteration, std::uint64_t seed, const std::vector<Role>& roles,
                                 int exemplars_per_cluster = kDefaultExemplars) {
  CatalogSet out;
  for (Role role : roles) {
    std::vector<const UtteranceRecord*> pool;
    for (const auto& r : records) {
      if (r.role == role && r.iteration <= iteration) pool.push_back(&r);
    }
    const int k = schedule.k(role, iteration);
    std::vector<Vec> points;
    for (const auto* r : pool) points.push_back(r->embedding);
    if (k < 1 || static_cast<int>(count_distinct(points)) < k) {
      fail(Errc::kInsufficientData, std::string(werewolf::role_name(role)) + " needs " + std::to_string(k) +
                                        " distinct embeddings, has " + std::to_string(count_distinct(points)));
    }
    const KMeansResult km = kmeans(points, k, seed + 7919 * static_cast<std::uint64_t>(werewolf::role_index(role)));
    LatentCatalog cat;
    cat.role = role;
    cat.iteration = iteration;
    cat.k = k;
    cat.centroids = km.centroids;
    cat.exemplars.resize(k);
    cat.exemplar_texts.resize(k);
    cat.exemplar_embeddings.resize(k);
    for (int c = 0; c < k; ++c) {
      std::vector<int> members;
      for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
        if (km.assignments[i] == c) members.push_back(i);
      }
      std::stable_sort(members.begin(), members.end(), [&](int a, int b) {
        return sq_dist(points[a], km.centroids[c]) < sq_dist(points[b], km.centroids[c]);
      });
      members.resize(std::min<std::size_t>(members.size(), exemplars_per_cluster));
      for (int i : members) {
        cat.exemplars[c].push_back(pool[i]->id);
        cat.exemplar_texts[c].push_back(pool[i]->text);
        cat.exemplar_embeddings[c].push_back(pool[i]->embedding);
      }
    }
    out.emplace(role, std::move(cat));
  }
  return out;
}

inline nlohmann::json catalog_to_json(const LatentCatalog& c) {
  return {{"role", std::string(werewolf::role_name(c.role))},
          {"iteration", c.iteration},
          {"k", c.k},
          {"centroids", c.centroids},
          {"exemplars", c.exemplars},
          {"exemplar_texts", c.exemplar_texts},
          {"exemplar_embeddings", c.exemplar_embeddings}};
}

inline LatentCatalog catalog_from_json(const nlohmann::json& j) {
  try {
    LatentCatalog c;
    c.role = werewolf::parse_role(j.at("role").get<std::string>());
    c.iteration = j.at("iteration").get<int>();
    c.k = j.at("k").get<int>();
    c.centroids = j.at("centroids").get<std::vector<Vec>>();
    c.exemplars = j.at("exemplars").get<std::vector<std::vector<std::string>>>();
    c.exemplar_texts = j.at("exemplar_texts").get<std::vector<std::vector<std::string>>>();
    c.exemplar_embeddings = j.at("exemplar_embeddings").get<std::vector<std::vector<Vec>>>();
    if (static_cast<int>(c.centroids.size()) != c.k || static_cast<int>(c.exemplars.size()) != c.k) {
      fail(Errc::kSchemaMismatch, "catalog k does not match centroid count");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kSchemaMismatch, std::string("catalog: ") + e.what());
  }
}

inline nlohmann::json catalogs_to_json(const CatalogSet& set) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [role, c] : set) arr.push_back(catalog_to_json(c));
  return arr;
}

inline CatalogSet catalogs_from_json(const nlohmann::json& j) {
  CatalogSet out;
  if (!j.is_array()) fail(Errc::kSchemaMismatch, "catalog set must be an array");
  for (const auto& c : j) {
    LatentCatalog cat = catalog_from_json(c);
    out.emplace(cat.role, std::move(cat));
  }
  return out;
}

// Seeded Gaussian blobs standing in for embedded LLM utterances. Blob b of a
// role has a fixed center; iteration i contributes points for the first
// schedule.k(role, i) blobs, so each iteration adds one new strategy.
struct SynthSpec {
  int dim = 16;
  int per_blob = 30;
  double spread = 0.15;
  int iterations = 3;
  std::uint64_t seed = 0;
  ClusterSchedule schedule;
  std::vector<Role> roles = {werewolf::kAllRoles.begin(), werewolf::kAllRoles.end()};
};

inline std::vector<UtteranceRecord> synth_corpus(const SynthSpec& spec) {
  std::vector<UtteranceRecord> out;
  for (Role role : spec.roles) {
    const std::string name(werewolf::role_name(role));
    const int max_blobs = spec.schedule.k(role, spec.iterations);
    std::mt19937_64 center_rng(spec.seed * 31 + 101 * static_cast<std::uint64_t>(werewolf::role_index(role)) + 1);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<Vec> centers(max_blobs, Vec(spec.dim));
    for (auto& c : centers) {
      for (double& x : c) x = unit(center_rng);
    }
    // Text carries a per-blob theme word but nothing naming the role.
    static constexpr std::array<const char*, 16> kThemes = {
        "amber", "birch", "cobalt", "dune",  "ember", "fjord", "garnet", "harbor",
        "iris",  "juniper", "kelp", "linen", "marble", "nectar", "onyx", "pebble"};
    std::vector<std::string> themes;
    for (int b = 0; b < max_blobs; ++b) {
      themes.push_back(std::string(kThemes[center_rng() % kThemes.size()]) + "-" + kThemes[center_rng() % kThemes.size()]);
    }
    for (int it = 1; it <= spec.iterations; ++it) {
      std::mt19937_64 rng(spec.seed * 1000003 + 17 * static_cast<std::uint64_t>(werewolf::role_index(role)) + it);
      std::normal_distribution<double> noise(0.0, spec.spread);
      for (int b = 0; b < spec.schedule.k(role, it); ++b) {
        for (int i = 0; i < spec.per_blob; ++i) {
          UtteranceRecord r;
          r.id = name + "-" + std::to_string(it) + "-" + std::to_string(b) + "-" + std::to_string(i);
          r.role = role;
          r.iteration = it;
          r.text = themes[b] + " remark " + std::to_string(it) + "." + std::to_string(i);
          r.embedding = centers[b];
          for (double& x : r.embedding) x += noise(rng);
          out.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

}  // namespace lspo::latent
