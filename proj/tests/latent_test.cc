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

#include "lspo/latent.hpp"

#include <sstream>

#include "gtest/gtest.h"

namespace lspo::latent {
namespace {

using werewolf::Role;

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::kIo;
}

// Minimum two-cluster inertia by enumerating every labeling.
double brute_force_two_means(const std::vector<Vec>& pts) {
  const int n = static_cast<int>(pts.size());
  double best = 1e300;
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    double inertia = 0.0;
    for (int side = 0; side < 2; ++side) {
      Vec mean(pts[0].size(), 0.0);
      int cnt = 0;
      for (int i = 0; i < n; ++i) {
        if (((mask >> i) & 1) != side) continue;
        ++cnt;
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += pts[i][j];
      }
      for (double& x : mean) x /= cnt;
      for (int i = 0; i < n; ++i) {
        if (((mask >> i) & 1) == side) inertia += sq_dist(pts[i], mean);
      }
    }
    best = std::min(best, inertia);
  }
  return best;
}

TEST(KMeans, SingleClusterIsMean) {
  const std::vector<Vec> pts = {{0, 0}, {2, 0}, {4, 3}};
  const auto r = kmeans(pts, 1, 3);
  EXPECT_DOUBLE_EQ(r.centroids[0][0], 2.0);
  EXPECT_DOUBLE_EQ(r.centroids[0][1], 1.0);
  EXPECT_EQ(r.assignments, (std::vector<int>{0, 0, 0}));
}

TEST(KMeans, TwoBlobsMatchBruteForce) {
  const std::vector<Vec> pts = {{0, 0}, {0.3, 0.1}, {-0.2, 0.2}, {5, 5}, {5.1, 4.7}, {4.8, 5.3}};
  const double optimum = brute_force_two_means(pts);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans(pts, 2, seed);
    EXPECT_EQ(r.assignments[0], r.assignments[1]);
    EXPECT_EQ(r.assignments[0], r.assignments[2]);
    EXPECT_EQ(r.assignments[3], r.assignments[4]);
    EXPECT_EQ(r.assignments[3], r.assignments[5]);
    EXPECT_NE(r.assignments[0], r.assignments[3]);
    EXPECT_NEAR(r.inertia, optimum, 1e-12);
  }
  EXPECT_NEAR(optimum, 0.373333333333333, 1e-12);
}

TEST(KMeans, OneClusterPerDistinctPoint) {
  const std::vector<Vec> pts = {{1, 1}, {2, 2}, {1, 1}, {3, 0}};
  const auto r = kmeans(pts, 3, 0);
  EXPECT_DOUBLE_EQ(r.inertia, 0.0);
  EXPECT_EQ(r.assignments[0], r.assignments[2]);
  EXPECT_EQ(code_of([&] { kmeans(pts, 4, 0); }), Errc::kTooFewPoints);
  EXPECT_EQ(code_of([&] { kmeans(pts, 0, 0); }), Errc::kTooFewPoints);
}

TEST(KMeans, DeterministicAndMonotone) {
  SynthSpec spec{.dim = 8, .per_blob = 25, .spread = 0.6, .iterations = 3, .seed = 4};
  std::vector<Vec> pts;
  for (const auto& r : synth_corpus(spec)) pts.push_back(r.embedding);
  for (int k : {2, 4, 7}) {
    const auto a = kmeans(pts, k, 42);
    const auto b = kmeans(pts, k, 42);
    EXPECT_EQ(a.centroids, b.centroids);
    EXPECT_EQ(a.assignments, b.assignments);
    for (std::size_t i = 1; i < a.inertia_trace.size(); ++i) {
      EXPECT_LE(a.inertia_trace[i], a.inertia_trace[i - 1] + 1e-9);
    }
    EXPECT_LE(a.rounds, kMaxLloydRounds);
  }
}

TEST(Corpus, IngestExamples) {
  std::istringstream three(
      R"({"id":"a","role":"Seer","iteration":1,"text":"I checked 3","embedding":[1,0]}
{"id":"b","role":"Werewolf","iteration":1,"text":"trust me","embedding":[0,1]}

{"id":"c","role":"Villager","iteration":2,"text":"hmm","embedding":[0.5,0.5],"source_infoset":"x"}
)");
  const auto recs = parse_corpus(three);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].role, Role::kSeer);
  EXPECT_EQ(recs[2].source_infoset, "x");

  std::istringstream mismatch(
      R"({"id":"a","role":"Seer","iteration":1,"text":"x","embedding":[1,0,0]}
{"id":"b","role":"Seer","iteration":1,"text":"y","embedding":[1,0]})");
  EXPECT_EQ(code_of([&] { parse_corpus(mismatch); }), Errc::kDimensionMismatch);

  std::istringstream empty("");
  EXPECT_EQ(code_of([&] { parse_corpus(empty); }), Errc::kEmptyCorpus);

  std::istringstream bad("{\"id\":\"a\",\"role\":\"Seer\"}\n");
  try {
    parse_corpus(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kParseError);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
  std::istringstream dup(
      R"({"id":"a","role":"Seer","iteration":1,"text":"x","embedding":[1]}
{"id":"a","role":"Seer","iteration":1,"text":"y","embedding":[2]})");
  EXPECT_EQ(code_of([&] { parse_corpus(dup); }), Errc::kParseError);
}

TEST(Corpus, FileRoundTrip) {
  const auto recs = synth_corpus({.dim = 4, .per_blob = 3, .iterations = 2, .seed = 9});
  const std::string path = testing::TempDir() + "corpus.jsonl";
  write_corpus(path, recs);
  EXPECT_EQ(ingest_corpus(path), recs);
  EXPECT_EQ(code_of([] { ingest_corpus("/nonexistent/corpus.jsonl"); }), Errc::kIo);
}

TEST(Catalog, ScheduleSizes) {
  const ClusterSchedule sched;
  EXPECT_EQ(sched.k(Role::kWerewolf, 1), 3);
  EXPECT_EQ(sched.k(Role::kSeer, 1), 2);
  EXPECT_EQ(sched.k(Role::kWerewolf, 3), 5);
  for (Role r : werewolf::kAllRoles) {
    for (int it = 1; it < 6; ++it) EXPECT_EQ(sched.k(r, it + 1), sched.k(r, it) + 1);
  }
}

TEST(Catalog, BuildRecoversBlobs) {
  const SynthSpec spec{.dim = 12, .per_blob = 20, .spread = 0.1, .iterations = 3, .seed = 1};
  const auto recs = synth_corpus(spec);
  const std::vector<Role> roles(werewolf::kAllRoles.begin(), werewolf::kAllRoles.end());
  for (int it = 1; it <= 3; ++it) {
    const auto cats = build_catalogs(recs, spec.schedule, it, 5, roles);
    for (Role role : roles) {
      const auto& cat = cats.at(role);
      EXPECT_EQ(cat.k, spec.schedule.k(role, it));
      EXPECT_EQ(cat.iteration, it);
      for (int c = 0; c < cat.k; ++c) {
        ASSERT_GE(cat.exemplars[c].size(), 1u);
        EXPECT_LE(cat.exemplars[c].size(), static_cast<std::size_t>(kDefaultExemplars));
        EXPECT_EQ(assign(cat.exemplar_embeddings[c][0], cat), c);
      }
      // Records of one synthetic blob land in one cluster, and blobs do not share clusters.
      std::map<std::string, std::set<int>> blob_clusters;
      std::set<int> used;
      for (const auto& r : recs) {
        if (r.role != role || r.iteration > it) continue;
        const std::string blob = r.id.substr(0, r.id.rfind('-'));
        const std::string key = blob.substr(blob.rfind('-') + 1);
        blob_clusters[key].insert(assign(r.embedding, cat));
      }
      for (const auto& [blob, cl] : blob_clusters) {
        EXPECT_EQ(cl.size(), 1u) << blob;
        used.insert(*cl.begin());
      }
      EXPECT_EQ(static_cast<int>(used.size()), cat.k);
    }
  }
}

TEST(Catalog, InsufficientData) {
  std::vector<UtteranceRecord> recs;
  for (int i = 0; i < 4; ++i) {
    recs.push_back({.id = "s" + std::to_string(i), .role = Role::kSeer, .iteration = 1, .text = "same",
                    .embedding = {1.0, 2.0}});
  }
  EXPECT_EQ(code_of([&] { build_catalogs(recs, {}, 1, 0, {Role::kSeer}); }), Errc::kInsufficientData);
  EXPECT_EQ(code_of([&] { build_catalogs(recs, {}, 1, 0, {Role::kDoctor}); }), Errc::kInsufficientData);
}

TEST(Catalog, AssignExamples) {
  LatentCatalog cat{.k = 3, .centroids = {{0, 0}, {2, 0}, {5, 5}}};
  EXPECT_EQ(assign({5, 5}, cat), 2);
  EXPECT_EQ(assign({1, 0}, cat), 0);
  EXPECT_EQ(code_of([&] { assign({1, 0, 0}, cat); }), Errc::kDimensionMismatch);
}

TEST(Catalog, TrainingAssignmentsAreStable) {
  const SynthSpec spec{.dim = 6, .per_blob = 15, .spread = 0.7, .iterations = 2, .seed = 3};
  const auto recs = synth_corpus(spec);
  std::vector<Vec> pts;
  for (const auto& r : recs) {
    if (r.role == Role::kWerewolf) pts.push_back(r.embedding);
  }
  const auto km = kmeans(pts, 4, 11);
  const LatentCatalog cat{.k = 4, .centroids = km.centroids};
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(assign(pts[i], cat), km.assignments[i]);
}

TEST(Catalog, JsonRoundTrip) {
  const auto recs = synth_corpus({.dim = 3, .per_blob = 6, .iterations = 1, .seed = 2});
  const auto cats = build_catalogs(recs, {}, 1, 0, {Role::kWerewolf, Role::kSeer});
  const auto back = catalogs_from_json(nlohmann::json::parse(catalogs_to_json(cats).dump()));
  EXPECT_EQ(back, cats);
  EXPECT_EQ(code_of([] { catalog_from_json({{"role", "Seer"}}); }), Errc::kSchemaMismatch);
}

}  // namespace
}  // namespace lspo::latent
