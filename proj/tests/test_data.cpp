// Copyright 2026 The metafend Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "metafend/case_study.hpp"
#include "metafend/data.hpp"
#include "metafend/error.hpp"

using namespace metafend;

namespace {

std::vector<Post> grouped_posts(const std::vector<std::size_t>& sizes) {
  std::vector<Post> posts;
  for (std::size_t e = 0; e < sizes.size(); ++e) {
    for (std::size_t i = 0; i < sizes[e]; ++i) {
      Post p;
      p.id = "e" + std::to_string(e) + "p" + std::to_string(i);
      p.event_id = "e" + std::to_string(e);
      p.text = "post text";
      p.label = i % 3 == 0 ? Label::kFake : Label::kReal;
      posts.push_back(p);
    }
  }
  return posts;
}

// Straightforward restatement of the scan rule, kept separate from the
// library code on purpose.
std::vector<std::size_t> brute_cluster(const std::vector<std::vector<double>>& rows,
                                       double threshold) {
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t chosen = members.size();
    for (std::size_t c = 0; c < members.size(); ++c) {
      std::vector<double> mean(rows[i].size(), 0.0);
      for (std::size_t m : members[c]) {
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += rows[m][j] / members[c].size();
      }
      double dot = 0, na = 0, nb = 0;
      for (std::size_t j = 0; j < mean.size(); ++j) {
        dot += mean[j] * rows[i][j];
        na += mean[j] * mean[j];
        nb += rows[i][j] * rows[i][j];
      }
      if (dot / std::sqrt(na * nb) >= threshold) {
        chosen = c;
        break;
      }
    }
    if (chosen == members.size()) members.emplace_back();
    members[chosen].push_back(i);
    out.push_back(chosen);
  }
  return out;
}

}  // namespace

TEST_CASE("loader: empty file, round trip, malformed lines") {
  auto dir = testutil::scratch_dir("loader");
  { std::ofstream(dir / "empty.jsonl"); }
  CHECK(load_posts(dir / "empty.jsonl").empty());

  std::vector<Post> posts(2);
  posts[0] = {"a", "ev", "some text", std::vector<double>{0.5, -1.25}, Label::kFake};
  posts[1] = {"b", std::nullopt, "other", std::nullopt, Label::kReal};
  save_posts(dir / "round.jsonl", posts);
  CHECK(load_posts(dir / "round.jsonl") == posts);

  {
    std::ofstream out(dir / "bad.jsonl");
    out << R"({"id":"x","text":"t","label":"fake"})" << "\n";
    out << R"({"id":"y","text":"t"})" << "\n";
    out << "not json\n";
    out << R"({"id":"x","text":"t","label":"real"})" << "\n";
  }
  try {
    load_posts(dir / "bad.jsonl");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("line 2") != std::string::npos);
    CHECK(what.find("label") != std::string::npos);
    CHECK(what.find("line 3") != std::string::npos);
    CHECK(what.find("line 4") != std::string::npos);
    CHECK(what.find("line 1:") == std::string::npos);
  }
  CHECK_THROWS_AS(load_posts(dir / "missing.jsonl"), DataError);
}

TEST_CASE("single-pass clustering") {
  CHECK(single_pass_cluster({{1, 2}, {1, 2}}, 0.9) == std::vector<std::size_t>{0, 0});
  CHECK(single_pass_cluster({{1, 0}, {0, 1}}, 0.5) == std::vector<std::size_t>{0, 1});
  CHECK_THROWS_AS(single_pass_cluster({{1, 0}, {0, 0}}, 0.5), DataError);
  CHECK_THROWS_AS(single_pass_cluster({{1, 0}}, 1.0), ConfigError);

  Rng rng(4);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 20; ++i) {
    auto t = testutil::random_tensor({3}, rng, -1, 1);
    rows.push_back(t.values());
  }
  for (double threshold : {0.2, 0.5, 0.8}) {
    CHECK(single_pass_cluster(rows, threshold) == brute_cluster(rows, threshold));
  }
}

TEST_CASE("event filter boundary and disjoint split") {
  const auto posts = grouped_posts({20, 21, 25, 30, 22});
  const EventSplit split = filter_and_split(posts, kMinEventPosts, 0.25, 3);
  std::set<std::string> train, test;
  for (const auto& g : split.train) train.insert(g.event_id);
  for (const auto& g : split.test) test.insert(g.event_id);
  CHECK(train.size() + test.size() == 4);
  CHECK(train.count("e0") + test.count("e0") == 0);
  CHECK(test.size() == 1);
  for (const auto& id : test) CHECK(train.count(id) == 0);

  const EventSplit again = filter_and_split(posts, kMinEventPosts, 0.25, 3);
  REQUIRE(again.test.size() == split.test.size());
  CHECK(again.test[0].event_id == split.test[0].event_id);
  CHECK(again.train.size() == split.train.size());

  CHECK_THROWS_AS(filter_and_split(grouped_posts({21, 20}), kMinEventPosts, 0.5, 0), DataError);
}

TEST_CASE("episode sampling") {
  Rng rng(2);
  const auto full = sample_episode_indices(20, 5, 15, rng);
  CHECK(full.support.size() == 5);
  CHECK(full.query.size() == 15);
  std::set<std::size_t> all(full.support.begin(), full.support.end());
  all.insert(full.query.begin(), full.query.end());
  CHECK(all.size() == 20);

  const auto ten = sample_episode_indices(30, 10, std::nullopt, rng);
  CHECK(ten.support.size() == 10);
  CHECK(ten.query.size() == 20);
  CHECK_THROWS_AS(sample_episode_indices(10, 5, 6, rng), DataError);

  Rng a(77), b(77);
  CHECK(sample_episode_indices(24, 5, 10, a).query == sample_episode_indices(24, 5, 10, b).query);

  const auto posts = grouped_posts({24});
  Rng r(5);
  const Episode ep = sample_episode({"e0", posts}, 5, std::nullopt, r);
  CHECK_NOTHROW(ep.validate());
  Episode broken = ep;
  broken.query.push_back(broken.support[0]);
  CHECK_THROWS_AS(broken.validate(), DataError);
}

TEST_CASE("synthetic generator") {
  SynthConfig cfg;
  cfg.n_events = 6;
  cfg.noise = 0.0;
  const auto clean = synth_generate(cfg);
  CHECK(clean.size() == 6 * cfg.posts_per_event);
  std::map<std::string, std::map<Label, std::vector<double>>> protos;
  for (const auto& p : clean) {
    auto& slot = protos[*p.event_id][p.label];
    if (slot.empty()) slot = *p.visual;
    CHECK(*p.visual == slot);
  }

  SynthConfig half = cfg;
  half.noise = 1.0;
  half.fixed_fake_ratio = 0.5;
  half.posts_per_event = 23;
  std::map<std::string, int> fakes;
  for (const auto& p : synth_generate(half)) fakes[*p.event_id] += p.label == Label::kFake;
  for (const auto& [id, n] : fakes) CHECK((n == 11 || n == 12));

  SynthConfig def;
  def.seed = 12;
  const auto a = synth_generate(def);
  const auto b = synth_generate(def);
  std::string ja, jb;
  for (const auto& p : a) ja += post_to_json_line(p) + "\n";
  for (const auto& p : b) jb += post_to_json_line(p) + "\n";
  CHECK(ja == jb);

  std::map<std::string, double> ratio;
  for (const auto& p : a) ratio[*p.event_id] += (p.label == Label::kFake) / double(def.posts_per_event);
  std::vector<double> r;
  for (const auto& [id, v] : ratio) r.push_back(v);
  double m = 0;
  for (double v : r) m += v / r.size();
  double var = 0;
  for (double v : r) var += (v - m) * (v - m);
  CHECK(var > 0.0);

  SynthConfig bad;
  bad.posts_per_event = 20;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("case study fixture geometry") {
  const Episode ep = case_study_episode();
  CHECK_NOTHROW(ep.validate());
  int fake = 0, real = 0;
  for (const auto& p : ep.support) (p.label == Label::kFake ? fake : real)++;
  CHECK(fake == 1);
  CHECK(real == 4);
  REQUIRE(ep.query.size() == 1);
  CHECK(ep.query[0].label == Label::kFake);

  // weights computed here from the raw vectors
  const auto& q = *ep.query[0].visual;
  std::vector<double> scores;
  for (const auto& p : ep.support) {
    double s = 0;
    for (std::size_t j = 0; j < q.size(); ++j) s += q[j] * (*p.visual)[j];
    scores.push_back(std::exp(s / std::sqrt(double(q.size()))));
  }
  double z = 0;
  for (double s : scores) z += s;
  std::size_t best = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  CHECK(ep.support[best].label == Label::kFake);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i != best) CHECK(scores[i] < scores[best]);
  }
  std::vector<double> ctx(q.size(), 0.0), real_mean(q.size(), 0.0), fake_item;
  for (std::size_t i = 0; i < ep.support.size(); ++i) {
    const auto& v = *ep.support[i].visual;
    for (std::size_t j = 0; j < q.size(); ++j) ctx[j] += scores[i] / z * v[j];
    if (ep.support[i].label == Label::kReal) {
      for (std::size_t j = 0; j < q.size(); ++j) real_mean[j] += v[j] / 4.0;
    } else {
      fake_item = v;
    }
  }
  double d_real = 0, d_fake = 0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    d_real += (ctx[j] - real_mean[j]) * (ctx[j] - real_mean[j]);
    d_fake += (ctx[j] - fake_item[j]) * (ctx[j] - fake_item[j]);
  }
  CHECK(d_real < d_fake);

  const FixtureGeometry geo = fixture_geometry(ep);
  CHECK(geo.argmax == best);
  CHECK(geo.distance_to_real_mean == doctest::Approx(std::sqrt(d_real)).epsilon(1e-12));
}
