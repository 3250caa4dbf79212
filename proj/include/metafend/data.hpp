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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "metafend/label.hpp"
#include "metafend/model.hpp"
#include "metafend/rng.hpp"
#include "metafend/vocab.hpp"

namespace metafend {

struct Post {
  std::string id;
  std::optional<std::string> event_id;
  std::string text;
  std::optional<std::vector<double>> visual;
  Label label = Label::kReal;

  friend bool operator==(const Post&, const Post&) = default;
};

struct Episode {
  std::string event_id;
  std::vector<Post> support;
  std::vector<Post> query;

  // Throws DataError unless support and query are disjoint by post id and
  // every post belongs to event_id.
  void validate() const;
};

struct EventGroup {
  std::string event_id;
  std::vector<Post> posts;
};

struct EventSplit {
  std::vector<EventGroup> train;
  std::vector<EventGroup> test;
};

// Newline-delimited JSON records: {"id", "event"?, "text", "visual"?, "label"}.
// Every malformed line is reported, with its line number, in one DataError.
std::vector<Post> load_posts(const std::filesystem::path& path);
void save_posts(const std::filesystem::path& path, const std::vector<Post>& posts);
std::string post_to_json_line(const Post& post);

// Scans rows in order; each joins the first cluster whose running-mean
// centroid has cosine similarity >= threshold, else opens a new cluster.
// Returns the cluster index of every row.
std::vector<std::size_t> single_pass_cluster(
    const std::vector<std::vector<double>>& features, double threshold);

inline constexpr std::size_t kMinEventPosts = 21;

// Groups posts by event (posts without one are ignored), drops events with
// fewer than min_posts posts, then splits the surviving event ids with a
// seeded shuffle so train and test never share an event.
EventSplit filter_and_split(const std::vector<Post>& posts, std::size_t min_posts,
                            double test_fraction, std::uint64_t seed);

struct EpisodeIndices {
  std::vector<std::size_t> support;
  std::vector<std::size_t> query;
};

// Uniform sample without replacement. A missing query_size takes every
// post not used for support.
EpisodeIndices sample_episode_indices(std::size_t n, std::size_t k,
                                      std::optional<std::size_t> query_size,
                                      Rng& rng);

Episode sample_episode(const EventGroup& event, std::size_t k,
                       std::optional<std::size_t> query_size, Rng& rng);

struct SynthConfig {
  std::size_t n_events = 50;
  std::size_t posts_per_event = 24;
  std::size_t feature_dim = 16;
  // Distance between an event's two class prototypes.
  double separation = 4.0;
  // Spread of event centres around the origin.
  double event_spread = 0.0;
  double noise = 1.0;
  // Per-event fake ratio ~ Beta(alpha, beta) unless fixed_fake_ratio is set.
  double ratio_alpha = 0.7;
  double ratio_beta = 0.7;
  std::optional<double> fixed_fake_ratio;
  std::uint64_t seed = 0;

  void validate() const;
};

// Per event: a random centre, two class prototypes either side of it along a
// random direction, a fake ratio, and posts drawn as prototype + Gaussian
// noise. The text of a post spells out the sign of every feature.
std::vector<Post> synth_generate(const SynthConfig& config);

// Fixed 5-shot episode: four mutually close real posts, one fake post, and
// a fake query that lies next to the fake post and far from the reals.
Episode case_study_episode();
inline constexpr std::size_t kCaseStudyDim = 16;

Example encode_post(const Post& post, const Vocab& vocab, std::size_t max_len);
std::vector<Example> encode_posts(const std::vector<Post>& posts,
                                  const Vocab& vocab, std::size_t max_len);

// FNV-1a over the bytes of a file, as 16 hex digits.
std::string file_fingerprint(const std::filesystem::path& path);

}  // namespace metafend
