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

#include "metafend/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "metafend/error.hpp"

namespace metafend {

using nlohmann::json;

void Episode::validate() const {
  std::set<std::string> ids;
  for (const auto& p : support) {
    if (p.event_id != event_id) {
      throw DataError("episode " + event_id + ": support post " + p.id +
                      " belongs to another event");
    }
    ids.insert(p.id);
  }
  for (const auto& p : query) {
    if (p.event_id != event_id) {
      throw DataError("episode " + event_id + ": query post " + p.id +
                      " belongs to another event");
    }
    if (ids.count(p.id)) {
      throw DataError("episode " + event_id + ": post " + p.id +
                      " is in both support and query");
    }
  }
}

namespace {

Post parse_record(const std::string& line) {
  const json j = json::parse(line);
  if (!j.is_object()) throw DataError("record is not an object");
  auto need_string = [&](const char* key) -> std::string {
    if (!j.contains(key)) throw DataError(std::string("missing field '") + key + "'");
    if (!j[key].is_string()) throw DataError(std::string("field '") + key + "' is not a string");
    return j[key].get<std::string>();
  };
  Post p;
  p.id = need_string("id");
  p.text = need_string("text");
  const auto label = parse_label(need_string("label"));
  if (!label) throw DataError("label must be \"fake\" or \"real\"");
  p.label = *label;
  if (j.contains("event") && !j["event"].is_null()) {
    if (!j["event"].is_string()) throw DataError("field 'event' is not a string");
    p.event_id = j["event"].get<std::string>();
  }
  if (j.contains("visual") && !j["visual"].is_null()) {
    if (!j["visual"].is_array()) throw DataError("field 'visual' is not an array");
    std::vector<double> v;
    for (const auto& x : j["visual"]) {
      if (!x.is_number()) throw DataError("field 'visual' holds a non-number");
      v.push_back(x.get<double>());
    }
    p.visual = std::move(v);
  }
  return p;
}

}  // namespace

std::vector<Post> load_posts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read dataset " + path.string());
  std::vector<Post> posts;
  std::set<std::string> ids;
  std::string errors;
  std::size_t bad = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Post p = parse_record(line);
      if (!ids.insert(p.id).second) throw DataError("duplicate id '" + p.id + "'");
      posts.push_back(std::move(p));
    } catch (const std::exception& e) {
      ++bad;
      errors += "\n  line " + std::to_string(line_no) + ": " + e.what();
    }
  }
  if (bad) {
    throw DataError(path.string() + ": " + std::to_string(bad) +
                    " malformed line(s):" + errors);
  }
  return posts;
}

std::string post_to_json_line(const Post& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  if (p.event_id) j["event"] = *p.event_id;
  j["text"] = p.text;
  if (p.visual) j["visual"] = *p.visual;
  j["label"] = std::string(label_name(p.label));
  return j.dump();
}

void save_posts(const std::filesystem::path& path, const std::vector<Post>& posts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset " + path.string());
  for (const auto& p : posts) out << post_to_json_line(p) << '\n';
}

std::vector<std::size_t> single_pass_cluster(
    const std::vector<std::vector<double>>& features, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("single_pass_cluster: threshold must lie in (0, 1)");
  }
  struct Cluster {
    std::vector<double> centroid;
    std::size_t count = 0;
  };
  std::vector<Cluster> clusters;
  std::vector<std::size_t> assignment;
  assignment.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& x = features[i];
    const double x_norm = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
    if (x_norm == 0.0) {
      throw DataError("single_pass_cluster: row " + std::to_string(i) + " has zero norm");
    }
    std::optional<std::size_t> chosen;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const auto& mu = clusters[c].centroid;
      if (mu.size() != x.size()) {
        throw ShapeError("single_pass_cluster: row " + std::to_string(i) +
                         " has a different width");
      }
      const double mu_norm =
          std::sqrt(std::inner_product(mu.begin(), mu.end(), mu.begin(), 0.0));
      if (mu_norm == 0.0) continue;
      const double cos =
          std::inner_product(x.begin(), x.end(), mu.begin(), 0.0) / (x_norm * mu_norm);
      if (cos >= threshold) {
        chosen = c;
        break;
      }
    }
    if (!chosen) {
      clusters.push_back({x, 1});
      assignment.push_back(clusters.size() - 1);
      continue;
    }
    Cluster& cl = clusters[*chosen];
    cl.count += 1;
    for (std::size_t j = 0; j < x.size(); ++j) {
      cl.centroid[j] += (x[j] - cl.centroid[j]) / static_cast<double>(cl.count);
    }
    assignment.push_back(*chosen);
  }
  return assignment;
}

EventSplit filter_and_split(const std::vector<Post>& posts, std::size_t min_posts,
                            double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("filter_and_split: test_fraction must lie in (0, 1)");
  }
  std::map<std::string, std::vector<Post>> grouped;
  for (const auto& p : posts) {
    if (p.event_id) grouped[*p.event_id].push_back(p);
  }
  std::vector<std::string> kept;
  for (const auto& [id, group] : grouped) {
    if (group.size() >= min_posts) kept.push_back(id);
  }
  if (kept.size() < 2) {
    throw DataError("filter_and_split: " + std::to_string(kept.size()) +
                    " event(s) with at least " + std::to_string(min_posts) +
                    " posts; need 2");
  }
  Rng rng = derive_rng(seed, "split");
  std::shuffle(kept.begin(), kept.end(), rng);
  auto n_test = static_cast<std::size_t>(
      std::lround(test_fraction * static_cast<double>(kept.size())));
  n_test = std::clamp<std::size_t>(n_test, 1, kept.size() - 1);

  EventSplit split;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    EventGroup g{kept[i], std::move(grouped[kept[i]])};
    (i < n_test ? split.test : split.train).push_back(std::move(g));
  }
  return split;
}

EpisodeIndices sample_episode_indices(std::size_t n, std::size_t k,
                                      std::optional<std::size_t> query_size,
                                      Rng& rng) {
  const std::size_t q = query_size.value_or(n >= k ? n - k : 0);
  if (k == 0) throw ConfigError("sample_episode: K must be >= 1");
  if (q == 0 || n < k + q) {
    throw DataError("sample_episode: event has " + std::to_string(n) +
                    " posts, need " + std::to_string(k) + " support + " +
                    std::to_string(std::max<std::size_t>(q, 1)) + " query");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: only the first k + q slots are needed.
  for (std::size_t i = 0; i < k + q; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  EpisodeIndices out;
  out.support.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  out.query.assign(order.begin() + static_cast<std::ptrdiff_t>(k),
                   order.begin() + static_cast<std::ptrdiff_t>(k + q));
  return out;
}

Episode sample_episode(const EventGroup& event, std::size_t k,
                       std::optional<std::size_t> query_size, Rng& rng) {
  const auto idx = sample_episode_indices(event.posts.size(), k, query_size, rng);
  Episode ep;
  ep.event_id = event.event_id;
  for (std::size_t i : idx.support) ep.support.push_back(event.posts[i]);
  for (std::size_t i : idx.query) ep.query.push_back(event.posts[i]);
  ep.validate();
  return ep;
}

void SynthConfig::validate() const {
  if (n_events == 0) throw ConfigError("synth: n_events must be >= 1");
  if (posts_per_event <= 20) {
    throw ConfigError("synth: posts_per_event must exceed 20");
  }
  if (feature_dim == 0) throw ConfigError("synth: feature_dim must be >= 1");
  if (noise < 0.0 || separation < 0.0 || event_spread < 0.0) {
    throw ConfigError("synth: scales must be non-negative");
  }
  if (fixed_fake_ratio && (*fixed_fake_ratio < 0.0 || *fixed_fake_ratio > 1.0)) {
    throw ConfigError("synth: fixed fake ratio must lie in [0, 1]");
  }
  if (!fixed_fake_ratio && (ratio_alpha <= 0.0 || ratio_beta <= 0.0)) {
    throw ConfigError("synth: Beta parameters must be positive");
  }
}

namespace {

std::string render_signs(const std::vector<double>& v) {
  std::string text;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j) text += ' ';
    text += "f" + std::to_string(j) + (v[j] >= 0.0 ? "p" : "n");
  }
  return text;
}

std::string padded(std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*zu", width, value);
  return buf;
}

}  // namespace

std::vector<Post> synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng = derive_rng(cfg.seed, "synth");
  const std::size_t d = cfg.feature_dim;
  std::vector<Post> posts;
  posts.reserve(cfg.n_events * cfg.posts_per_event);
  for (std::size_t e = 0; e < cfg.n_events; ++e) {
    std::vector<double> centre(d);
    std::vector<double> direction(d);
    for (double& v : centre) v = cfg.event_spread * standard_normal(rng);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : direction) {
        v = standard_normal(rng);
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    std::vector<double> fake_proto(d);
    std::vector<double> real_proto(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double offset = 0.5 * cfg.separation * direction[j] / norm;
      fake_proto[j] = centre[j] + offset;
      real_proto[j] = centre[j] - offset;
    }

    double ratio = 0.5;
    if (cfg.fixed_fake_ratio) {
      ratio = *cfg.fixed_fake_ratio;
    } else {
      std::gamma_distribution<double> ga(cfg.ratio_alpha, 1.0);
      std::gamma_distribution<double> gb(cfg.ratio_beta, 1.0);
      const double x = ga(rng);
      const double y = gb(rng);
      ratio = x + y > 0.0 ? x / (x + y) : 0.5;
    }
    const std::size_t n = cfg.posts_per_event;
    const auto n_fake = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(n) + 0.5));
    std::vector<Label> labels(n, Label::kReal);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_fake),
              Label::kFake);
    std::shuffle(labels.begin(), labels.end(), rng);

    const std::string event_id = "event-" + padded(e, 3);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& proto = labels[i] == Label::kFake ? fake_proto : real_proto;
      std::vector<double> x(d);
      for (std::size_t j = 0; j < d; ++j) {
        x[j] = proto[j] + cfg.noise * standard_normal(rng);
      }
      Post p;
      p.id = event_id + "/post-" + padded(i, 3);
      p.event_id = event_id;
      p.text = render_signs(x);
      p.visual = std::move(x);
      p.label = labels[i];
      posts.push_back(std::move(p));
    }
  }
  return posts;
}

Episode case_study_episode() {
  auto vec = [](double x0, double x1) {
    std::vector<double> v(kCaseStudyDim, 0.0);
    v[0] = x0;
    v[1] = x1;
    return v;
  };
  auto post = [&](std::string id, std::string text, std::vector<double> v,
                  Label label) {
    return Post{std::move(id), std::string("case-study"), std::move(text),
                std::move(v), label};
  };
  Episode ep;
  ep.event_id = "case-study";
  ep.support = {
      post("cs-fake-0", "shark swims on flooded highway", vec(3.0, 0.4), Label::kFake),
      post("cs-real-0", "storm surge floods the coast", vec(0.2, 3.0), Label::kReal),
      post("cs-real-1", "officials urge residents to evacuate", vec(0.0, 3.2), Label::kReal),
      post("cs-real-2", "rain bands reach the coast", vec(0.3, 2.8), Label::kReal),
      post("cs-real-3", "power outages reported downtown", vec(0.1, 3.1), Label::kReal),
  };
  ep.query = {
      post("cs-query", "shark spotted swimming on highway", vec(2.8, 1.4), Label::kFake),
  };
  ep.validate();
  return ep;
}

Example encode_post(const Post& post, const Vocab& vocab, std::size_t max_len) {
  return Example{post.id, tokenize(post.text, vocab, max_len), post.visual, post.label};
}

std::vector<Example> encode_posts(const std::vector<Post>& posts,
                                  const Vocab& vocab, std::size_t max_len) {
  std::vector<Example> out;
  out.reserve(posts.size());
  for (const auto& p : posts) out.push_back(encode_post(p, vocab, max_len));
  return out;
}

std::string file_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(buffer.str())));
  return hex;
}

}  // namespace metafend
