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

#include "metafend/case_study.hpp"

#include <cmath>
#include <cstdio>

#include "metafend/error.hpp"
#include "metafend/experiment.hpp"

namespace metafend {

namespace {

std::vector<double> visual_of(const Post& p) {
  if (!p.visual) throw DataError("case study: post " + p.id + " has no visual vector");
  return *p.visual;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(ss);
}

Tensor identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

// [top; bottom] where each block is n x n and either identity or zero.
Tensor stacked(std::size_t n, bool top, bool bottom) {
  Tensor t({2 * n, n});
  for (std::size_t i = 0; i < n; ++i) {
    if (top) t(i, i) = 1.0;
    if (bottom) t(n + i, i) = 1.0;
  }
  return t;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.6f", i ? " " : "", v[i]);
    out += buf;
  }
  return out;
}

double total(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

std::string describe(const std::string& title, const CaseStudyPrediction& p,
                     const Episode& episode) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s: mode=%s predicted=%s p_fake=%.6f p_real=%.6f\n",
                title.c_str(), std::string(mode_name(p.mode)).c_str(),
                std::string(label_name(p.predicted)).c_str(), p.p_fake, p.p_real);
  std::string out = buf;
  std::snprintf(buf, sizeof(buf), "  attention sum=%.6f weights=", total(p.weights));
  out += buf + join(p.weights) + "\n";
  if (p.selected) {
    out += "  selected support[" + std::to_string(*p.selected) + "] (" +
           std::string(label_name(episode.support[*p.selected].label)) + ")\n";
  }
  return out;
}

}  // namespace

FixtureGeometry fixture_geometry(const Episode& episode) {
  if (episode.support.empty() || episode.query.empty()) {
    throw DataError("case study: episode needs support and query items");
  }
  const auto q = visual_of(episode.query.front());
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.size()));
  FixtureGeometry geo;
  std::vector<double> scores;
  double top = -INFINITY;
  for (const auto& p : episode.support) {
    const auto k = visual_of(p);
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += q[i] * k[i];
    scores.push_back(s * scale);
    top = std::max(top, scores.back());
  }
  double z = 0.0;
  for (double& s : scores) z += (s = std::exp(s - top));
  for (double s : scores) geo.weights.push_back(s / z);
  geo.argmax = static_cast<std::size_t>(
      std::max_element(geo.weights.begin(), geo.weights.end()) - geo.weights.begin());

  geo.soft_context.assign(q.size(), 0.0);
  std::vector<double> real_mean(q.size(), 0.0);
  std::vector<double> fake_item;
  std::size_t n_real = 0;
  for (std::size_t i = 0; i < episode.support.size(); ++i) {
    const auto k = visual_of(episode.support[i]);
    for (std::size_t j = 0; j < q.size(); ++j) geo.soft_context[j] += geo.weights[i] * k[j];
    if (episode.support[i].label == Label::kReal) {
      for (std::size_t j = 0; j < q.size(); ++j) real_mean[j] += k[j];
      ++n_real;
    } else if (fake_item.empty()) {
      fake_item = k;
    }
  }
  if (n_real == 0 || fake_item.empty()) {
    throw DataError("case study: support needs both labels");
  }
  for (double& v : real_mean) v /= static_cast<double>(n_real);
  geo.distance_to_real_mean = distance(geo.soft_context, real_mean);
  geo.distance_to_fake = distance(geo.soft_context, fake_item);
  return geo;
}

ReferenceModel case_study_reference_model(const Episode& episode) {
  const std::size_t d = visual_of(episode.query.front()).size();
  if (d < 4) throw ConfigError("case study: reference model needs at least 4 dimensions");
  std::vector<std::string> texts;
  for (const auto& p : episode.support) texts.push_back(p.text);
  for (const auto& p : episode.query) texts.push_back(p.text);

  ReferenceModel ref;
  ref.vocab = build_vocab(texts);
  ref.model.vocab_size = ref.vocab.size();
  ref.model.emb_dim = 4;
  ref.model.n_filters = 2;
  ref.model.max_window = 2;
  ref.model.max_len = 8;
  ref.model.feature_dim = d;
  ref.model.dim = d;
  ref.model.visual_dim = d;
  ref.model.head = HeadKind::kLabelEmbedding;
  ref.model.validate();

  for (const auto& [name, shape] : expected_shapes(ref.model)) {
    ref.params.insert(name, Tensor::zeros(shape));
  }
  auto set = [&](const std::string& name, Tensor t) {
    ref.params = ref.params.with(name, std::move(t));
  };
  set(pname::kVisualProjW, identity(d));
  set(pname::kFuseW, stacked(d, false, true));
  set(pname::kWq, identity(d));
  set(pname::kWk, identity(d));
  set(pname::kWv, stacked(d, true, true));
  set(pname::kCtxW, identity(d));
  set(pname::kDetW, stacked(d, true, false));
  Tensor fake({1, d});
  fake[2] = 2.0;
  Tensor real({1, d});
  real[3] = 2.0;
  set(pname::kLabelFake, std::move(fake));
  set(pname::kLabelReal, std::move(real));
  validate_params(ref.params, ref.model);
  return ref;
}

CaseStudyPrediction predict_case_study(const ParamSet& params, const ModelConfig& model,
                                       const Vocab& vocab, const Episode& episode,
                                       Mode mode, bool adapt_first) {
  TrainConfig config;
  config.mode = mode;
  const auto support = encode_posts(episode.support, vocab, model.max_len);
  const auto query = encode_posts({episode.query.front()}, vocab, model.max_len);
  const auto preds = predict_episode(params, model, config, support, query,
                                     config.tau_end, adapt_first);
  const QueryPrediction& p = preds.front();
  return {mode, p.predicted, p.p_fake, p.p_real, p.weights, p.selected, p.context};
}

CaseStudyReport run_case_study(int train_epochs, std::uint64_t seed) {
  const Episode episode = case_study_episode();
  CaseStudyReport report;
  report.geometry = fixture_geometry(episode);

  const ReferenceModel ref = case_study_reference_model(episode);
  report.reference_hard = predict_case_study(ref.params, ref.model, ref.vocab, episode,
                                             Mode::kMetafend, false);
  report.reference_soft = predict_case_study(ref.params, ref.model, ref.vocab, episode,
                                             Mode::kSoftAttn, false);

  std::string& out = report.text;
  std::size_t n_fake = 0;
  for (const auto& p : episode.support) n_fake += p.label == Label::kFake;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "fixture: %zu support posts (%zu fake, %zu real), query label=%s\n",
                episode.support.size(), n_fake, episode.support.size() - n_fake,
                std::string(label_name(episode.query.front().label)).c_str());
  out += buf;
  const auto& geo = report.geometry;
  std::snprintf(buf, sizeof(buf), "feature attention: sum=%.6f weights=", total(geo.weights));
  out += buf + join(geo.weights) + "\n";
  out += "largest weight: support[" + std::to_string(geo.argmax) + "] (" +
         std::string(label_name(episode.support[geo.argmax].label)) + ")\n";
  std::snprintf(buf, sizeof(buf),
                "soft context distance: real_mean=%.6f fake_item=%.6f closer_to=%s\n",
                geo.distance_to_real_mean, geo.distance_to_fake,
                geo.distance_to_real_mean < geo.distance_to_fake ? "real" : "fake");
  out += buf;
  out += describe("reference hard", report.reference_hard, episode);
  out += describe("reference soft", report.reference_soft, episode);

  if (train_epochs > 0) {
    SynthConfig synth;
    synth.n_events = 20;
    synth.feature_dim = kCaseStudyDim;
    synth.fixed_fake_ratio = 0.2;
    synth.seed = seed;
    const auto posts = synth_generate(synth);
    for (Mode mode : {Mode::kMetafend, Mode::kSoftAttn}) {
      const Experiment ex = prepare_experiment(posts, ModelConfig{}, mode, seed);
      TrainConfig config;
      config.mode = mode;
      config.epochs = train_epochs;
      config.seed = seed;
      const TrainResult trained =
          meta_train(ex.train, initial_params(ex, seed), ex.model, config);
      auto pred = predict_case_study(trained.params, ex.model, ex.vocab, episode, mode, true);
      out += describe(std::string("trained ") + (mode == Mode::kMetafend ? "hard" : "soft") +
                          " (" + std::to_string(train_epochs) + " epochs)",
                      pred, episode);
      (mode == Mode::kMetafend ? report.trained_hard : report.trained_soft) = std::move(pred);
    }
  }
  return report;
}

}  // namespace metafend
