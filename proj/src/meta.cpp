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

#include "metafend/meta.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>

#include "metafend/aggregator.hpp"
#include "metafend/data.hpp"
#include "metafend/detector.hpp"
#include "metafend/error.hpp"
#include "metafend/rng.hpp"

namespace metafend {

std::string_view grad_order_name(GradOrder order) {
  return order == GradOrder::kSecond ? "second" : "first";
}

std::optional<GradOrder> parse_grad_order(std::string_view name) {
  if (name == "first") return GradOrder::kFirst;
  if (name == "second") return GradOrder::kSecond;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (!(inner_lr > 0.0)) throw ConfigError("inner learning rate must be > 0");
  if (!(outer_lr > 0.0)) throw ConfigError("outer learning rate must be > 0");
  if (inner_steps < 1) throw ConfigError("inner steps must be >= 1");
  if (k < 2) throw ConfigError("K must be >= 2 for leave-one-out adaptation");
  if (meta_batch == 0) throw ConfigError("meta-batch size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (query_size == 0) throw ConfigError("query size must be >= 1");
  if (!(tau_start > 0.0) || !(tau_end > 0.0)) {
    throw ConfigError("temperatures must be > 0");
  }
  if (threads == 0) throw ConfigError("threads must be >= 1");
}

double TrainConfig::tau_at(int epoch) const {
  return aggregate::temperature(epoch, {tau_start, tau_end, std::max(1, epochs - 1)});
}

std::vector<LooSplit> leave_one_out_splits(std::size_t k) {
  if (k < 2) {
    throw ConfigError("leave_one_out_splits: K = " + std::to_string(k) +
                      " leaves an empty context");
  }
  std::vector<LooSplit> splits(k);
  for (std::size_t i = 0; i < k; ++i) {
    splits[i].target = i;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) splits[i].context.push_back(j);
    }
  }
  return splits;
}

namespace {

std::vector<ad::NodeId> features_of(ad::Graph& g, const BoundParams& p,
                                    const ModelConfig& model,
                                    std::span<const Example> examples) {
  std::vector<ad::NodeId> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(example_features(g, p, model, ex));
  return out;
}

ad::NodeId mean_of(ad::Graph& g, const std::vector<ad::NodeId>& terms) {
  ad::NodeId total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = g.add(total, terms[i]);
  return g.scale(total, 1.0 / static_cast<double>(terms.size()));
}

LossGrad run_loss(const ParamSet& theta,
                  const std::function<ad::NodeId(ad::Graph&, const BoundParams&)>& build) {
  ad::Graph g;
  const BoundParams p(g, theta);
  const ad::NodeId loss = build(g, p);
  return {g.value(loss)[0], g.parameter_gradients(loss)};
}

// base + scale * v
ParamSet displaced(const ParamSet& base, const GradMap& v, double scale) {
  ParamSet out = base;
  for (const auto& [name, dir] : v) {
    Tensor t = base.at(name);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] += scale * dir[i];
    out = out.with(name, std::move(t));
  }
  return out;
}

double norm_of(const GradMap& v) {
  double ss = 0.0;
  for (const auto& [name, t] : v) {
    for (double x : t.data()) ss += x * x;
  }
  return std::sqrt(ss);
}

}  // namespace

ad::NodeId support_loss(ad::Graph& g, const BoundParams& p,
                        const ModelConfig& model, Mode mode,
                        std::span<const Example> support, const Sampling& sampling) {
  const auto splits = leave_one_out_splits(support.size());
  const auto feats = features_of(g, p, model, support);
  std::vector<ad::NodeId> terms;
  terms.reserve(splits.size());
  for (const auto& split : splits) {
    std::vector<ad::NodeId> ctx;
    std::vector<Label> labels;
    for (std::size_t j : split.context) {
      ctx.push_back(feats[j]);
      labels.push_back(support[j].label);
    }
    const Prediction pred =
        predict(g, p, model, mode, feats[split.target], ctx, labels, sampling);
    terms.push_back(detect::nll_loss(g, pred.probs, support[split.target].label));
  }
  return mean_of(g, terms);
}

ad::NodeId query_loss(ad::Graph& g, const BoundParams& p,
                      const ModelConfig& model, Mode mode,
                      std::span<const Example> support,
                      std::span<const Example> query, const Sampling& sampling) {
  if (query.empty()) throw DataError("query_loss: empty query set");
  if (support.empty()) throw DataError("query_loss: empty support set");
  std::vector<ad::NodeId> ctx;
  std::vector<Label> labels;
  if (mode != Mode::kMaml) ctx = features_of(g, p, model, support);
  for (const auto& ex : support) labels.push_back(ex.label);
  if (mode == Mode::kMaml) {
    // Context is ignored by this mode; any placeholder of the right length works.
    ctx.assign(support.size(), ad::NodeId{});
  }
  std::vector<ad::NodeId> terms;
  terms.reserve(query.size());
  for (const auto& ex : query) {
    const ad::NodeId target = example_features(g, p, model, ex);
    const Prediction pred = predict(g, p, model, mode, target, ctx, labels, sampling);
    terms.push_back(detect::nll_loss(g, pred.probs, ex.label));
  }
  return mean_of(g, terms);
}

LossGrad support_loss_grad(const ParamSet& theta, const ModelConfig& model,
                           Mode mode, std::span<const Example> support,
                           const Sampling& sampling) {
  return run_loss(theta, [&](ad::Graph& g, const BoundParams& p) {
    return support_loss(g, p, model, mode, support, sampling);
  });
}

LossGrad query_loss_grad(const ParamSet& theta, const ModelConfig& model,
                         Mode mode, std::span<const Example> support,
                         std::span<const Example> query, const Sampling& sampling) {
  return run_loss(theta, [&](ad::Graph& g, const BoundParams& p) {
    return query_loss(g, p, model, mode, support, query, sampling);
  });
}

ParamSet adapt(const ParamSet& theta, const ModelConfig& model,
               const TrainConfig& config, std::span<const Example> support,
               double tau, Rng* noise, double* first_loss) {
  if (config.inner_steps < 1) throw ConfigError("inner steps must be >= 1");
  if (config.mode == Mode::kCnpMean) {
    if (first_loss) {
      ad::Graph g;
      const BoundParams p(g, theta);
      *first_loss = g.value(support_loss(g, p, model, config.mode, support, {tau, noise}))[0];
    }
    return theta;
  }
  ParamSet current = theta;
  for (int step = 0; step < config.inner_steps; ++step) {
    const LossGrad lg = support_loss_grad(current, model, config.mode, support, {tau, noise});
    if (step == 0 && first_loss) *first_loss = lg.loss;
    current = sgd_step(current, lg.grads, config.inner_lr);
  }
  return current;
}

EpisodeGrad meta_gradient(const ParamSet& theta, const ModelConfig& model,
                          const TrainConfig& config,
                          std::span<const Example> support,
                          std::span<const Example> query, double tau, Rng* noise) {
  EpisodeGrad out;
  const bool adapts = config.mode != Mode::kCnpMean;
  std::vector<ParamSet> path{theta};
  std::vector<Rng> noise_states;
  if (adapts) {
    for (int step = 0; step < config.inner_steps; ++step) {
      if (noise) noise_states.push_back(*noise);
      const LossGrad lg =
          support_loss_grad(path.back(), model, config.mode, support, {tau, noise});
      if (step == 0) out.support_loss = lg.loss;
      path.push_back(sgd_step(path.back(), lg.grads, config.inner_lr));
    }
  } else {
    ad::Graph g;
    const BoundParams p(g, theta);
    out.support_loss =
        g.value(support_loss(g, p, model, config.mode, support, {tau, noise}))[0];
  }

  LossGrad q = query_loss_grad(path.back(), model, config.mode, support, query,
                               {tau, noise});
  out.query_loss = q.loss;
  GradMap v = std::move(q.grads);

  if (adapts && config.grad_order == GradOrder::kSecond) {
    constexpr double kProbe = 1e-4;
    for (int step = config.inner_steps - 1; step >= 0; --step) {
      const double norm = norm_of(v);
      if (norm == 0.0) break;
      const auto& base = path[static_cast<std::size_t>(step)];
      auto probe = [&](double sign) {
        const ParamSet shifted = displaced(base, v, sign * kProbe / norm);
        if (noise) {
          Rng replay = noise_states[static_cast<std::size_t>(step)];
          return support_loss_grad(shifted, model, config.mode, support, {tau, &replay});
        }
        return support_loss_grad(shifted, model, config.mode, support, {tau, nullptr});
      };
      const GradMap plus = probe(1.0).grads;
      const GradMap minus = probe(-1.0).grads;
      // v <- v - beta * H v, with H v ~ (g+ - g-) / (2 probe) * |v|.
      const double w = config.inner_lr * norm / (2.0 * kProbe);
      add_into(v, plus, -w);
      add_into(v, minus, w);
    }
  }
  out.grads = std::move(v);
  return out;
}

std::string format_epoch_log(const EpochLog& log) {
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "epoch=%d support_loss=%.6f query_loss=%.6f tau=%.6f wall_ms=%.1f",
                log.epoch, log.support_loss, log.query_loss, log.tau, log.wall_ms);
  return buf;
}

namespace {

struct EpisodeJob {
  const EventData* event = nullptr;
  std::vector<Example> support;
  std::vector<Example> query;
  std::size_t index = 0;
};

std::uint64_t hash_episode(std::uint64_t h, const EpisodeJob& job) {
  h = fnv1a64(job.event->event_id, h);
  h = fnv1a64("|s", h);
  for (const auto& ex : job.support) h = fnv1a64(ex.id + ";", h);
  h = fnv1a64("|q", h);
  for (const auto& ex : job.query) h = fnv1a64(ex.id + ";", h);
  return h;
}

}  // namespace

TrainResult meta_train(const std::vector<EventData>& events, const ParamSet& init,
                       const ModelConfig& model, const TrainConfig& config,
                       const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (events.empty()) throw DataError("meta_train: no training events");
  for (const auto& e : events) {
    if (e.examples.size() < config.k + 1) {
      throw DataError("meta_train: event " + e.event_id + " has " +
                      std::to_string(e.examples.size()) + " posts, need at least " +
                      std::to_string(config.k + 1));
    }
  }
  validate_params(init, model);

  TrainResult result;
  result.params = init;
  result.episode_hash = fnv1a64("episodes");
  OptimizerState state = OptimizerState::zeros_like(init);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const double tau = config.tau_at(epoch);
    Rng data_rng = derive_rng(config.seed, "data", {static_cast<std::uint64_t>(epoch)});
    std::vector<std::size_t> order(events.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), data_rng);

    double support_total = 0.0;
    double query_total = 0.0;
    std::size_t episode_count = 0;
    for (std::size_t start = 0; start < order.size(); start += config.meta_batch) {
      const std::size_t stop = std::min(order.size(), start + config.meta_batch);
      std::vector<EpisodeJob> jobs;
      for (std::size_t b = start; b < stop; ++b) {
        const EventData& ev = events[order[b]];
        const std::size_t n = ev.examples.size();
        const auto idx = sample_episode_indices(
            n, config.k, std::min(config.query_size, n - config.k), data_rng);
        EpisodeJob job;
        job.event = &ev;
        job.index = b;
        for (std::size_t i : idx.support) job.support.push_back(ev.examples[i]);
        for (std::size_t i : idx.query) job.query.push_back(ev.examples[i]);
        result.episode_hash = hash_episode(result.episode_hash, job);
        jobs.push_back(std::move(job));
      }

      std::vector<EpisodeGrad> grads(jobs.size());
      auto run = [&](std::size_t j) {
        Rng noise = derive_rng(config.seed, "noise",
                               {static_cast<std::uint64_t>(epoch), jobs[j].index});
        grads[j] = meta_gradient(result.params, model, config, jobs[j].support,
                                 jobs[j].query, tau, &noise);
      };
      if (config.threads > 1 && jobs.size() > 1) {
        std::vector<std::future<void>> workers;
        const std::size_t n_workers = std::min<std::size_t>(config.threads, jobs.size());
        for (std::size_t w = 0; w < n_workers; ++w) {
          workers.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t j = w; j < jobs.size(); j += n_workers) run(j);
          }));
        }
        for (auto& f : workers) f.get();
      } else {
        for (std::size_t j = 0; j < jobs.size(); ++j) run(j);
      }

      GradMap total;
      const double weight = 1.0 / static_cast<double>(jobs.size());
      for (const auto& eg : grads) {
        add_into(total, eg.grads, weight);
        support_total += eg.support_loss;
        query_total += eg.query_loss;
      }
      episode_count += jobs.size();
      auto [next, next_state] =
          adam_step(state, result.params, total, config.outer_lr);
      result.params = std::move(next);
      state = std::move(next_state);
    }

    EpochLog log;
    log.epoch = epoch;
    log.support_loss = support_total / static_cast<double>(episode_count);
    log.query_loss = query_total / static_cast<double>(episode_count);
    log.tau = tau;
    log.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - started)
                      .count();
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

std::vector<QueryPrediction> predict_episode(const ParamSet& theta,
                                             const ModelConfig& model,
                                             const TrainConfig& config,
                                             std::span<const Example> support,
                                             std::span<const Example> query,
                                             double tau, bool adapt_first) {
  const ParamSet adapted =
      adapt_first ? adapt(theta, model, config, support, tau, nullptr) : theta;
  ad::Graph g;
  const BoundParams p(g, adapted);
  const auto ctx = features_of(g, p, model, support);
  std::vector<Label> labels;
  for (const auto& ex : support) labels.push_back(ex.label);

  std::vector<QueryPrediction> out;
  out.reserve(query.size());
  for (const auto& ex : query) {
    const ad::NodeId target = example_features(g, p, model, ex);
    const Prediction pred =
        predict(g, p, model, config.mode, target, ctx, labels, {tau, nullptr});
    QueryPrediction qp;
    const Tensor& probs = g.value(pred.probs);
    qp.p_fake = probs[0];
    qp.p_real = probs[1];
    qp.predicted = qp.p_fake > qp.p_real ? Label::kFake : Label::kReal;
    if (pred.weights) qp.weights = g.value(*pred.weights).values();
    qp.selected = pred.selected;
    qp.context = g.value(pred.context).values();
    out.push_back(std::move(qp));
  }
  return out;
}

RunMetrics evaluate(const ParamSet& theta, const std::vector<EventData>& test,
                    const ModelConfig& model, const TrainConfig& config,
                    const std::set<std::string>& train_ids) {
  std::string overlap;
  for (const auto& ev : test) {
    if (train_ids.count(ev.event_id)) overlap += " " + ev.event_id;
  }
  if (!overlap.empty()) {
    throw DataError("evaluate: test events also used for training:" + overlap);
  }
  std::vector<EventMetrics> per_event;
  for (const auto& ev : test) {
    Rng rng = derive_rng(config.seed, "eval", {fnv1a64(ev.event_id)});
    const auto idx =
        sample_episode_indices(ev.examples.size(), config.k, std::nullopt, rng);
    std::vector<Example> support;
    std::vector<Example> query;
    for (std::size_t i : idx.support) support.push_back(ev.examples[i]);
    for (std::size_t i : idx.query) query.push_back(ev.examples[i]);
    const auto preds =
        predict_episode(theta, model, config, support, query, config.tau_end);
    EventMetrics em{ev.event_id, {}};
    for (std::size_t i = 0; i < query.size(); ++i) {
      em.confusion.add(query[i].label, preds[i].predicted);
    }
    per_event.push_back(std::move(em));
  }
  return RunMetrics::from_events(std::move(per_event));
}

}  // namespace metafend
