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
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "metafend/metrics.hpp"
#include "metafend/model.hpp"
#include "metafend/model_config.hpp"
#include "metafend/optim.hpp"
#include "metafend/param_set.hpp"

namespace metafend {

enum class GradOrder { kFirst, kSecond };

std::string_view grad_order_name(GradOrder order);
std::optional<GradOrder> parse_grad_order(std::string_view name);

struct TrainConfig {
  Mode mode = Mode::kMetafend;
  double inner_lr = 0.1;
  int inner_steps = 1;
  double outer_lr = 0.001;
  std::size_t meta_batch = 10;
  int epochs = 400;  // passes over the training event list
  std::size_t k = 5;
  std::size_t query_size = 10;
  double tau_start = 1.0;
  double tau_end = 0.5;
  GradOrder grad_order = GradOrder::kFirst;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
  // Temperature for an epoch; the last epoch lands exactly on tau_end.
  double tau_at(int epoch) const;
};

struct EventData {
  std::string event_id;
  std::vector<Example> examples;
};

struct LooSplit {
  std::size_t target = 0;
  std::vector<std::size_t> context;
};

// Split i predicts support[i] from the other K - 1 items.
std::vector<LooSplit> leave_one_out_splits(std::size_t k);

// Mean leave-one-out nll over the support set. Each target is conditioned on
// the remaining K - 1 items.
ad::NodeId support_loss(ad::Graph& g, const BoundParams& p,
                        const ModelConfig& model, Mode mode,
                        std::span<const Example> support, const Sampling& sampling);

// Mean nll over the query items, each conditioned on every support item.
ad::NodeId query_loss(ad::Graph& g, const BoundParams& p,
                      const ModelConfig& model, Mode mode,
                      std::span<const Example> support,
                      std::span<const Example> query, const Sampling& sampling);

struct LossGrad {
  double loss = 0.0;
  GradMap grads;
};

LossGrad support_loss_grad(const ParamSet& theta, const ModelConfig& model,
                           Mode mode, std::span<const Example> support,
                           const Sampling& sampling);
LossGrad query_loss_grad(const ParamSet& theta, const ModelConfig& model,
                         Mode mode, std::span<const Example> support,
                         std::span<const Example> query, const Sampling& sampling);

// inner_steps SGD steps on the support loss. cnp-mean returns theta as is.
// `first_loss`, when given, receives the support loss before the first step.
ParamSet adapt(const ParamSet& theta, const ModelConfig& model,
               const TrainConfig& config, std::span<const Example> support,
               double tau, Rng* noise, double* first_loss = nullptr);

struct EpisodeGrad {
  double support_loss = 0.0;
  double query_loss = 0.0;
  GradMap grads;
};

// Outer gradient of one episode with respect to theta. First order uses the
// query gradient at the adapted parameters; second order additionally pulls
// it back through every inner step with finite-difference Hessian-vector
// products.
EpisodeGrad meta_gradient(const ParamSet& theta, const ModelConfig& model,
                          const TrainConfig& config,
                          std::span<const Example> support,
                          std::span<const Example> query, double tau, Rng* noise);

struct EpochLog {
  int epoch = 0;
  double support_loss = 0.0;
  double query_loss = 0.0;
  double tau = 0.0;
  double wall_ms = 0.0;
};

// "epoch=3 support_loss=... query_loss=... tau=... wall_ms=..."
std::string format_epoch_log(const EpochLog& log);

struct TrainResult {
  ParamSet params;
  std::vector<EpochLog> log;
  // Chained FNV-1a over every sampled episode (event id, support and query
  // example ids). Equal across modes that share a seed.
  std::uint64_t episode_hash = 0;
};

TrainResult meta_train(const std::vector<EventData>& events, const ParamSet& init,
                       const ModelConfig& model, const TrainConfig& config,
                       const std::function<void(const EpochLog&)>& on_epoch = {});

struct QueryPrediction {
  double p_fake = 0.0;
  double p_real = 0.0;
  Label predicted = Label::kReal;
  std::vector<double> weights;  // empty for modes without attention
  std::optional<std::size_t> selected;
  std::vector<double> context;
};

// Adapts on `support`, then predicts each query item with noise-free
// selection at temperature tau.
std::vector<QueryPrediction> predict_episode(const ParamSet& theta,
                                             const ModelConfig& model,
                                             const TrainConfig& config,
                                             std::span<const Example> support,
                                             std::span<const Example> query,
                                             double tau, bool adapt_first = true);

// K support items per test event drawn from a stream keyed by the event id;
// every other post is a query. Throws DataError if a test event id is also
// in `train_ids`.
RunMetrics evaluate(const ParamSet& theta, const std::vector<EventData>& test,
                    const ModelConfig& model, const TrainConfig& config,
                    const std::set<std::string>& train_ids = {});

}  // namespace metafend
