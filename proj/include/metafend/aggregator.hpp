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

#include <cstddef>
#include <span>
#include <vector>

#include "metafend/graph.hpp"
#include "metafend/model_config.hpp"
#include "metafend/param_set.hpp"
#include "metafend/rng.hpp"

namespace metafend::aggregate {

// Context rows: `features` is m x d, `labels` is m x label_width, aligned.
struct ContextBatch {
  ad::NodeId features;
  ad::NodeId labels;
};

// a = softmax((h W_q)(C W_k)^T / sqrt(d)), a 1 x m row.
ad::NodeId attention_weights(ad::Graph& g, const BoundParams& p,
                             const ModelConfig& config, ad::NodeId target,
                             const ContextBatch& context);

// V = [C | vec] W_v, m x d.
ad::NodeId value_rows(ad::Graph& g, const BoundParams& p,
                      const ContextBatch& context);

// a V.
ad::NodeId soft_aggregate(ad::Graph& g, ad::NodeId weights, ad::NodeId values);

// Unweighted mean of the value rows (the CNP aggregator).
ad::NodeId mean_aggregate(ad::Graph& g, ad::NodeId values);

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kUniformClamp = 1e-12;

// g = -log(-log(u)), u clamped into [1e-12, 1 - 1e-12].
std::vector<double> draw_gumbel_noise(Rng& rng, std::size_t count);

struct GumbelSample {
  ad::NodeId hard;   // forward one-hot, straight-through to `soft`
  ad::NodeId soft;   // softmax((log a + g) / tau)
  std::size_t selected = 0;
};

// Straight-through Gumbel-softmax over the weight row `weights`. An empty
// `noise` disables the perturbation, so the selection is argmax(a).
GumbelSample gumbel_st_sample(ad::Graph& g, ad::NodeId weights, double tau,
                              std::span<const double> noise);

// p V with p the straight-through one-hot.
ad::NodeId hard_aggregate(ad::Graph& g, ad::NodeId selection, ad::NodeId values);

// r = ReLU(v W_out + b_out).
ad::NodeId context_embed(ad::Graph& g, const BoundParams& p, ad::NodeId aggregated);

struct TemperatureSchedule {
  double start = 1.0;
  double end = 0.5;
  int total = 1;
};

// Linear from start (epoch 0) to end (epoch == total); out-of-range epochs
// clamp to the endpoints.
double temperature(int epoch, const TemperatureSchedule& schedule);

}  // namespace metafend::aggregate
