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

#include "metafend/aggregator.hpp"

#include <algorithm>
#include <cmath>

#include "metafend/error.hpp"

namespace metafend::aggregate {

ad::NodeId attention_weights(ad::Graph& g, const BoundParams& p,
                             const ModelConfig& config, ad::NodeId target,
                             const ContextBatch& context) {
  if (g.value(context.features).rows() == 0) {
    throw ShapeError("attention_weights: empty context");
  }
  const ad::NodeId query = g.matmul(target, p[pname::kWq]);
  const ad::NodeId keys = g.matmul(context.features, p[pname::kWk]);
  const ad::NodeId scores = g.matmul(query, g.transpose(keys));
  return g.softmax_rows(
      g.scale(scores, 1.0 / std::sqrt(static_cast<double>(config.dim))));
}

ad::NodeId value_rows(ad::Graph& g, const BoundParams& p,
                      const ContextBatch& context) {
  if (g.value(context.features).rows() != g.value(context.labels).rows()) {
    throw ShapeError("value_rows: " +
                     shape_string(g.value(context.features).shape()) +
                     " features vs " +
                     shape_string(g.value(context.labels).shape()) + " labels");
  }
  return g.matmul(g.concat_cols(context.features, context.labels), p[pname::kWv]);
}

ad::NodeId soft_aggregate(ad::Graph& g, ad::NodeId weights, ad::NodeId values) {
  return g.matmul(weights, values);
}

ad::NodeId mean_aggregate(ad::Graph& g, ad::NodeId values) {
  const std::size_t m = g.value(values).rows();
  const ad::NodeId uniform = g.constant(
      Tensor({1, m}, std::vector<double>(m, 1.0 / static_cast<double>(m))));
  return g.matmul(uniform, values);
}

std::vector<double> draw_gumbel_noise(Rng& rng, std::size_t count) {
  std::vector<double> noise(count);
  for (double& v : noise) {
    const double u = std::clamp(uniform01(rng), kUniformClamp, 1.0 - kUniformClamp);
    v = -std::log(-std::log(u));
  }
  return noise;
}

GumbelSample gumbel_st_sample(ad::Graph& g, ad::NodeId weights, double tau,
                              std::span<const double> noise) {
  if (!(tau > 0.0)) throw ConfigError("gumbel_st_sample: tau must be > 0");
  const Shape shape = g.value(weights).shape();
  const std::size_t count = g.value(weights).numel();
  ad::NodeId logits = g.log(weights, kProbabilityFloor);
  if (!noise.empty()) {
    if (noise.size() != count) {
      throw ShapeError("gumbel_st_sample: " + std::to_string(noise.size()) +
                       " noise values for " + shape_string(shape) + " weights");
    }
    logits = g.add(logits, g.constant(Tensor(shape, {noise.begin(), noise.end()})));
  }
  const ad::NodeId soft = g.softmax_rows(g.scale(logits, 1.0 / tau));
  const Tensor& sv = g.value(soft);
  const auto best = static_cast<std::size_t>(
      std::max_element(sv.data().begin(), sv.data().end()) - sv.data().begin());
  Tensor one_hot(sv.shape());
  one_hot[best] = 1.0;
  return {g.straight_through(soft, std::move(one_hot)), soft, best};
}

ad::NodeId hard_aggregate(ad::Graph& g, ad::NodeId selection, ad::NodeId values) {
  return g.matmul(selection, values);
}

ad::NodeId context_embed(ad::Graph& g, const BoundParams& p, ad::NodeId aggregated) {
  return g.relu(
      g.add_row_bias(g.matmul(aggregated, p[pname::kCtxW]), p[pname::kCtxB]));
}

double temperature(int epoch, const TemperatureSchedule& schedule) {
  if (schedule.total <= 0 || epoch <= 0) return schedule.start;
  if (epoch >= schedule.total) return schedule.end;
  return schedule.start + (schedule.end - schedule.start) *
                              static_cast<double>(epoch) /
                              static_cast<double>(schedule.total);
}

}  // namespace metafend::aggregate
