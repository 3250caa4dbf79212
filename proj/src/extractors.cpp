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

#include "metafend/extractors.hpp"

#include <vector>

#include "metafend/error.hpp"

namespace metafend::extract {

ad::NodeId text_features(ad::Graph& g, const BoundParams& p,
                         const ModelConfig& config,
                         std::span<const std::int32_t> tokens) {
  if (tokens.size() < config.max_window) {
    throw ShapeError("text_features: sequence length " +
                     std::to_string(tokens.size()) +
                     " is shorter than the largest filter window " +
                     std::to_string(config.max_window));
  }
  const ad::NodeId embedded =
      g.embedding(p[pname::kEmbedding],
                  std::vector<std::int32_t>(tokens.begin(), tokens.end()));
  std::vector<ad::NodeId> pooled;
  pooled.reserve(config.max_window);
  for (std::size_t w = 1; w <= config.max_window; ++w) {
    const ad::NodeId windows = g.unfold(embedded, w);
    const ad::NodeId conv = g.add_row_bias(
        g.matmul(windows, p[pname::conv_weight(w)]), p[pname::conv_bias(w)]);
    pooled.push_back(g.max_over_time(g.relu(conv)));
  }
  const ad::NodeId joined = g.concat_cols(pooled);
  return g.relu(g.add_row_bias(g.matmul(joined, p[pname::kTextProjW]),
                               p[pname::kTextProjB]));
}

ad::NodeId visual_features(ad::Graph& g, const BoundParams& p,
                           const ModelConfig& config,
                           const std::optional<std::vector<double>>& visual) {
  if (!visual) return g.constant(Tensor::zeros({1, config.feature_dim}));
  if (config.visual_dim == 0 || visual->size() != config.visual_dim) {
    throw ShapeError("visual_features: expected a vector of length " +
                     std::to_string(config.visual_dim) + ", got " +
                     std::to_string(visual->size()));
  }
  const ad::NodeId v = g.constant(Tensor::row(*visual));
  return g.relu(g.add_row_bias(g.matmul(v, p[pname::kVisualProjW]),
                               p[pname::kVisualProjB]));
}

ad::NodeId fuse(ad::Graph& g, const BoundParams& p, const ModelConfig& config,
                ad::NodeId text, ad::NodeId visual) {
  const auto& t = g.value(text);
  const auto& v = g.value(visual);
  if (t.numel() != config.feature_dim || v.numel() != config.feature_dim) {
    throw ShapeError("fuse: inputs must both have length " +
                     std::to_string(config.feature_dim) + ", got " +
                     shape_string(t.shape()) + " and " + shape_string(v.shape()));
  }
  const ad::NodeId joined = g.concat_cols(text, visual);
  return g.relu(
      g.add_row_bias(g.matmul(joined, p[pname::kFuseW]), p[pname::kFuseB]));
}

ad::NodeId post_features(ad::Graph& g, const BoundParams& p,
                         const ModelConfig& config,
                         std::span<const std::int32_t> tokens,
                         const std::optional<std::vector<double>>& visual) {
  const ad::NodeId text = text_features(g, p, config, tokens);
  const ad::NodeId vis = visual_features(g, p, config, visual);
  return fuse(g, p, config, text, vis);
}

Tensor embedding_from_vectors(const Vocab& vocab, const WordVectors& vectors,
                              const Tensor& fallback) {
  if (fallback.rows() != vocab.size() || fallback.cols() != vectors.dim) {
    throw ShapeError("embedding_from_vectors: fallback table " +
                     shape_string(fallback.shape()) + " does not match vocab " +
                     std::to_string(vocab.size()) + " x dim " +
                     std::to_string(vectors.dim));
  }
  Tensor table = fallback;
  for (std::size_t row = 2; row < vocab.size(); ++row) {
    auto it = vectors.vectors.find(vocab.token(static_cast<std::int32_t>(row)));
    if (it == vectors.vectors.end()) continue;
    for (std::size_t c = 0; c < vectors.dim; ++c) table(row, c) = it->second[c];
  }
  return table;
}

}  // namespace metafend::extract
