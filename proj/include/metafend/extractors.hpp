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
#include <optional>
#include <span>
#include <vector>

#include "metafend/graph.hpp"
#include "metafend/model_config.hpp"
#include "metafend/param_set.hpp"
#include "metafend/vocab.hpp"

namespace metafend::extract {

// Text CNN: embedding lookup, one filter bank per window 1..max_window
// (conv + ReLU + max over time), then a d_f projection with ReLU. Returns
// a 1 x d_f node. The sequence must be at least max_window long.
ad::NodeId text_features(ad::Graph& g, const BoundParams& p,
                         const ModelConfig& config,
                         std::span<const std::int32_t> tokens);

// Precomputed visual vector -> 1 x d_f via projection + ReLU. An absent
// vector yields the zero row so text-only posts share the code path.
ad::NodeId visual_features(ad::Graph& g, const BoundParams& p,
                           const ModelConfig& config,
                           const std::optional<std::vector<double>>& visual);

// [text | visual] -> 1 x d via projection + ReLU.
ad::NodeId fuse(ad::Graph& g, const BoundParams& p, const ModelConfig& config,
                ad::NodeId text, ad::NodeId visual);

ad::NodeId post_features(ad::Graph& g, const BoundParams& p,
                         const ModelConfig& config,
                         std::span<const std::int32_t> tokens,
                         const std::optional<std::vector<double>>& visual);

// Embedding table with rows copied from `vectors` where the vocabulary has
// a match; the remaining rows come from `fallback`.
Tensor embedding_from_vectors(const Vocab& vocab, const WordVectors& vectors,
                              const Tensor& fallback);

}  // namespace metafend::extract
