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
#include <string>
#include <vector>

#include "metafend/graph.hpp"
#include "metafend/label.hpp"
#include "metafend/model_config.hpp"
#include "metafend/param_set.hpp"
#include "metafend/rng.hpp"

namespace metafend {

// A post ready for the network: token ids already padded to max_len.
struct Example {
  std::string id;
  std::vector<std::int32_t> tokens;
  std::optional<std::vector<double>> visual;
  Label label = Label::kReal;
};

// How the attention selection is drawn. A null `noise` stream means the
// hard path picks argmax(a) deterministically.
struct Sampling {
  double tau = 1.0;
  Rng* noise = nullptr;
};

struct Prediction {
  ad::NodeId probs;                  // 1 x 2, (fake, real)
  ad::NodeId context;                // r, 1 x d
  std::optional<ad::NodeId> weights; // attention row a, when the mode has one
  std::optional<std::size_t> selected;
};

ad::NodeId example_features(ad::Graph& g, const BoundParams& p,
                            const ModelConfig& config, const Example& example);

// m x label_width rows: label embeddings, or 1/0 scalars for the binary head.
ad::NodeId label_rows(ad::Graph& g, const BoundParams& p,
                      const ModelConfig& config, std::span<const Label> labels);

// Full forward pass for one target conditioned on a context set whose
// features are already in the graph.
Prediction predict(ad::Graph& g, const BoundParams& p, const ModelConfig& config,
                   Mode mode, ad::NodeId target,
                   std::span<const ad::NodeId> context_features,
                   std::span<const Label> context_labels,
                   const Sampling& sampling);

}  // namespace metafend
