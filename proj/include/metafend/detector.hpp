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

#include "metafend/graph.hpp"
#include "metafend/label.hpp"
#include "metafend/param_set.hpp"

namespace metafend::detect {

// o = [r | h] W_det + b_det. No nonlinearity: the similarity head relies on
// o being a plain affine map.
ad::NodeId detect(ad::Graph& g, const BoundParams& p, ad::NodeId context,
                  ad::NodeId target);

// ||o * vec||, a 1 x 1 node.
ad::NodeId label_similarity(ad::Graph& g, ad::NodeId output, ad::NodeId label_vec);

// softmax over (sim(o, vec(fake)), sim(o, vec(real))), a 1 x 2 node.
ad::NodeId predict_proba(ad::Graph& g, const BoundParams& p, ad::NodeId output);

// Ablation head: softmax([r | h] W_bin + b_bin), a 1 x 2 node.
ad::NodeId binary_head(ad::Graph& g, const BoundParams& p, ad::NodeId context,
                       ad::NodeId target);

inline constexpr double kLossFloor = 1e-12;

// -log(max(p_label, 1e-12)) for a 1 x 2 (fake, real) probability row.
ad::NodeId nll_loss(ad::Graph& g, ad::NodeId probs, Label label);

}  // namespace metafend::detect
