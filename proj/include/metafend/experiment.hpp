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
#include <string>
#include <vector>

#include "metafend/data.hpp"
#include "metafend/meta.hpp"
#include "metafend/metrics.hpp"
#include "metafend/model_config.hpp"
#include "metafend/vocab.hpp"

namespace metafend {

// Train/test events encoded against a vocabulary built from the training
// posts, plus the model shape that fits them.
struct Experiment {
  ModelConfig model;
  Vocab vocab;
  std::vector<EventData> train;
  std::vector<EventData> test;
  std::optional<WordVectors> word_vectors;

  std::set<std::string> train_ids() const;
};

inline constexpr double kDefaultTestFraction = 0.2;

// `base` supplies the layer widths; vocab size, visual width and head are
// derived from the data and the mode. Every post with a visual vector must
// share one width.
Experiment prepare_experiment(const std::vector<Post>& posts, const ModelConfig& base,
                              Mode mode, std::uint64_t split_seed,
                              double test_fraction = kDefaultTestFraction,
                              std::size_t min_posts = kMinEventPosts);

// Seeded initialization; token embeddings are overwritten from the word
// vectors when the experiment has them.
ParamSet initial_params(const Experiment& experiment, std::uint64_t seed);

struct RunOutcome {
  ParamSet params;
  TrainResult train;
  RunMetrics metrics;
};

RunOutcome run_experiment(const Experiment& experiment, const TrainConfig& config,
                          const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace metafend
