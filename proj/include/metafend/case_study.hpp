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
#include <string>
#include <vector>

#include "metafend/data.hpp"
#include "metafend/meta.hpp"
#include "metafend/model_config.hpp"
#include "metafend/param_set.hpp"
#include "metafend/vocab.hpp"

namespace metafend {

// Direct computation on the raw fixture features: identity projections,
// dot-product attention scaled by 1/sqrt(dim), and the attention-weighted
// average of the support vectors.
struct FixtureGeometry {
  std::vector<double> weights;
  std::size_t argmax = 0;
  std::vector<double> soft_context;
  double distance_to_real_mean = 0.0;
  double distance_to_fake = 0.0;
};

FixtureGeometry fixture_geometry(const Episode& episode);

struct CaseStudyPrediction {
  Mode mode = Mode::kMetafend;
  Label predicted = Label::kReal;
  double p_fake = 0.0;
  double p_real = 0.0;
  std::vector<double> weights;
  std::optional<std::size_t> selected;
  std::vector<double> context;
};

// Hand-set parameters that realise the fixture geometry inside the full
// pipeline: the text path is silenced, post features equal the visual
// vector, keys and queries are the features themselves, and the two label
// embeddings live on otherwise unused coordinates.
struct ReferenceModel {
  ModelConfig model;
  Vocab vocab;
  ParamSet params;
};

ReferenceModel case_study_reference_model(const Episode& episode);

CaseStudyPrediction predict_case_study(const ParamSet& params, const ModelConfig& model,
                                       const Vocab& vocab, const Episode& episode,
                                       Mode mode, bool adapt_first);

struct CaseStudyReport {
  FixtureGeometry geometry;
  CaseStudyPrediction reference_hard;
  CaseStudyPrediction reference_soft;
  std::optional<CaseStudyPrediction> trained_hard;
  std::optional<CaseStudyPrediction> trained_soft;
  std::string text;
};

// `train_epochs` > 0 additionally trains both attention modes briefly on
// synthetic events with the fixture's imbalance and reports them too.
CaseStudyReport run_case_study(int train_epochs, std::uint64_t seed);

}  // namespace metafend
