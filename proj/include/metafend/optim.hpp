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
#include <map>
#include <string>
#include <utility>

#include "metafend/param_set.hpp"

namespace metafend {

// p' = p - lr * g for every named gradient. Parameters without a gradient
// entry are carried over unchanged. `params` is not modified.
ParamSet sgd_step(const ParamSet& params, const GradMap& grads, double lr);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  GradMap first_moment;
  GradMap second_moment;
  std::int64_t step = 0;

  static OptimizerState zeros_like(const ParamSet& params);
};

// Bias-corrected Adam. Parameters absent from `grads` keep both their value
// and their moments.
std::pair<ParamSet, OptimizerState> adam_step(const OptimizerState& state,
                                              const ParamSet& params,
                                              const GradMap& grads, double lr,
                                              const AdamConfig& config = {});

// In-place helpers for reducing per-episode gradients.
void add_into(GradMap& total, const GradMap& grads, double weight = 1.0);
double max_abs_difference(const GradMap& a, const GradMap& b);

}  // namespace metafend
