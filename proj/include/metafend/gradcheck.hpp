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
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "metafend/graph.hpp"
#include "metafend/param_set.hpp"

namespace metafend {

using LossBuilder = std::function<ad::NodeId(ad::Graph&, const BoundParams&)>;
using TensorLossBuilder = std::function<ad::NodeId(ad::Graph&, ad::NodeId)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// Compares the analytic gradient of the builder's scalar loss against
// central differences (f(x+eps) - f(x-eps)) / (2 eps), coordinate by
// coordinate. The error of a coordinate is |analytic - numeric| /
// max(1e-8, |numeric|); the report carries the worst one.
//
// The builder is run twice at the base point first; a changed loss value
// means it is not deterministic and the check throws. `only`, when
// non-empty, restricts the check to those parameter names.
GradCheckReport finite_diff_check(const LossBuilder& builder,
                                  const ParamSet& params, double eps,
                                  const std::vector<std::string>& only = {});

double finite_diff_check(const TensorLossBuilder& builder, const Tensor& param,
                         double eps);

inline constexpr double kGradTolerance = 1e-4;

struct ComponentCheck {
  std::string component;  // "op:<name>" or "pipeline:<mode>"
  double max_rel_error = 0.0;
  std::string detail;
};

// Every graph op on tiny random inputs, then the full support + query loss
// of every mode on a tiny model. Straight-through selection is checked
// against the gradient of its soft relaxation.
std::vector<ComponentCheck> gradcheck_suite(std::uint64_t seed, double eps = 1e-6);

}  // namespace metafend
