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

#include "metafend/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "metafend/error.hpp"

namespace metafend {

namespace {

double loss_value(const LossBuilder& builder, const ParamSet& params) {
  ad::Graph graph;
  BoundParams bound(graph, params);
  const ad::NodeId loss = builder(graph, bound);
  const Tensor& v = graph.value(loss);
  if (v.numel() != 1) {
    throw ShapeError("finite_diff_check: loss must be scalar, got " +
                     shape_string(v.shape()));
  }
  return v[0];
}

}  // namespace

GradCheckReport finite_diff_check(const LossBuilder& builder,
                                  const ParamSet& params, double eps,
                                  const std::vector<std::string>& only) {
  if (!(eps > 0.0 && eps <= 1e-2)) {
    throw ConfigError("finite_diff_check: eps must lie in (0, 1e-2]");
  }
  const double first = loss_value(builder, params);
  const double second = loss_value(builder, params);
  if (first != second) {
    throw Error("finite_diff_check: builder is not deterministic (" +
                std::to_string(first) + " then " + std::to_string(second) + ")");
  }

  GradMap analytic;
  {
    ad::Graph graph;
    BoundParams bound(graph, params);
    analytic = graph.parameter_gradients(builder(graph, bound));
  }

  GradCheckReport report;
  for (const auto& [name, tensor] : params) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) {
      continue;
    }
    const Tensor& grad = analytic.at(name);
    for (std::size_t i = 0; i < tensor->numel(); ++i) {
      Tensor plus = *tensor;
      Tensor minus = *tensor;
      plus[i] += eps;
      minus[i] -= eps;
      const double f_plus = loss_value(builder, params.with(name, std::move(plus)));
      const double f_minus = loss_value(builder, params.with(name, std::move(minus)));
      const double numeric = (f_plus - f_minus) / (2.0 * eps);
      const double err =
          std::abs(grad[i] - numeric) / std::max(1e-8, std::abs(numeric));
      ++report.coordinates;
      if (report.worst_param.empty() || err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = name;
        report.worst_index = i;
        report.analytic = grad[i];
        report.numeric = numeric;
      }
    }
  }
  return report;
}

double finite_diff_check(const TensorLossBuilder& builder, const Tensor& param,
                         double eps) {
  ParamSet params;
  params.insert("x", param);
  LossBuilder wrapped = [&](ad::Graph& g, const BoundParams& b) {
    return builder(g, b["x"]);
  };
  return finite_diff_check(wrapped, params, eps).max_rel_error;
}

}  // namespace metafend
