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

#include "metafend/optim.hpp"

#include <cmath>

#include "metafend/error.hpp"

namespace metafend {

namespace {

void check_grad_shape(const ParamSet& params, const std::string& name,
                      const Tensor& grad) {
  if (!params.contains(name)) {
    throw ConfigError("optimizer: gradient for unknown parameter " + name);
  }
  const Tensor& p = params.at(name);
  if (!p.same_shape(grad)) {
    throw ShapeError("optimizer: " + name + " has shape " +
                     shape_string(p.shape()) + ", gradient " +
                     shape_string(grad.shape()));
  }
}

}  // namespace

ParamSet sgd_step(const ParamSet& params, const GradMap& grads, double lr) {
  if (!(lr >= 0.0)) throw ConfigError("sgd_step: learning rate must be >= 0");
  ParamSet out = params;
  for (const auto& [name, g] : grads) {
    check_grad_shape(params, name, g);
    Tensor p = params.at(name);
    for (std::size_t i = 0; i < p.numel(); ++i) p[i] -= lr * g[i];
    out = out.with(name, std::move(p));
  }
  return out;
}

OptimizerState OptimizerState::zeros_like(const ParamSet& params) {
  OptimizerState s;
  for (const auto& [name, t] : params) {
    s.first_moment.emplace(name, Tensor::zeros(t->shape()));
    s.second_moment.emplace(name, Tensor::zeros(t->shape()));
  }
  return s;
}

std::pair<ParamSet, OptimizerState> adam_step(const OptimizerState& state,
                                              const ParamSet& params,
                                              const GradMap& grads, double lr,
                                              const AdamConfig& config) {
  if (!(lr > 0.0)) throw ConfigError("adam_step: learning rate must be > 0");
  OptimizerState next = state;
  next.step = state.step + 1;
  const double t = static_cast<double>(next.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);

  ParamSet out = params;
  for (const auto& [name, g] : grads) {
    check_grad_shape(params, name, g);
    auto m_it = next.first_moment.find(name);
    auto v_it = next.second_moment.find(name);
    if (m_it == next.first_moment.end() || v_it == next.second_moment.end()) {
      throw ConfigError("adam_step: no optimizer state for " + name);
    }
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    if (!m.same_shape(g) || !v.same_shape(g)) {
      throw ShapeError("adam_step: state for " + name + " has shape " +
                       shape_string(m.shape()) + ", parameter " +
                       shape_string(g.shape()));
    }
    Tensor p = params.at(name);
    for (std::size_t i = 0; i < p.numel(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
    out = out.with(name, std::move(p));
  }
  return {std::move(out), std::move(next)};
}

void add_into(GradMap& total, const GradMap& grads, double weight) {
  for (const auto& [name, g] : grads) {
    auto it = total.find(name);
    if (it == total.end()) {
      Tensor scaled = g;
      for (double& v : scaled.data()) v *= weight;
      total.emplace(name, std::move(scaled));
      continue;
    }
    if (!it->second.same_shape(g)) {
      throw ShapeError("gradient reduction: shape mismatch for " + name);
    }
    for (std::size_t i = 0; i < g.numel(); ++i) it->second[i] += weight * g[i];
  }
}

double max_abs_difference(const GradMap& a, const GradMap& b) {
  double worst = 0.0;
  for (const auto& [name, ta] : a) {
    auto it = b.find(name);
    for (std::size_t i = 0; i < ta.numel(); ++i) {
      const double vb = it == b.end() ? 0.0 : it->second[i];
      worst = std::max(worst, std::abs(ta[i] - vb));
    }
  }
  for (const auto& [name, tb] : b) {
    if (a.count(name)) continue;
    for (double v : tb.data()) worst = std::max(worst, std::abs(v));
  }
  return worst;
}

}  // namespace metafend
