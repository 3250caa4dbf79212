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

#include "metafend/model.hpp"

#include <array>
#include <cmath>

#include "metafend/aggregator.hpp"
#include "metafend/detector.hpp"
#include "metafend/error.hpp"
#include "metafend/extractors.hpp"

namespace metafend {

namespace {

constexpr std::array<std::pair<Mode, std::string_view>, 5> kModeNames{{
    {Mode::kMetafend, "metafend"},
    {Mode::kSoftAttn, "soft-attn"},
    {Mode::kCnpMean, "cnp-mean"},
    {Mode::kMaml, "maml"},
    {Mode::kBinaryHead, "binary-head"},
}};

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t({fan_in, fan_out});
  for (double& v : t.data()) v = (2.0 * uniform01(rng) - 1.0) * limit;
  return t;
}

Tensor gaussian(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = stddev * standard_normal(rng);
  return t;
}

}  // namespace

std::string_view mode_name(Mode mode) {
  for (const auto& [m, name] : kModeNames) {
    if (m == mode) return name;
  }
  return "unknown";
}

std::optional<Mode> parse_mode(std::string_view name) {
  for (const auto& [m, n] : kModeNames) {
    if (n == name) return m;
  }
  return std::nullopt;
}

HeadKind head_for(Mode mode) {
  return mode == Mode::kBinaryHead ? HeadKind::kBinary : HeadKind::kLabelEmbedding;
}

void ModelConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("model config: vocab must hold <pad> and <unk>");
  if (emb_dim == 0 || n_filters == 0 || max_window == 0 || feature_dim == 0 ||
      dim == 0) {
    throw ConfigError("model config: all widths must be positive");
  }
  if (max_len < max_window) {
    throw ConfigError("model config: max_len " + std::to_string(max_len) +
                      " is shorter than the largest window " +
                      std::to_string(max_window));
  }
}

namespace pname {
std::string conv_weight(std::size_t window) {
  return "ext.conv" + std::to_string(window) + ".weight";
}
std::string conv_bias(std::size_t window) {
  return "ext.conv" + std::to_string(window) + ".bias";
}
}  // namespace pname

std::map<std::string, Shape> expected_shapes(const ModelConfig& c) {
  std::map<std::string, Shape> s;
  s[pname::kEmbedding] = {c.vocab_size, c.emb_dim};
  for (std::size_t w = 1; w <= c.max_window; ++w) {
    s[pname::conv_weight(w)] = {w * c.emb_dim, c.n_filters};
    s[pname::conv_bias(w)] = {1, c.n_filters};
  }
  s[pname::kTextProjW] = {c.max_window * c.n_filters, c.feature_dim};
  s[pname::kTextProjB] = {1, c.feature_dim};
  if (c.visual_dim > 0) {
    s[pname::kVisualProjW] = {c.visual_dim, c.feature_dim};
    s[pname::kVisualProjB] = {1, c.feature_dim};
  }
  s[pname::kFuseW] = {2 * c.feature_dim, c.dim};
  s[pname::kFuseB] = {1, c.dim};
  s[pname::kWq] = {c.dim, c.dim};
  s[pname::kWk] = {c.dim, c.dim};
  s[pname::kWv] = {c.dim + c.label_width(), c.dim};
  s[pname::kCtxW] = {c.dim, c.dim};
  s[pname::kCtxB] = {1, c.dim};
  if (c.head == HeadKind::kBinary) {
    s[pname::kBinaryW] = {2 * c.dim, 2};
    s[pname::kBinaryB] = {1, 2};
  } else {
    s[pname::kDetW] = {2 * c.dim, c.dim};
    s[pname::kDetB] = {1, c.dim};
    s[pname::kLabelFake] = {1, c.dim};
    s[pname::kLabelReal] = {1, c.dim};
  }
  return s;
}

ParamSet init_params(const ModelConfig& c, Rng& rng) {
  c.validate();
  ParamSet params;
  // Fixed creation order keeps initialization reproducible for a seed.
  for (const auto& [name, shape] : expected_shapes(c)) {
    Tensor t;
    if (name == pname::kEmbedding) {
      t = gaussian(shape, 0.1, rng);
    } else if (name == pname::kLabelFake || name == pname::kLabelReal) {
      t = gaussian(shape, 1.0 / std::sqrt(static_cast<double>(c.dim)), rng);
    } else if (shape[0] == 1) {
      t = Tensor::zeros(shape);
    } else {
      t = glorot(shape[0], shape[1], rng);
    }
    params.insert(name, std::move(t));
  }
  return params;
}

void validate_params(const ParamSet& params, const ModelConfig& config) {
  const auto expected = expected_shapes(config);
  std::string problems;
  for (const auto& [name, shape] : expected) {
    if (!params.contains(name)) {
      problems += " " + name + " (missing, expected " + shape_string(shape) + ")";
    } else if (params.at(name).shape() != shape) {
      problems += " " + name + " (has " + shape_string(params.at(name).shape()) +
                  ", expected " + shape_string(shape) + ")";
    }
  }
  for (const auto& [name, t] : params) {
    if (!expected.count(name)) problems += " " + name + " (unexpected)";
  }
  if (!problems.empty()) {
    throw ShapeError("parameter/config mismatch:" + problems);
  }
}

ad::NodeId example_features(ad::Graph& g, const BoundParams& p,
                            const ModelConfig& config, const Example& example) {
  return extract::post_features(g, p, config, example.tokens, example.visual);
}

ad::NodeId label_rows(ad::Graph& g, const BoundParams& p,
                      const ModelConfig& config, std::span<const Label> labels) {
  if (labels.empty()) throw ShapeError("label_rows: empty context");
  if (config.head == HeadKind::kBinary) {
    Tensor values({labels.size(), 1});
    for (std::size_t i = 0; i < labels.size(); ++i) {
      values[i] = labels[i] == Label::kFake ? 1.0 : 0.0;
    }
    return g.constant(std::move(values));
  }
  std::vector<ad::NodeId> rows;
  rows.reserve(labels.size());
  for (Label l : labels) {
    rows.push_back(p[l == Label::kFake ? pname::kLabelFake : pname::kLabelReal]);
  }
  return g.concat_rows(rows);
}

Prediction predict(ad::Graph& g, const BoundParams& p, const ModelConfig& config,
                   Mode mode, ad::NodeId target,
                   std::span<const ad::NodeId> context_features,
                   std::span<const Label> context_labels,
                   const Sampling& sampling) {
  if (context_features.size() != context_labels.size()) {
    throw ShapeError("predict: " + std::to_string(context_features.size()) +
                     " context rows but " + std::to_string(context_labels.size()) +
                     " labels");
  }
  Prediction out;
  if (mode == Mode::kMaml) {
    out.context = g.constant(Tensor::zeros({1, config.dim}));
  } else {
    if (context_features.empty()) throw ShapeError("predict: empty context");
    const aggregate::ContextBatch batch{g.concat_rows(context_features),
                                        label_rows(g, p, config, context_labels)};
    const ad::NodeId values = aggregate::value_rows(g, p, batch);
    ad::NodeId aggregated;
    if (mode == Mode::kCnpMean) {
      aggregated = aggregate::mean_aggregate(g, values);
    } else {
      const ad::NodeId a = aggregate::attention_weights(g, p, config, target, batch);
      out.weights = a;
      if (mode == Mode::kSoftAttn) {
        aggregated = aggregate::soft_aggregate(g, a, values);
      } else {
        std::vector<double> noise;
        if (sampling.noise) {
          noise = aggregate::draw_gumbel_noise(*sampling.noise, context_features.size());
        }
        const auto sample = aggregate::gumbel_st_sample(g, a, sampling.tau, noise);
        out.selected = sample.selected;
        aggregated = aggregate::hard_aggregate(g, sample.hard, values);
      }
    }
    out.context = aggregate::context_embed(g, p, aggregated);
  }

  if (config.head == HeadKind::kBinary) {
    out.probs = detect::binary_head(g, p, out.context, target);
  } else {
    const ad::NodeId o = detect::detect(g, p, out.context, target);
    out.probs = detect::predict_proba(g, p, o);
  }
  return out;
}

}  // namespace metafend
