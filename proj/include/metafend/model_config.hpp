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
#include <optional>
#include <string>
#include <string_view>

#include "metafend/param_set.hpp"
#include "metafend/rng.hpp"

namespace metafend {

// Pipeline variants. kMetafend is the full model (hard attention + label
// embedding); the others are the baselines and ablations.
enum class Mode { kMetafend, kSoftAttn, kCnpMean, kMaml, kBinaryHead };

std::string_view mode_name(Mode mode);
std::optional<Mode> parse_mode(std::string_view name);

enum class HeadKind { kLabelEmbedding, kBinary };

struct ModelConfig {
  std::size_t vocab_size = 2;
  std::size_t emb_dim = 16;
  std::size_t n_filters = 8;
  std::size_t max_window = 5;  // filter windows 1..max_window
  std::size_t max_len = 16;
  std::size_t feature_dim = 16;  // d_f: text and visual feature width
  std::size_t dim = 16;          // d: post feature / context / output width
  std::size_t visual_dim = 0;    // 0 disables the visual projection
  HeadKind head = HeadKind::kLabelEmbedding;

  void validate() const;
  // Width of the per-row label representation fed into W_v.
  std::size_t label_width() const {
    return head == HeadKind::kBinary ? 1 : dim;
  }
};

HeadKind head_for(Mode mode);

// Parameter names.
namespace pname {
inline constexpr const char* kEmbedding = "ext.embedding";
std::string conv_weight(std::size_t window);
std::string conv_bias(std::size_t window);
inline constexpr const char* kTextProjW = "ext.text_proj.weight";
inline constexpr const char* kTextProjB = "ext.text_proj.bias";
inline constexpr const char* kVisualProjW = "ext.visual_proj.weight";
inline constexpr const char* kVisualProjB = "ext.visual_proj.bias";
inline constexpr const char* kFuseW = "ext.fuse.weight";
inline constexpr const char* kFuseB = "ext.fuse.bias";
inline constexpr const char* kWq = "agg.w_q";
inline constexpr const char* kWk = "agg.w_k";
inline constexpr const char* kWv = "agg.w_v";
inline constexpr const char* kCtxW = "agg.out.weight";
inline constexpr const char* kCtxB = "agg.out.bias";
inline constexpr const char* kDetW = "det.weight";
inline constexpr const char* kDetB = "det.bias";
inline constexpr const char* kLabelFake = "det.label_fake";
inline constexpr const char* kLabelReal = "det.label_real";
inline constexpr const char* kBinaryW = "det.binary.weight";
inline constexpr const char* kBinaryB = "det.binary.bias";
}  // namespace pname

// Expected name -> shape table for a configuration.
std::map<std::string, Shape> expected_shapes(const ModelConfig& config);

// Glorot-uniform weights, zero biases, N(0, 0.1^2) token embeddings and
// N(0, 1/d) label embeddings.
ParamSet init_params(const ModelConfig& config, Rng& rng);

// Throws ShapeError naming every tensor whose presence or shape disagrees
// with the configuration.
void validate_params(const ParamSet& params, const ModelConfig& config);

}  // namespace metafend
