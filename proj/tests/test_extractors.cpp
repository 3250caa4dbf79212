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

#include <fstream>
#include <optional>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "metafend/error.hpp"
#include "metafend/extractors.hpp"
#include "metafend/gradcheck.hpp"
#include "metafend/model_config.hpp"
#include "metafend/vocab.hpp"

using namespace metafend;
using ad::Graph;
using ad::NodeId;

namespace {

ModelConfig small_config(std::size_t vocab_size) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  c.emb_dim = 4;
  c.n_filters = 3;
  c.max_window = 5;
  c.max_len = 8;
  c.feature_dim = 5;
  c.dim = 6;
  c.visual_dim = 3;
  c.validate();
  return c;
}

// Biases pushed positive so no ReLU sits on its kink at the probe point.
ParamSet lively_params(const ModelConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  ParamSet p = init_params(c, rng);
  for (const auto& name : p.names()) {
    if (name.find("bias") == std::string::npos) continue;
    p = p.with(name, testutil::random_tensor(p.at(name).shape(), rng, 0.2, 0.6));
  }
  return p;
}

NodeId weighted(Graph& g, NodeId x, std::uint64_t seed) {
  Rng rng(seed);
  auto w = g.constant(testutil::random_tensor(g.value(x).shape(), rng));
  return g.sum(g.mul(x, w));
}

const std::vector<std::int32_t> kTokens{2, 3, 4, 2, 5, 0, 0, 0};
const std::vector<double> kVisual{0.7, -0.4, 1.1};

}  // namespace

TEST_CASE("tokenize pads, lowercases and maps unknown words") {
  Vocab v;
  CHECK(v.add("fake") == 2);
  CHECK(v.add("news") == 3);
  CHECK(tokenize("Fake NEWS", v, 4) == std::vector<std::int32_t>{2, 3, 0, 0});
  CHECK(tokenize("zzz", v, 2) == std::vector<std::int32_t>{1, 0});
  CHECK(tokenize("", v, 3) == std::vector<std::int32_t>{0, 0, 0});
  CHECK(tokenize("fake news fake", v, 2) == std::vector<std::int32_t>{2, 3});
  CHECK_THROWS_AS(tokenize("x", v, 0), ConfigError);
}

TEST_CASE("tokenize is idempotent on its rendering") {
  std::vector<std::string> texts{"the Quick brown fox", "brown dogs bark"};
  Vocab v = build_vocab(texts);
  for (const char* text : {"The quick  FOX jumps", "", "bark bark unknownword"}) {
    auto ids = tokenize(text, v, 6);
    CHECK(tokenize(render_tokens(ids, v), v, 6) == ids);
    CHECK(tokenize(text, v, 6) == ids);
  }
}

TEST_CASE("zero embeddings give the bias-only projection") {
  auto c = small_config(6);
  Rng rng(3);
  ParamSet p = init_params(c, rng);
  p = p.with(pname::kEmbedding, Tensor::zeros(p.at(pname::kEmbedding).shape()));
  Tensor bias = Tensor::row({0.5, -0.2, 0.0, 1.5, -3.0});
  p = p.with(pname::kTextProjB, bias);
  Graph g;
  BoundParams b(g, p);
  auto out = extract::text_features(g, b, c, std::vector<std::int32_t>(8, 0));
  CHECK(g.value(out) == Tensor::row({0.5, 0.0, 0.0, 1.5, 0.0}));
}

TEST_CASE("a repeated token pools to the single-window response") {
  auto c = small_config(6);
  ParamSet p = lively_params(c, 5);
  Graph g;
  BoundParams b(g, p);
  auto longer = extract::text_features(g, b, c, std::vector<std::int32_t>(8, 4));
  auto shortest = extract::text_features(g, b, c, std::vector<std::int32_t>(5, 4));
  CHECK(g.value(longer) == g.value(shortest));
  CHECK_THROWS_AS(extract::text_features(g, b, c, std::vector<std::int32_t>(4, 4)), ShapeError);
}

TEST_CASE("visual path: absent, zero and wrong-length vectors") {
  auto c = small_config(6);
  Rng rng(4);
  ParamSet p = init_params(c, rng);
  Graph g;
  BoundParams b(g, p);
  auto absent = extract::visual_features(g, b, c, std::nullopt);
  CHECK(g.value(absent) == Tensor::zeros({1, 5}));
  auto zero = extract::visual_features(g, b, c, std::vector<double>(3, 0.0));
  CHECK(g.value(zero) == Tensor::zeros({1, 5}));
  CHECK_THROWS_AS(extract::visual_features(g, b, c, std::vector<double>(2, 1.0)), ShapeError);
}

TEST_CASE("fuse of zeros with zero bias is zero; width is d") {
  auto c = small_config(6);
  Rng rng(4);
  ParamSet p = init_params(c, rng);
  Graph g;
  BoundParams b(g, p);
  auto z = g.constant(Tensor::zeros({1, 5}));
  auto out = extract::fuse(g, b, c, z, z);
  CHECK(g.value(out) == Tensor::zeros({1, 6}));

  ModelConfig defaults;
  defaults.vocab_size = 6;
  defaults.visual_dim = 3;
  Rng r2(1);
  ParamSet pd = init_params(defaults, r2);
  Graph g2;
  BoundParams b2(g2, pd);
  auto h = extract::post_features(g2, b2, defaults, std::vector<std::int32_t>(16, 2), kVisual);
  CHECK(g2.value(h).shape() == Shape{1, 16});
}

TEST_CASE("feature width is d with or without the visual vector") {
  auto c = small_config(6);
  ParamSet p = lively_params(c, 9);
  Graph g;
  BoundParams b(g, p);
  CHECK(g.value(extract::post_features(g, b, c, kTokens, kVisual)).shape() == Shape{1, 6});
  CHECK(g.value(extract::post_features(g, b, c, kTokens, std::nullopt)).shape() == Shape{1, 6});
}

TEST_CASE("swapping two posts swaps their features") {
  auto c = small_config(6);
  ParamSet p = lively_params(c, 10);
  const std::vector<std::int32_t> other{5, 5, 3, 1, 0, 0, 0, 0};
  const std::vector<double> other_visual{-0.3, 0.9, 0.2};
  Graph g1;
  BoundParams b1(g1, p);
  auto a1 = extract::post_features(g1, b1, c, kTokens, kVisual);
  auto c1 = extract::post_features(g1, b1, c, other, other_visual);
  Graph g2;
  BoundParams b2(g2, p);
  auto c2 = extract::post_features(g2, b2, c, other, other_visual);
  auto a2 = extract::post_features(g2, b2, c, kTokens, kVisual);
  CHECK(g1.value(a1) == g2.value(a2));
  CHECK(g1.value(c1) == g2.value(c2));
}

TEST_CASE("finite-difference checks through the extractors") {
  auto c = small_config(6);
  ParamSet p = lively_params(c, 12);

  std::vector<std::string> text_params{pname::kEmbedding, pname::kTextProjW, pname::kTextProjB};
  for (std::size_t w = 1; w <= c.max_window; ++w) {
    text_params.push_back(pname::conv_weight(w));
    text_params.push_back(pname::conv_bias(w));
  }
  auto text = [&](Graph& g, const BoundParams& b) {
    return weighted(g, extract::text_features(g, b, c, kTokens), 1);
  };
  CHECK(finite_diff_check(text, p, 1e-6, text_params).max_rel_error < 1e-4);

  auto visual = [&](Graph& g, const BoundParams& b) {
    return weighted(g, extract::visual_features(g, b, c, kVisual), 2);
  };
  CHECK(finite_diff_check(visual, p, 1e-6, {pname::kVisualProjW, pname::kVisualProjB})
            .max_rel_error < 1e-4);

  auto full = [&](Graph& g, const BoundParams& b) {
    return weighted(g, extract::post_features(g, b, c, kTokens, kVisual), 3);
  };
  CHECK(finite_diff_check(full, p, 1e-6).max_rel_error < 1e-4);
}

TEST_CASE("word vectors overwrite matching embedding rows") {
  auto dir = testutil::scratch_dir("wordvec");
  {
    std::ofstream out(dir / "vec.txt");
    out << "2 3\nfake 1 2 3\nzebra 4 5 6\n";
  }
  WordVectors wv = load_word_vectors(dir / "vec.txt");
  CHECK(wv.dim == 3);
  std::vector<std::string> texts{"fake news"};
  Vocab v = build_vocab(texts);
  Tensor fallback = Tensor::zeros({v.size(), 3});
  Tensor table = extract::embedding_from_vectors(v, wv, fallback);
  const auto row = static_cast<std::size_t>(v.index("fake"));
  CHECK(table(row, 0) == 1.0);
  CHECK(table(row, 2) == 3.0);
  CHECK(table(static_cast<std::size_t>(v.index("news")), 0) == 0.0);

  {
    std::ofstream out(dir / "bad.txt");
    out << "fake 1 2 3\nnews 1 2\n";
  }
  CHECK_THROWS_AS(load_word_vectors(dir / "bad.txt"), DataError);
}
