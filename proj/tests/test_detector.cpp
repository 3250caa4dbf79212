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

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "metafend/detector.hpp"
#include "metafend/gradcheck.hpp"
#include "metafend/model_config.hpp"

using namespace metafend;
using ad::Graph;
using ad::NodeId;

namespace {

ParamSet head_params(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  ParamSet p;
  p.insert(pname::kDetW, testutil::random_tensor({2 * d, d}, rng));
  p.insert(pname::kDetB, testutil::random_tensor({1, d}, rng));
  p.insert(pname::kLabelFake, testutil::random_tensor({1, d}, rng));
  p.insert(pname::kLabelReal, testutil::random_tensor({1, d}, rng));
  p.insert(pname::kBinaryW, testutil::random_tensor({2 * d, 2}, rng));
  p.insert(pname::kBinaryB, testutil::random_tensor({1, 2}, rng));
  return p;
}

ParamSet labels_only(const Tensor& fake, const Tensor& real) {
  ParamSet p;
  p.insert(pname::kLabelFake, fake);
  p.insert(pname::kLabelReal, real);
  return p;
}

}  // namespace

TEST_CASE("detector output of zeros with zero bias is zero") {
  const std::size_t d = 16;
  ParamSet p = head_params(d, 1).with(pname::kDetB, Tensor::zeros({1, d}));
  Graph g;
  BoundParams b(g, p);
  auto z = g.constant(Tensor::zeros({1, d}));
  auto o = detect::detect(g, b, z, z);
  CHECK(g.value(o) == Tensor::zeros({1, d}));
  CHECK(g.value(o).shape() == Shape{1, 16});
}

TEST_CASE("label similarity") {
  Graph g;
  auto sim = [&](Tensor o, Tensor v) {
    return g.value(detect::label_similarity(g, g.constant(o), g.constant(v)))[0];
  };
  CHECK(sim(Tensor::row({3, 0}), Tensor::row({1, 2})) == 3.0);
  CHECK(sim(Tensor::row({0, 5, 0}), Tensor::row({2, 0, 1})) == 0.0);
  CHECK(sim(Tensor::row({1, 1}), Tensor::row({1, 1})) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("predict_proba examples") {
  {
    ParamSet p = labels_only(Tensor::row({1, 0}), Tensor::row({0, 1}));
    Graph g;
    BoundParams b(g, p);
    auto probs = detect::predict_proba(g, b, g.constant(Tensor::row({1, 1})));
    CHECK(g.value(probs) == Tensor::row({0.5, 0.5}));
  }
  {
    // similarities 2 and 0
    ParamSet p = labels_only(Tensor::row({1, 0}), Tensor::row({0, 1}));
    Graph g;
    BoundParams b(g, p);
    auto probs = detect::predict_proba(g, b, g.constant(Tensor::row({2, 0})));
    const double e2 = std::exp(2.0);
    CHECK(g.value(probs)[0] == doctest::Approx(e2 / (e2 + 1)).epsilon(1e-15));
    CHECK(g.value(probs)[1] == doctest::Approx(1 / (e2 + 1)).epsilon(1e-15));
    CHECK(g.value(probs)[0] == doctest::Approx(0.8808).epsilon(1e-4));
  }
}

TEST_CASE("predict_proba properties on random outputs") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor fake = testutil::random_tensor({1, 5}, rng);
    const Tensor real = testutil::random_tensor({1, 5}, rng);
    const Tensor o = testutil::random_tensor({1, 5}, rng, -3, 3);
    Graph g;
    BoundParams b(g, labels_only(fake, real));
    const Tensor probs = g.value(detect::predict_proba(g, b, g.constant(o)));
    CHECK(probs[0] > 0.0);
    CHECK(probs[1] > 0.0);
    CHECK(std::abs(probs[0] + probs[1] - 1.0) <= 1e-12);

    Graph gs;
    BoundParams bs(gs, labels_only(real, fake));
    const Tensor swapped = gs.value(detect::predict_proba(gs, bs, gs.constant(o)));
    CHECK(swapped[0] == probs[1]);
    CHECK(swapped[1] == probs[0]);

    for (double c : {0.0, 0.25, 3.0}) {
      Tensor scaled = o;
      for (double& v : scaled.data()) v *= c;
      Graph gc;
      auto s1 = gc.value(detect::label_similarity(gc, gc.constant(scaled), gc.constant(fake)))[0];
      auto s0 = gc.value(detect::label_similarity(gc, gc.constant(o), gc.constant(fake)))[0];
      CHECK(s1 == doctest::Approx(c * s0).epsilon(1e-13));
      if (c > 0) {
        BoundParams bc(gc, labels_only(fake, real));
        const Tensor sp = gc.value(detect::predict_proba(gc, bc, gc.constant(scaled)));
        CHECK((sp[0] > sp[1]) == (probs[0] > probs[1]));
      }
    }
  }
}

TEST_CASE("binary head") {
  const std::size_t d = 4;
  ParamSet p = head_params(d, 2)
                   .with(pname::kBinaryW, Tensor::zeros({2 * d, 2}))
                   .with(pname::kBinaryB, Tensor::zeros({1, 2}));
  Graph g;
  BoundParams b(g, p);
  Rng rng(3);
  auto r = g.constant(testutil::random_tensor({1, d}, rng));
  auto h = g.constant(testutil::random_tensor({1, d}, rng));
  CHECK(g.value(detect::binary_head(g, b, r, h)) == Tensor::row({0.5, 0.5}));

  ParamSet q = head_params(d, 4);
  Graph g2;
  BoundParams b2(g2, q);
  auto probs = g2.value(detect::binary_head(g2, b2, g2.constant(g.value(r)), g2.constant(g.value(h))));
  CHECK(std::abs(probs[0] + probs[1] - 1.0) <= 1e-12);
}

TEST_CASE("nll loss") {
  Graph g;
  CHECK(g.value(detect::nll_loss(g, g.constant(Tensor::row({1.0, 0.0})), Label::kFake))[0] == 0.0);
  CHECK(g.value(detect::nll_loss(g, g.constant(Tensor::row({0.5, 0.5})), Label::kReal))[0] ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(g.value(detect::nll_loss(g, g.constant(Tensor::row({1.0, 0.0})), Label::kReal))[0] ==
        doctest::Approx(-std::log(1e-12)).epsilon(1e-12));

  const double rows[3][2] = {{0.2, 0.8}, {0.6, 0.4}, {0.9, 0.1}};
  const Label labels[3] = {Label::kReal, Label::kFake, Label::kReal};
  std::vector<NodeId> losses;
  double manual = 0.0;
  for (int i = 0; i < 3; ++i) {
    auto l = detect::nll_loss(g, g.constant(Tensor::row({rows[i][0], rows[i][1]})), labels[i]);
    losses.push_back(l);
    manual += g.value(l)[0] / 3.0;
  }
  auto batch = g.mean(g.concat_cols(losses));
  CHECK(g.value(batch)[0] == doctest::Approx(manual).epsilon(1e-15));
}

TEST_CASE("finite-difference checks through both heads") {
  const std::size_t d = 3;
  ParamSet p = head_params(d, 7);
  Rng rng(9);
  const Tensor r = testutil::random_tensor({1, d}, rng);
  const Tensor h = testutil::random_tensor({1, d}, rng);
  auto metric = [&](Graph& g, const BoundParams& b) {
    auto o = detect::detect(g, b, g.constant(r), g.constant(h));
    return detect::nll_loss(g, detect::predict_proba(g, b, o), Label::kFake);
  };
  CHECK(finite_diff_check(metric, p, 1e-6,
                          {pname::kDetW, pname::kDetB, pname::kLabelFake, pname::kLabelReal})
            .max_rel_error < 1e-4);
  auto binary = [&](Graph& g, const BoundParams& b) {
    return detect::nll_loss(g, detect::binary_head(g, b, g.constant(r), g.constant(h)), Label::kReal);
  };
  CHECK(finite_diff_check(binary, p, 1e-6, {pname::kBinaryW, pname::kBinaryB}).max_rel_error < 1e-4);
}

TEST_CASE("label embeddings start distinct") {
  ModelConfig c;
  c.vocab_size = 4;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    ParamSet p = init_params(c, rng);
    CHECK(p.at(pname::kLabelFake) != p.at(pname::kLabelReal));
  }
}
