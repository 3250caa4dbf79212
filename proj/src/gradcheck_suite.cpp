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
#include <cstdio>

#include "metafend/aggregator.hpp"
#include "metafend/error.hpp"
#include "metafend/gradcheck.hpp"
#include "metafend/meta.hpp"
#include "metafend/model.hpp"
#include "metafend/rng.hpp"

namespace metafend {

namespace {

using ad::Graph;
using ad::NodeId;
using ad::Op;

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = lo + (hi - lo) * uniform01(rng);
  return t;
}

// Values with magnitude in [0.2, 1] so relu kinks stay far away.
Tensor away_from_zero(Rng& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) {
    v = (0.2 + 0.8 * uniform01(rng)) * (uniform01(rng) < 0.5 ? -1.0 : 1.0);
  }
  return t;
}

// Reduces a node to a scalar with fixed random weights so no coordinate's
// gradient cancels by symmetry.
NodeId weighted_sum(Graph& g, NodeId node, std::uint64_t salt) {
  Rng rng = derive_rng(salt, "gradcheck-weights");
  const Tensor& v = g.value(node);
  return g.sum(g.mul(node, g.constant(random_tensor(rng, v.shape(), 0.5, 1.5))));
}

struct OpCase {
  Op op;
  std::vector<std::pair<Tensor, TensorLossBuilder>> variants;
};

std::vector<OpCase> op_cases(Rng& rng) {
  const Tensor c23 = random_tensor(rng, {2, 3});
  const Tensor c32 = random_tensor(rng, {3, 2});
  const Tensor c22 = random_tensor(rng, {2, 2});
  const Tensor c13 = random_tensor(rng, {1, 3});
  auto ws = [](Graph& g, NodeId n) { return weighted_sum(g, n, 7); };

  std::vector<OpCase> cases;
  cases.push_back({Op::kMatMul,
                   {{random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return ws(g, g.matmul(x, g.constant(c32))); }},
                    {random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return ws(g, g.matmul(g.constant(c22), x)); }}}});
  cases.push_back({Op::kTranspose,
                   {{random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return ws(g, g.transpose(x)); }}}});
  cases.push_back({Op::kAdd,
                   {{random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return ws(g, g.add(x, g.constant(c23))); }},
                    {random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return ws(g, g.add(g.constant(c23), x)); }}}});
  cases.push_back({Op::kAddRowBias,
                   {{random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) {
                       return ws(g, g.add_row_bias(x, g.constant(c13)));
                     }},
                    {random_tensor(rng, {1, 3}),
                     [=](Graph& g, NodeId x) {
                       return ws(g, g.add_row_bias(g.constant(c23), x));
                     }}}});
  cases.push_back({Op::kMul,
                   {{random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return g.sum(g.mul(x, g.constant(c23))); }},
                    {random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return g.sum(g.mul(g.constant(c23), x)); }}}});
  cases.push_back({Op::kScale,
                   {{random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return ws(g, g.scale(x, -1.7)); }}}});
  cases.push_back({Op::kConcatCols,
                   {{random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) {
                       return ws(g, g.concat_cols(x, g.constant(c22)));
                     }},
                    {random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) {
                       return ws(g, g.concat_cols(g.constant(c22), x));
                     }}}});
  cases.push_back({Op::kConcatRows,
                   {{random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) {
                       const std::vector<NodeId> parts{x, g.constant(c13)};
                       return ws(g, g.concat_rows(parts));
                     }},
                    {random_tensor(rng, {1, 3}),
                     [=](Graph& g, NodeId x) {
                       const std::vector<NodeId> parts{g.constant(c23), x};
                       return ws(g, g.concat_rows(parts));
                     }}}});
  cases.push_back({Op::kRelu,
                   {{away_from_zero(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return ws(g, g.relu(x)); }}}});
  cases.push_back({Op::kSoftmaxRows,
                   {{random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return ws(g, g.softmax_rows(x)); }}}});
  cases.push_back({Op::kLog,
                   {{random_tensor(rng, {2, 3}, 0.5, 2.0),
                     [=](Graph& g, NodeId x) { return ws(g, g.log(x, 1e-12)); }}}});
  cases.push_back({Op::kExp,
                   {{random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return ws(g, g.exp(x)); }}}});
  cases.push_back({Op::kRowL2Norm,
                   {{away_from_zero(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return ws(g, g.row_l2_norm(x)); }}}});
  cases.push_back({Op::kEmbedding,
                   {{random_tensor(rng, {5, 3}),
                     [=](Graph& g, NodeId x) { return ws(g, g.embedding(x, {1, 3, 3, 0})); }}}});
  cases.push_back({Op::kUnfold,
                   {{random_tensor(rng, {5, 3}),
                     [=](Graph& g, NodeId x) { return ws(g, g.unfold(x, 2)); }}}});
  {
    // Column entries spaced 0.1 apart so the maximum never changes hands.
    Tensor x({4, 3});
    const double order[4][3] = {{0, 3, 1}, {2, 0, 3}, {3, 1, 0}, {1, 2, 2.5}};
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 3; ++c) x(r, c) = 0.1 * order[r][c] + 0.05 * uniform01(rng);
    }
    cases.push_back({Op::kMaxOverTime,
                     {{x, [=](Graph& g, NodeId n) { return ws(g, g.max_over_time(n)); }}}});
  }
  cases.push_back({Op::kMean,
                   {{random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return g.scale(g.mean(x), 1.3); }}}});
  cases.push_back({Op::kSum,
                   {{random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return g.sum(x); }}}});
  cases.push_back({Op::kElement,
                   {{random_tensor(rng, {2, 3}),
                     [=](Graph& g, NodeId x) { return g.scale(g.element(x, 1, 2), 2.0); }}}});
  return cases;
}

// The straight-through rule must hand the soft path's gradient through
// unchanged: analytic gradient through the one-hot versus central
// differences of the same loss with the soft sample in its place.
double straight_through_error(Rng& rng, double eps) {
  const Tensor logits = random_tensor(rng, {1, 4});
  const std::vector<double> noise = aggregate::draw_gumbel_noise(rng, 4);
  const double tau = 0.7;
  auto build = [&](Graph& g, NodeId x, bool hard) {
    const NodeId a = g.softmax_rows(x);
    const auto sample = aggregate::gumbel_st_sample(g, a, tau, noise);
    return weighted_sum(g, hard ? sample.hard : sample.soft, 11);
  };
  Graph g;
  const NodeId x = g.parameter("x", logits);
  const NodeId loss = build(g, x, true);
  const std::vector<NodeId> wrt{x};
  const Tensor analytic = g.gradients(loss, wrt).front();

  double worst = 0.0;
  for (std::size_t i = 0; i < logits.numel(); ++i) {
    auto at = [&](double delta) {
      Tensor shifted = logits;
      shifted[i] += delta;
      Graph h;
      return h.value(build(h, h.constant(shifted), false))[0];
    };
    const double numeric = (at(eps) - at(-eps)) / (2.0 * eps);
    worst = std::max(worst, std::abs(analytic[i] - numeric) /
                                std::max(1e-8, std::abs(numeric)));
  }
  return worst;
}

struct TinyProblem {
  ModelConfig model;
  ParamSet params;
  std::vector<Example> support;
  std::vector<Example> query;
};

TinyProblem tiny_problem(Mode mode, std::uint64_t seed) {
  TinyProblem t;
  t.model.vocab_size = 7;
  t.model.emb_dim = 3;
  t.model.n_filters = 2;
  t.model.max_window = 3;
  t.model.max_len = 4;
  t.model.feature_dim = 3;
  t.model.dim = 3;
  t.model.visual_dim = 2;
  t.model.head = head_for(mode);
  Rng rng = derive_rng(seed, "gradcheck-init");
  t.params = init_params(t.model, rng);
  // Nonzero biases keep ReLU units off their kinks.
  for (const auto& name : t.params.names()) {
    const Shape shape = t.params.at(name).shape();
    if (shape[0] == 1) t.params = t.params.with(name, random_tensor(rng, shape, 0.3, 0.8));
  }
  // A large context bias keeps the aggregated context alive, so every mode's
  // aggregation path actually reaches the loss.
  t.params = t.params.with(pname::kCtxB, random_tensor(rng, {1, t.model.dim}, 2.0, 3.0));
  Rng data = derive_rng(seed, "gradcheck-data");
  auto example = [&](std::size_t i, Label label) {
    Example ex;
    ex.id = "p" + std::to_string(i);
    for (std::size_t j = 0; j < t.model.max_len; ++j) {
      ex.tokens.push_back(static_cast<std::int32_t>(1 + (i * 3 + j * 5) % 6));
    }
    ex.visual = std::vector<double>{uniform01(data) + 0.1, uniform01(data) + 0.1};
    ex.label = label;
    return ex;
  };
  t.support = {example(0, Label::kFake), example(1, Label::kReal), example(2, Label::kReal)};
  t.query = {example(3, Label::kFake), example(4, Label::kReal)};
  return t;
}

}  // namespace

std::vector<ComponentCheck> gradcheck_suite(std::uint64_t seed, double eps) {
  std::vector<ComponentCheck> out;
  Rng rng = derive_rng(seed, "gradcheck");
  for (const auto& c : op_cases(rng)) {
    double worst = 0.0;
    for (const auto& [x, builder] : c.variants) {
      worst = std::max(worst, finite_diff_check(builder, x, eps));
    }
    out.push_back({"op:" + std::string(ad::op_name(c.op)), worst, ""});
  }
  out.push_back({"op:" + std::string(ad::op_name(Op::kStraightThrough)),
                 straight_through_error(rng, eps), "against the soft relaxation"});

  for (Mode mode : {Mode::kMetafend, Mode::kSoftAttn, Mode::kCnpMean, Mode::kMaml,
                    Mode::kBinaryHead}) {
    const TinyProblem t = tiny_problem(mode, seed);
    const LossBuilder builder = [&](Graph& g, const BoundParams& p) {
      g.set_detach_straight_through(true);
      Rng noise = derive_rng(seed, "gradcheck-noise");
      const Sampling sampling{0.8, &noise};
      const NodeId s = support_loss(g, p, t.model, mode, t.support, sampling);
      const NodeId q = query_loss(g, p, t.model, mode, t.support, t.query, sampling);
      return g.add(s, q);
    };
    const GradCheckReport r = finite_diff_check(builder, t.params, eps);
    char detail[160];
    std::snprintf(detail, sizeof(detail), "worst %s[%zu] analytic=%.6g numeric=%.6g",
                  r.worst_param.c_str(), r.worst_index, r.analytic, r.numeric);
    out.push_back({"pipeline:" + std::string(mode_name(mode)), r.max_rel_error, detail});
  }
  return out;
}

}  // namespace metafend
