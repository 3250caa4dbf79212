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

#include "metafend/detector.hpp"

#include "metafend/error.hpp"
#include "metafend/model_config.hpp"

namespace metafend::detect {

ad::NodeId detect(ad::Graph& g, const BoundParams& p, ad::NodeId context,
                  ad::NodeId target) {
  return g.add_row_bias(g.matmul(g.concat_cols(context, target), p[pname::kDetW]),
                        p[pname::kDetB]);
}

ad::NodeId label_similarity(ad::Graph& g, ad::NodeId output, ad::NodeId label_vec) {
  return g.row_l2_norm(g.mul(output, label_vec));
}

ad::NodeId predict_proba(ad::Graph& g, const BoundParams& p, ad::NodeId output) {
  const ad::NodeId fake = label_similarity(g, output, p[pname::kLabelFake]);
  const ad::NodeId real = label_similarity(g, output, p[pname::kLabelReal]);
  return g.softmax_rows(g.concat_cols(fake, real));
}

ad::NodeId binary_head(ad::Graph& g, const BoundParams& p, ad::NodeId context,
                       ad::NodeId target) {
  const ad::NodeId logits = g.add_row_bias(
      g.matmul(g.concat_cols(context, target), p[pname::kBinaryW]),
      p[pname::kBinaryB]);
  return g.softmax_rows(logits);
}

ad::NodeId nll_loss(ad::Graph& g, ad::NodeId probs, Label label) {
  const Tensor& v = g.value(probs);
  if (v.rows() != 1 || v.cols() != 2) {
    throw ShapeError("nll_loss: expected a 1 x 2 probability row, got " +
                     shape_string(v.shape()));
  }
  const ad::NodeId p_label = g.element(probs, 0, static_cast<std::size_t>(label));
  return g.scale(g.log(p_label, kLossFloor), -1.0);
}

}  // namespace metafend::detect
