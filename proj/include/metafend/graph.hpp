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

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metafend/tensor.hpp"

namespace metafend::ad {

enum class Op : std::uint8_t {
  kLeaf,
  kMatMul,
  kTranspose,
  kAdd,
  kAddRowBias,
  kMul,
  kScale,
  kConcatCols,
  kConcatRows,
  kRelu,
  kSoftmaxRows,
  kLog,
  kExp,
  kRowL2Norm,
  kEmbedding,
  kUnfold,
  kMaxOverTime,
  kMean,
  kSum,
  kElement,
  kStraightThrough,
};

std::string_view op_name(Op op);
std::optional<Op> op_from_name(std::string_view name);
// Every op except kLeaf, in declaration order.
std::span<const Op> all_ops();

struct NodeId {
  std::uint32_t index = 0;
  friend auto operator<=>(NodeId, NodeId) = default;
};

// Append-only record of a forward computation. Inputs always precede the
// node that consumes them, so node order is a topological order and the
// backward sweep is a single reverse pass.
//
// A Graph is not thread-safe; give each unit of work its own.
class Graph {
 public:
  // Leaves. Parameters carry a name and are reported by
  // parameter_gradients(); constants are anonymous.
  NodeId parameter(std::string name, Tensor value);
  NodeId constant(Tensor value);

  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  NodeId add(NodeId a, NodeId b);
  // a: m x n, bias: 1 x n (or rank-1 n), added to every row.
  NodeId add_row_bias(NodeId a, NodeId bias);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId concat_cols(std::span<const NodeId> parts);
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId concat_rows(std::span<const NodeId> parts);
  NodeId relu(NodeId a);
  NodeId softmax_rows(NodeId a);
  // log(max(x, floor)). The derivative is zero where the floor is active.
  NodeId log(NodeId a, double floor = 0.0);
  NodeId exp(NodeId a);
  // m x n -> m x 1 Euclidean norm of each row.
  NodeId row_l2_norm(NodeId a);
  // Gathers rows of `table` (V x e) -> L x e.
  NodeId embedding(NodeId table, std::vector<std::int32_t> indices);
  // L x e -> (L - window + 1) x (window * e); row t is rows t..t+window-1
  // laid end to end. Turns a 1-D convolution into a matmul.
  NodeId unfold(NodeId a, std::size_t window);
  // T x n -> 1 x n column-wise maximum.
  NodeId max_over_time(NodeId a);
  NodeId mean(NodeId a);
  NodeId sum(NodeId a);
  NodeId element(NodeId a, std::size_t row, std::size_t col);
  // Forward value is `forward_value`; the backward pass hands the incoming
  // gradient to `soft` unchanged.
  NodeId straight_through(NodeId soft, Tensor forward_value);

  // Generic dispatch for ops that take no attributes beyond their inputs.
  NodeId apply(Op op, std::span<const NodeId> inputs);

  const Tensor& value(NodeId id) const;
  Op op(NodeId id) const;
  bool is_leaf(NodeId id) const;
  bool is_parameter(NodeId id) const;
  const std::string& name(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  // d(seed * loss)/d(leaf) for each requested leaf. Leaves the loss does not
  // depend on get a zero tensor of their own shape.
  std::vector<Tensor> gradients(NodeId loss, std::span<const NodeId> wrt,
                                double seed = 1.0) const;
  std::map<std::string, Tensor> parameter_gradients(NodeId loss) const;

  // When set, straight-through nodes pass no gradient. Gradient checks use
  // this so the analytic gradient is the true derivative of the forward map.
  void set_detach_straight_through(bool detach) { detach_st_ = detach; }

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::vector<NodeId> inputs;
    Tensor value;
    bool parameter = false;
    std::string name;
    double scalar = 0.0;
    std::size_t a = 0;
    std::size_t b = 0;
    std::vector<std::int32_t> indices;
  };

  const Node& node(NodeId id) const;
  NodeId push(Node node);
  void backward_node(const Node& n, const Tensor& gout,
                     std::vector<Tensor>& grads,
                     const std::vector<char>& needed) const;

  std::vector<Node> nodes_;
  bool detach_st_ = false;
};

// Test hook: while alive, the backward rule of `op` returns its gradient
// with the sign flipped. Used to prove the gradient checks catch faults.
class ScopedBackwardFault {
 public:
  explicit ScopedBackwardFault(Op op);
  ~ScopedBackwardFault();
  ScopedBackwardFault(const ScopedBackwardFault&) = delete;
  ScopedBackwardFault& operator=(const ScopedBackwardFault&) = delete;
};

}  // namespace metafend::ad
