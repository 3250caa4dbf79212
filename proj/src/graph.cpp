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

#include "metafend/graph.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>

#include "metafend/error.hpp"

namespace metafend::ad {

namespace {

constexpr std::array<std::pair<Op, std::string_view>, 21> kOpNames{{
    {Op::kLeaf, "leaf"},
    {Op::kMatMul, "matmul"},
    {Op::kTranspose, "transpose"},
    {Op::kAdd, "add"},
    {Op::kAddRowBias, "add_row_bias"},
    {Op::kMul, "mul"},
    {Op::kScale, "scale"},
    {Op::kConcatCols, "concat_cols"},
    {Op::kConcatRows, "concat_rows"},
    {Op::kRelu, "relu"},
    {Op::kSoftmaxRows, "softmax_rows"},
    {Op::kLog, "log"},
    {Op::kExp, "exp"},
    {Op::kRowL2Norm, "row_l2_norm"},
    {Op::kEmbedding, "embedding"},
    {Op::kUnfold, "unfold"},
    {Op::kMaxOverTime, "max_over_time"},
    {Op::kMean, "mean"},
    {Op::kSum, "sum"},
    {Op::kElement, "element"},
    {Op::kStraightThrough, "straight_through"},
}};

constexpr std::array<Op, 20> kAllOps{
    Op::kMatMul,     Op::kTranspose,   Op::kAdd,       Op::kAddRowBias,
    Op::kMul,        Op::kScale,       Op::kConcatCols, Op::kConcatRows,
    Op::kRelu,       Op::kSoftmaxRows, Op::kLog,       Op::kExp,
    Op::kRowL2Norm,  Op::kEmbedding,   Op::kUnfold,    Op::kMaxOverTime,
    Op::kMean,       Op::kSum,         Op::kElement,   Op::kStraightThrough,
};

std::atomic<int> g_fault_op{-1};

[[noreturn]] void shape_fail(Op op, const std::string& detail) {
  throw ShapeError(std::string(op_name(op)) + ": " + detail);
}

std::string shapes_of(const Tensor& a, const Tensor& b) {
  return shape_string(a.shape()) + " vs " + shape_string(b.shape());
}

void accumulate(Tensor& into, const Tensor& contrib, double sign) {
  if (into.numel() == 0) {
    into = contrib;
    if (sign < 0) {
      for (double& v : into.data()) v = -v;
    }
    return;
  }
  auto dst = into.data();
  auto src = contrib.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += sign * src[i];
}

// C = A * B for row-major matrices viewed as rows x cols.
void gemm(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b,
          Tensor& c) {
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  const std::size_t lda = a.cols();
  const std::size_t ldb = b.cols();
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* C = c.data().data();
  std::fill(C, C + m * n, 0.0);
  if (trans_b) {
    // Rows of A against rows of B: both walks are contiguous.
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = B + j * ldb;
        double acc = 0.0;
        if (trans_a) {
          for (std::size_t p = 0; p < k; ++p) acc += A[p * lda + i] * brow[p];
        } else {
          const double* arow = A + i * lda;
          for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        }
        C[i * n + j] = acc;
      }
    }
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = C + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = trans_a ? A[p * lda + i] : A[i * lda + p];
      if (av == 0.0) continue;
      const double* brow = B + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

std::string_view op_name(Op op) {
  for (const auto& [o, name] : kOpNames) {
    if (o == op) return name;
  }
  return "unknown";
}

std::optional<Op> op_from_name(std::string_view name) {
  for (const auto& [o, n] : kOpNames) {
    if (n == name) return o;
  }
  return std::nullopt;
}

std::span<const Op> all_ops() { return kAllOps; }

ScopedBackwardFault::ScopedBackwardFault(Op op) {
  g_fault_op.store(static_cast<int>(op));
}

ScopedBackwardFault::~ScopedBackwardFault() { g_fault_op.store(-1); }

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw Error("graph: unknown node id " + std::to_string(id.index));
  }
  return nodes_[id.index];
}

NodeId Graph::push(Node n) {
  if (!n.value.all_finite()) {
    throw NumericError(std::string(op_name(n.op)) +
                       ": non-finite value in output " +
                       shape_string(n.value.shape()));
  }
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Graph::value(NodeId id) const { return node(id).value; }
Op Graph::op(NodeId id) const { return node(id).op; }
bool Graph::is_leaf(NodeId id) const { return node(id).op == Op::kLeaf; }
bool Graph::is_parameter(NodeId id) const { return node(id).parameter; }
const std::string& Graph::name(NodeId id) const { return node(id).name; }

NodeId Graph::parameter(std::string name, Tensor value) {
  Node n;
  n.parameter = true;
  n.name = std::move(name);
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.cols() != B.rows()) shape_fail(Op::kMatMul, shapes_of(A, B));
  Node n;
  n.op = Op::kMatMul;
  n.inputs = {a, b};
  n.value = Tensor({A.rows(), B.cols()});
  gemm(A, false, B, false, n.value);
  return push(std::move(n));
}

NodeId Graph::transpose(NodeId a) {
  const Tensor& A = value(a);
  Node n;
  n.op = Op::kTranspose;
  n.inputs = {a};
  n.value = Tensor({A.cols(), A.rows()});
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t c = 0; c < A.cols(); ++c) n.value(c, r) = A(r, c);
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_fail(Op::kAdd, shapes_of(A, B));
  Node n;
  n.op = Op::kAdd;
  n.inputs = {a, b};
  n.value = A;
  for (std::size_t i = 0; i < A.numel(); ++i) n.value[i] += B[i];
  return push(std::move(n));
}

NodeId Graph::add_row_bias(NodeId a, NodeId bias) {
  const Tensor& A = value(a);
  const Tensor& B = value(bias);
  if (B.rows() != 1 || B.cols() != A.cols())
    shape_fail(Op::kAddRowBias, shapes_of(A, B));
  Node n;
  n.op = Op::kAddRowBias;
  n.inputs = {a, bias};
  n.value = A;
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t c = 0; c < A.cols(); ++c) n.value(r, c) += B[c];
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) shape_fail(Op::kMul, shapes_of(A, B));
  Node n;
  n.op = Op::kMul;
  n.inputs = {a, b};
  n.value = A;
  for (std::size_t i = 0; i < A.numel(); ++i) n.value[i] *= B[i];
  return push(std::move(n));
}

NodeId Graph::scale(NodeId a, double factor) {
  Node n;
  n.op = Op::kScale;
  n.inputs = {a};
  n.scalar = factor;
  n.value = value(a);
  for (double& v : n.value.data()) v *= factor;
  return push(std::move(n));
}

NodeId Graph::concat_cols(NodeId a, NodeId b) {
  const std::array<NodeId, 2> parts{a, b};
  return concat_cols(parts);
}

NodeId Graph::concat_cols(std::span<const NodeId> parts) {
  if (parts.empty()) shape_fail(Op::kConcatCols, "no inputs");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  for (NodeId p : parts) {
    const Tensor& t = value(p);
    if (t.rows() != rows) shape_fail(Op::kConcatCols, shapes_of(value(parts[0]), t));
    cols += t.cols();
  }
  Node n;
  n.op = Op::kConcatCols;
  n.inputs.assign(parts.begin(), parts.end());
  n.value = Tensor({rows, cols});
  std::size_t offset = 0;
  for (NodeId p : parts) {
    const Tensor& t = value(p);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < t.cols(); ++c) n.value(r, offset + c) = t(r, c);
    offset += t.cols();
  }
  return push(std::move(n));
}

NodeId Graph::concat_rows(std::span<const NodeId> parts) {
  if (parts.empty()) shape_fail(Op::kConcatRows, "no inputs");
  const std::size_t cols = value(parts[0]).cols();
  std::size_t rows = 0;
  for (NodeId p : parts) {
    const Tensor& t = value(p);
    if (t.cols() != cols) shape_fail(Op::kConcatRows, shapes_of(value(parts[0]), t));
    rows += t.rows();
  }
  Node n;
  n.op = Op::kConcatRows;
  n.inputs.assign(parts.begin(), parts.end());
  std::vector<double> data;
  data.reserve(rows * cols);
  for (NodeId p : parts) {
    auto src = value(p).data();
    data.insert(data.end(), src.begin(), src.end());
  }
  n.value = Tensor({rows, cols}, std::move(data));
  return push(std::move(n));
}

NodeId Graph::relu(NodeId a) {
  Node n;
  n.op = Op::kRelu;
  n.inputs = {a};
  n.value = value(a);
  for (double& v : n.value.data()) v = v > 0.0 ? v : 0.0;
  return push(std::move(n));
}

NodeId Graph::softmax_rows(NodeId a) {
  const Tensor& A = value(a);
  Node n;
  n.op = Op::kSoftmaxRows;
  n.inputs = {a};
  n.value = A;
  for (std::size_t r = 0; r < A.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < A.cols(); ++c) mx = std::max(mx, A(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < A.cols(); ++c) {
      const double e = std::exp(A(r, c) - mx);
      n.value(r, c) = e;
      total += e;
    }
    for (std::size_t c = 0; c < A.cols(); ++c) n.value(r, c) /= total;
  }
  return push(std::move(n));
}

NodeId Graph::log(NodeId a, double floor) {
  Node n;
  n.op = Op::kLog;
  n.inputs = {a};
  n.scalar = floor;
  n.value = value(a);
  for (double& v : n.value.data()) v = std::log(std::max(v, floor));
  return push(std::move(n));
}

NodeId Graph::exp(NodeId a) {
  Node n;
  n.op = Op::kExp;
  n.inputs = {a};
  n.value = value(a);
  for (double& v : n.value.data()) v = std::exp(v);
  return push(std::move(n));
}

NodeId Graph::row_l2_norm(NodeId a) {
  const Tensor& A = value(a);
  Node n;
  n.op = Op::kRowL2Norm;
  n.inputs = {a};
  n.value = Tensor({A.rows(), 1});
  for (std::size_t r = 0; r < A.rows(); ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < A.cols(); ++c) total += A(r, c) * A(r, c);
    n.value[r] = std::sqrt(total);
  }
  return push(std::move(n));
}

NodeId Graph::embedding(NodeId table, std::vector<std::int32_t> indices) {
  const Tensor& T = value(table);
  if (indices.empty()) shape_fail(Op::kEmbedding, "empty index sequence");
  for (std::int32_t idx : indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= T.rows()) {
      shape_fail(Op::kEmbedding, "index " + std::to_string(idx) +
                                     " out of range for table " +
                                     shape_string(T.shape()));
    }
  }
  Node n;
  n.op = Op::kEmbedding;
  n.inputs = {table};
  const std::size_t e = T.cols();
  n.value = Tensor({indices.size(), e});
  for (std::size_t t = 0; t < indices.size(); ++t)
    for (std::size_t c = 0; c < e; ++c) n.value(t, c) = T(indices[t], c);
  n.indices = std::move(indices);
  return push(std::move(n));
}

NodeId Graph::unfold(NodeId a, std::size_t window) {
  const Tensor& A = value(a);
  if (window == 0 || window > A.rows()) {
    shape_fail(Op::kUnfold, "window " + std::to_string(window) +
                                " does not fit " + shape_string(A.shape()));
  }
  const std::size_t steps = A.rows() - window + 1;
  const std::size_t e = A.cols();
  Node n;
  n.op = Op::kUnfold;
  n.inputs = {a};
  n.a = window;
  n.value = Tensor({steps, window * e});
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t w = 0; w < window; ++w)
      for (std::size_t c = 0; c < e; ++c) n.value(t, w * e + c) = A(t + w, c);
  return push(std::move(n));
}

NodeId Graph::max_over_time(NodeId a) {
  const Tensor& A = value(a);
  Node n;
  n.op = Op::kMaxOverTime;
  n.inputs = {a};
  n.value = Tensor({1, A.cols()});
  for (std::size_t c = 0; c < A.cols(); ++c) {
    double best = A(0, c);
    for (std::size_t r = 1; r < A.rows(); ++r) best = std::max(best, A(r, c));
    n.value[c] = best;
  }
  return push(std::move(n));
}

NodeId Graph::mean(NodeId a) {
  const Tensor& A = value(a);
  double total = 0.0;
  for (double v : A.data()) total += v;
  Node n;
  n.op = Op::kMean;
  n.inputs = {a};
  n.value = Tensor::scalar(total / static_cast<double>(A.numel()));
  return push(std::move(n));
}

NodeId Graph::sum(NodeId a) {
  double total = 0.0;
  for (double v : value(a).data()) total += v;
  Node n;
  n.op = Op::kSum;
  n.inputs = {a};
  n.value = Tensor::scalar(total);
  return push(std::move(n));
}

NodeId Graph::element(NodeId a, std::size_t row, std::size_t col) {
  const Tensor& A = value(a);
  if (row >= A.rows() || col >= A.cols()) {
    shape_fail(Op::kElement, "(" + std::to_string(row) + "," +
                                 std::to_string(col) + ") outside " +
                                 shape_string(A.shape()));
  }
  Node n;
  n.op = Op::kElement;
  n.inputs = {a};
  n.a = row;
  n.b = col;
  n.value = Tensor::scalar(A(row, col));
  return push(std::move(n));
}

NodeId Graph::straight_through(NodeId soft, Tensor forward_value) {
  if (!value(soft).same_shape(forward_value)) {
    shape_fail(Op::kStraightThrough, shapes_of(value(soft), forward_value));
  }
  Node n;
  n.op = Op::kStraightThrough;
  n.inputs = {soft};
  n.value = std::move(forward_value);
  return push(std::move(n));
}

NodeId Graph::apply(Op op, std::span<const NodeId> in) {
  auto want = [&](std::size_t count) {
    if (in.size() != count) {
      shape_fail(op, "expected " + std::to_string(count) + " inputs, got " +
                         std::to_string(in.size()));
    }
  };
  switch (op) {
    case Op::kMatMul: want(2); return matmul(in[0], in[1]);
    case Op::kTranspose: want(1); return transpose(in[0]);
    case Op::kAdd: want(2); return add(in[0], in[1]);
    case Op::kAddRowBias: want(2); return add_row_bias(in[0], in[1]);
    case Op::kMul: want(2); return mul(in[0], in[1]);
    case Op::kConcatCols: return concat_cols(in);
    case Op::kConcatRows: return concat_rows(in);
    case Op::kRelu: want(1); return relu(in[0]);
    case Op::kSoftmaxRows: want(1); return softmax_rows(in[0]);
    case Op::kLog: want(1); return log(in[0]);
    case Op::kExp: want(1); return exp(in[0]);
    case Op::kRowL2Norm: want(1); return row_l2_norm(in[0]);
    case Op::kMaxOverTime: want(1); return max_over_time(in[0]);
    case Op::kMean: want(1); return mean(in[0]);
    case Op::kSum: want(1); return sum(in[0]);
    default:
      throw Error(std::string(op_name(op)) +
                  ": op needs attributes, use the typed builder");
  }
}

std::vector<Tensor> Graph::gradients(NodeId loss, std::span<const NodeId> wrt,
                                     double seed) const {
  const Node& ln = node(loss);
  if (ln.value.numel() != 1) {
    throw ShapeError("gradients: loss must be scalar, got " +
                     shape_string(ln.value.shape()));
  }
  for (NodeId w : wrt) {
    if (!is_leaf(w)) {
      throw Error("gradients: node " + std::to_string(w.index) +
                  " is not a leaf (" + std::string(op_name(op(w))) + ")");
    }
  }

  // Only nodes downstream of a requested leaf need a backward rule.
  std::vector<char> needed(loss.index + 1, 0);
  for (NodeId w : wrt) {
    if (w.index <= loss.index) needed[w.index] = 1;
  }
  for (std::uint32_t i = 0; i <= loss.index; ++i) {
    if (needed[i]) continue;
    for (NodeId in : nodes_[i].inputs) {
      if (needed[in.index]) {
        needed[i] = 1;
        break;
      }
    }
  }

  std::vector<Tensor> grads(loss.index + 1);
  if (needed[loss.index]) {
    grads[loss.index] = Tensor(ln.value.shape(), {seed});
    for (std::uint32_t i = loss.index + 1; i-- > 0;) {
      const Node& n = nodes_[i];
      if (!needed[i] || grads[i].numel() == 0 || n.op == Op::kLeaf) continue;
      backward_node(n, grads[i], grads, needed);
    }
  }

  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (NodeId w : wrt) {
    if (w.index <= loss.index && grads[w.index].numel() != 0) {
      out.push_back(grads[w.index]);
    } else {
      out.push_back(Tensor::zeros(value(w).shape()));
    }
  }
  return out;
}

std::map<std::string, Tensor> Graph::parameter_gradients(NodeId loss) const {
  std::vector<NodeId> params;
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].parameter) params.push_back(NodeId{i});
  }
  auto grads = gradients(loss, params);
  std::map<std::string, Tensor> out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto [it, inserted] = out.emplace(nodes_[params[i].index].name, grads[i]);
    if (!inserted) {
      // Same parameter bound twice: gradients add.
      for (std::size_t j = 0; j < grads[i].numel(); ++j) it->second[j] += grads[i][j];
    }
  }
  return out;
}

void Graph::backward_node(const Node& n, const Tensor& gout,
                          std::vector<Tensor>& grads,
                          const std::vector<char>& needed) const {
  const double sign = g_fault_op.load() == static_cast<int>(n.op) ? -1.0 : 1.0;
  auto wants = [&](std::size_t i) { return needed[n.inputs[i].index] != 0; };
  auto give = [&](std::size_t i, const Tensor& contrib) {
    accumulate(grads[n.inputs[i].index], contrib, sign);
  };
  auto in = [&](std::size_t i) -> const Tensor& {
    return nodes_[n.inputs[i].index].value;
  };

  switch (n.op) {
    case Op::kLeaf:
      return;
    case Op::kMatMul: {
      const Tensor& A = in(0);
      const Tensor& B = in(1);
      if (wants(0)) {
        Tensor ga({A.rows(), A.cols()});
        gemm(gout, false, B, true, ga);
        give(0, Tensor(A.shape(), std::vector<double>(ga.values())));
      }
      if (wants(1)) {
        Tensor gb({B.rows(), B.cols()});
        gemm(A, true, gout, false, gb);
        give(1, Tensor(B.shape(), std::vector<double>(gb.values())));
      }
      return;
    }
    case Op::kTranspose: {
      const Tensor& A = in(0);
      Tensor g(A.shape());
      for (std::size_t r = 0; r < A.rows(); ++r)
        for (std::size_t c = 0; c < A.cols(); ++c) g(r, c) = gout(c, r);
      give(0, g);
      return;
    }
    case Op::kAdd:
      if (wants(0)) give(0, gout);
      if (wants(1)) give(1, gout);
      return;
    case Op::kAddRowBias: {
      if (wants(0)) give(0, gout);
      if (wants(1)) {
        Tensor gb(in(1).shape());
        for (std::size_t r = 0; r < gout.rows(); ++r)
          for (std::size_t c = 0; c < gout.cols(); ++c) gb[c] += gout(r, c);
        give(1, gb);
      }
      return;
    }
    case Op::kMul: {
      if (wants(0)) {
        Tensor g = gout;
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= in(1)[i];
        give(0, g);
      }
      if (wants(1)) {
        Tensor g = gout;
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= in(0)[i];
        give(1, g);
      }
      return;
    }
    case Op::kScale: {
      Tensor g = gout;
      for (double& v : g.data()) v *= n.scalar;
      give(0, g);
      return;
    }
    case Op::kConcatCols: {
      std::size_t offset = 0;
      for (std::size_t i = 0; i < n.inputs.size(); ++i) {
        const Tensor& t = in(i);
        if (wants(i)) {
          Tensor g(t.shape());
          for (std::size_t r = 0; r < t.rows(); ++r)
            for (std::size_t c = 0; c < t.cols(); ++c) g(r, c) = gout(r, offset + c);
          give(i, g);
        }
        offset += t.cols();
      }
      return;
    }
    case Op::kConcatRows: {
      std::size_t offset = 0;
      for (std::size_t i = 0; i < n.inputs.size(); ++i) {
        const Tensor& t = in(i);
        if (wants(i)) {
          auto src = gout.data().subspan(offset, t.numel());
          give(i, Tensor(t.shape(), std::vector<double>(src.begin(), src.end())));
        }
        offset += t.numel();
      }
      return;
    }
    case Op::kRelu: {
      Tensor g = gout;
      for (std::size_t i = 0; i < g.numel(); ++i) {
        if (!(in(0)[i] > 0.0)) g[i] = 0.0;
      }
      give(0, g);
      return;
    }
    case Op::kSoftmaxRows: {
      const Tensor& y = n.value;
      Tensor g(y.shape());
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) dot += gout(r, c) * y(r, c);
        for (std::size_t c = 0; c < y.cols(); ++c) g(r, c) = y(r, c) * (gout(r, c) - dot);
      }
      give(0, g);
      return;
    }
    case Op::kLog: {
      Tensor g = gout;
      for (std::size_t i = 0; i < g.numel(); ++i) {
        const double x = in(0)[i];
        g[i] = x > n.scalar ? g[i] / x : 0.0;
      }
      give(0, g);
      return;
    }
    case Op::kExp: {
      Tensor g = gout;
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= n.value[i];
      give(0, g);
      return;
    }
    case Op::kRowL2Norm: {
      const Tensor& A = in(0);
      Tensor g(A.shape());
      for (std::size_t r = 0; r < A.rows(); ++r) {
        const double norm = n.value[r];
        if (norm == 0.0) continue;
        for (std::size_t c = 0; c < A.cols(); ++c) g(r, c) = gout[r] * A(r, c) / norm;
      }
      give(0, g);
      return;
    }
    case Op::kEmbedding: {
      const Tensor& T = in(0);
      Tensor g(T.shape());
      const std::size_t e = T.cols();
      for (std::size_t t = 0; t < n.indices.size(); ++t)
        for (std::size_t c = 0; c < e; ++c) g(n.indices[t], c) += gout(t, c);
      give(0, g);
      return;
    }
    case Op::kUnfold: {
      const Tensor& A = in(0);
      Tensor g(A.shape());
      const std::size_t window = n.a;
      const std::size_t e = A.cols();
      for (std::size_t t = 0; t < gout.rows(); ++t)
        for (std::size_t w = 0; w < window; ++w)
          for (std::size_t c = 0; c < e; ++c) g(t + w, c) += gout(t, w * e + c);
      give(0, g);
      return;
    }
    case Op::kMaxOverTime: {
      const Tensor& A = in(0);
      Tensor g(A.shape());
      for (std::size_t c = 0; c < A.cols(); ++c) {
        std::size_t best = 0;
        for (std::size_t r = 1; r < A.rows(); ++r) {
          if (A(r, c) > A(best, c)) best = r;
        }
        g(best, c) = gout[c];
      }
      give(0, g);
      return;
    }
    case Op::kMean:
    case Op::kSum: {
      const Tensor& A = in(0);
      const double scale =
          n.op == Op::kMean ? gout[0] / static_cast<double>(A.numel()) : gout[0];
      Tensor g(A.shape(), std::vector<double>(A.numel(), scale));
      give(0, g);
      return;
    }
    case Op::kElement: {
      Tensor g(in(0).shape());
      g(n.a, n.b) = gout[0];
      give(0, g);
      return;
    }
    case Op::kStraightThrough:
      if (!detach_st_) give(0, gout);
      return;
  }
}

}  // namespace metafend::ad
