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

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "metafend/graph.hpp"
#include "metafend/tensor.hpp"

namespace metafend {

using GradMap = std::map<std::string, Tensor>;

// Named, immutable trainable tensors. Copies share storage, so handing a
// ParamSet to a worker or deriving an adapted copy is cheap; replacing a
// tensor never disturbs other holders.
class ParamSet {
 public:
  ParamSet() = default;

  void insert(std::string name, Tensor value);
  // Functional replacement; throws if `name` is unknown or the shape changes.
  ParamSet with(const std::string& name, Tensor value) const;

  bool contains(const std::string& name) const;
  const Tensor& at(const std::string& name) const;
  std::vector<std::string> names() const;
  std::size_t size() const { return tensors_.size(); }
  std::size_t total_values() const;

  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  std::map<std::string, std::shared_ptr<const Tensor>> tensors_;
};

// Graph handles of a ParamSet bound as parameter leaves.
class BoundParams {
 public:
  BoundParams(ad::Graph& graph, const ParamSet& params);

  ad::NodeId operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return nodes_.count(name) != 0; }
  const std::map<std::string, ad::NodeId>& nodes() const { return nodes_; }

 private:
  std::map<std::string, ad::NodeId> nodes_;
};

}  // namespace metafend
