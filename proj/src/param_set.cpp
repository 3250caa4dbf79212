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

#include "metafend/param_set.hpp"

#include "metafend/error.hpp"

namespace metafend {

void ParamSet::insert(std::string name, Tensor value) {
  if (tensors_.count(name)) throw ConfigError("param set: duplicate name " + name);
  tensors_.emplace(std::move(name), std::make_shared<const Tensor>(std::move(value)));
}

ParamSet ParamSet::with(const std::string& name, Tensor value) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ConfigError("param set: unknown name " + name);
  if (!it->second->same_shape(value)) {
    throw ShapeError("param set: " + name + " has shape " +
                     shape_string(it->second->shape()) + ", replacement is " +
                     shape_string(value.shape()));
  }
  ParamSet out = *this;
  out.tensors_[name] = std::make_shared<const Tensor>(std::move(value));
  return out;
}

bool ParamSet::contains(const std::string& name) const {
  return tensors_.count(name) != 0;
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ConfigError("param set: unknown name " + name);
  return *it->second;
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, _] : tensors_) out.push_back(name);
  return out;
}

std::size_t ParamSet::total_values() const {
  std::size_t total = 0;
  for (const auto& [_, t] : tensors_) total += t->numel();
  return total;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.tensors_.size() != b.tensors_.size()) return false;
  auto ia = a.tensors_.begin();
  auto ib = b.tensors_.begin();
  for (; ia != a.tensors_.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !(*ia->second == *ib->second)) return false;
  }
  return true;
}

BoundParams::BoundParams(ad::Graph& graph, const ParamSet& params) {
  for (const auto& [name, tensor] : params) {
    nodes_.emplace(name, graph.parameter(name, *tensor));
  }
}

ad::NodeId BoundParams::operator[](const std::string& name) const {
  auto it = nodes_.find(name);
  if (it == nodes_.end()) throw ConfigError("bound params: missing " + name);
  return it->second;
}

}  // namespace metafend
