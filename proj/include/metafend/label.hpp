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

#include <optional>
#include <string_view>

namespace metafend {

// Column order of every probability pair: fake first, real second.
enum class Label { kFake = 0, kReal = 1 };

constexpr std::string_view label_name(Label label) {
  return label == Label::kFake ? "fake" : "real";
}

constexpr std::optional<Label> parse_label(std::string_view text) {
  if (text == "fake") return Label::kFake;
  if (text == "real") return Label::kReal;
  return std::nullopt;
}

}  // namespace metafend
